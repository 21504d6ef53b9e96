"""Markdown and CSV tables from stored EvalReports."""

from __future__ import annotations

import csv
import io
import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Union

from .metrics import EvalReport

# run names like "top_p+filter@8": decoding label, then "@" and the sample count
_RUN_NAME = re.compile(r"^(?P<decoding>[^@]+)@(?P<samples>\d+)$")


@dataclass(frozen=True)
class Run:
    name: str
    report: EvalReport

    @property
    def grid_key(self) -> Optional[tuple[str, int]]:
        m = _RUN_NAME.match(self.name)
        return (m["decoding"], int(m["samples"])) if m else None


def _fmt(x: Optional[float]) -> str:
    return "-" if x is None else f"{x:.1f}"


def _languages(runs: Sequence[Run]) -> list[str]:
    langs = sorted({l for r in runs for l in r.report.per_language})
    # English is reported but kept out of the average, so list it first
    return (["en"] if "en" in langs else []) + [l for l in langs if l != "en"]


def _cells(run: Run, langs: Sequence[str]) -> list[str]:
    per = run.report.per_language
    return [_fmt(per[l].em) if l in per else "-" for l in langs] + [_fmt(run.report.avg_non_english)]


def em_table_markdown(runs: Sequence[Run]) -> str:
    """One row per run. If every run name is ``<decoding>@<samples>`` the table
    is a decoding x sample-count grid, grouped by decoding label."""
    langs = _languages(runs)
    grid = all(r.grid_key for r in runs)
    lines = []
    if grid:
        lines.append("| Decoding | #samples | " + " | ".join(langs) + " | Avg |")
        lines.append("|---|---:|" + "---:|" * (len(langs) + 1))
        order: list[str] = []
        for r in runs:
            if r.grid_key[0] not in order:
                order.append(r.grid_key[0])
        for dec in order:
            for r in sorted((r for r in runs if r.grid_key[0] == dec), key=lambda r: r.grid_key[1]):
                lines.append(f"| {dec} | {r.grid_key[1]} | " + " | ".join(_cells(r, langs)) + " |")
    else:
        lines.append("| Method | " + " | ".join(langs) + " | Avg |")
        lines.append("|---|" + "---:|" * (len(langs) + 1))
        for r in runs:
            lines.append(f"| {r.name} | " + " | ".join(_cells(r, langs)) + " |")
    return "\n".join(lines) + "\n"


def em_table_csv(runs: Sequence[Run]) -> str:
    langs = _languages(runs)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["run", "decoding", "samples"] + langs + ["avg_non_english"])
    for r in runs:
        dec, n = r.grid_key or ("", "")
        w.writerow([r.name, dec, n] + _cells(r, langs))
    return buf.getvalue()


def load_runs(specs: Sequence[str]) -> list[Run]:
    """Parse ``NAME=path/to/report.json`` arguments."""
    runs = []
    for spec in specs:
        name, sep, path = spec.partition("=")
        if not sep or not name or not path:
            raise ValueError(f"expected NAME=PATH, got {spec!r}")
        runs.append(Run(name, EvalReport.from_dict(_read_json(path))))
    return runs


def _read_json(path: Union[str, Path]) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))
