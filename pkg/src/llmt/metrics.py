"""Exact-match scoring of parser predictions, per language."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from fractions import Fraction
from typing import Iterable, Optional, Sequence, Union

from .data import Dataset
from .lf import LogicalFormError, ParseTree, corrected_em, exact_match, parse_logical_form


class UnknownId(KeyError):
    def __str__(self) -> str:
        return f"prediction id {self.args[0]!r} is not in the gold set"


class DuplicatePredictionId(ValueError):
    def __str__(self) -> str:
        return f"prediction id {self.args[0]!r} appears more than once"


class LanguageSetMismatch(ValueError):
    pass


def round_half_up(x: Union[Fraction, float, Decimal], places: int = 1) -> float:
    if isinstance(x, Fraction):
        d = Decimal(x.numerator) / Decimal(x.denominator)
    else:
        d = Decimal(str(x))
    return float(d.quantize(Decimal(1).scaleb(-places), rounding=ROUND_HALF_UP))


@dataclass(frozen=True)
class LanguageScore:
    matches: int
    total: int

    @property
    def fraction(self) -> Fraction:
        return Fraction(100 * self.matches, self.total) if self.total else Fraction(0)

    @property
    def em(self) -> float:
        return round_half_up(self.fraction)


@dataclass
class EvalReport:
    per_language: dict[str, LanguageScore] = field(default_factory=dict)
    corrected: bool = True

    @property
    def avg_non_english(self) -> Optional[float]:
        """Mean EM over non-English languages (English is excluded, as in the
        usual multilingual tables)."""
        scores = [s.fraction for lang, s in self.per_language.items() if lang != "en"]
        if not scores:
            return None
        return round_half_up(sum(scores, Fraction(0)) / len(scores))

    def to_dict(self) -> dict:
        return {
            "per_language": {
                lang: {"matches": s.matches, "total": s.total, "em": s.em}
                for lang, s in sorted(self.per_language.items())
            },
            "avg_non_english": self.avg_non_english,
            "corrected": self.corrected,
        }

    @classmethod
    def from_dict(cls, d: dict) -> EvalReport:
        return cls(
            {lang: LanguageScore(v["matches"], v["total"]) for lang, v in d["per_language"].items()},
            d.get("corrected", True),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


Prediction = Union[ParseTree, str, None]


def _as_tree(pred: Prediction) -> Optional[ParseTree]:
    if pred is None or isinstance(pred, ParseTree):
        return pred
    try:
        return parse_logical_form(pred)
    except LogicalFormError:
        return None


def evaluate(
    predictions: Iterable[tuple[str, Prediction]], gold: Dataset, corrected: bool = True
) -> EvalReport:
    """Score predictions against ``gold``.

    A gold example without a prediction, or whose prediction does not parse,
    counts as a miss. ``corrected=False`` switches to order-sensitive
    string matching.
    """
    by_id: dict[str, Prediction] = {}
    for pid, pred in predictions:
        if pid not in gold:
            raise UnknownId(pid)
        if pid in by_id:
            raise DuplicatePredictionId(pid)
        by_id[pid] = pred
    match = corrected_em if corrected else exact_match
    tallies: dict[str, list[int]] = {}
    for ex in gold:
        t = tallies.setdefault(ex.language, [0, 0])
        t[1] += 1
        tree = _as_tree(by_id.get(ex.id))
        if tree is not None and match(tree, ex.logical_form):
            t[0] += 1
    return EvalReport({lang: LanguageScore(m, n) for lang, (m, n) in sorted(tallies.items())},
                      corrected)


@dataclass
class DiffTable:
    """Per-language EM deltas of each run against a baseline run."""

    languages: list[str]
    baseline: str
    runs: dict[str, EvalReport]
    deltas: dict[str, dict[str, float]]
    avg_deltas: dict[str, Optional[float]]

    def to_dict(self) -> dict:
        return {
            "baseline": self.baseline,
            "languages": self.languages,
            "em": {name: {l: r.per_language[l].em for l in self.languages}
                   for name, r in self.runs.items()},
            "avg_non_english": {name: r.avg_non_english for name, r in self.runs.items()},
            "deltas": self.deltas,
            "avg_deltas": self.avg_deltas,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        names = list(self.runs)
        w.writerow(["language"] + [f"{n}_em" for n in names]
                   + [f"{n}_delta" for n in names if n != self.baseline])
        for lang in self.languages:
            w.writerow([lang] + [f"{self.runs[n].per_language[lang].em:.1f}" for n in names]
                       + [f"{self.deltas[n][lang]:.1f}" for n in names if n != self.baseline])
        avgs = [self.runs[n].avg_non_english for n in names]
        w.writerow(["avg_non_english"] + ["" if a is None else f"{a:.1f}" for a in avgs]
                   + ["" if self.avg_deltas[n] is None else f"{self.avg_deltas[n]:.1f}"
                      for n in names if n != self.baseline])
        return buf.getvalue()


def _delta(a: float, b: float) -> float:
    return float(Decimal(str(a)) - Decimal(str(b)))


def compare_runs(reports: Sequence[EvalReport], names: Optional[Sequence[str]] = None) -> DiffTable:
    """Deltas of reports[1:] against reports[0], on the one-decimal EMs."""
    if not reports:
        raise ValueError("need at least one report")
    names = list(names) if names is not None else [f"run{i}" for i in range(len(reports))]
    if len(names) != len(reports) or len(set(names)) != len(names):
        raise ValueError("need one unique name per report")
    langs = set(reports[0].per_language)
    for name, r in zip(names, reports):
        if set(r.per_language) != langs:
            raise LanguageSetMismatch(
                f"{name}: {sorted(set(r.per_language) ^ langs)} differ from {names[0]}")
    base = reports[0]
    languages = sorted(langs)
    deltas, avg_deltas = {}, {}
    for name, r in zip(names[1:], reports[1:]):
        deltas[name] = {l: _delta(r.per_language[l].em, base.per_language[l].em)
                        for l in languages}
        a, b = r.avg_non_english, base.avg_non_english
        avg_deltas[name] = None if a is None or b is None else _delta(a, b)
    return DiffTable(languages, names[0], dict(zip(names, reports)), deltas, avg_deltas)
