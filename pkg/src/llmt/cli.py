"""Command-line interface: ``llmt <subcommand> ...``.

Exit status is 0 on success, 1 for invalid input (bad flags, files, logical
forms or config) and 2 for runtime failures (backend, I/O).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .client import LLMError
from .config import ConfigError, PipelineConfig
from .data import (Dataset, DatasetLoadError, RecordError, load_dataset, load_predictions,
                   load_seed_pairs, read_jsonl, write_dataset, write_jsonl)
from .lf import LogicalFormError, canonicalize, parse_logical_form, pretty, serialize, signature
from .metrics import compare_runs, evaluate
from .pipeline import (PipelineStats, ResumeMismatch, make_candidate, partition_candidates,
                       to_example, translate_dataset, write_stats)
from .prompts import BudgetTooSmall, NoDomainMatch, PromptSpec, build_prompt
from .seeds import EmptyDomain, select_seeds_detailed
from .taxonomy import distribution_csv, distribution_json, distribution_records, error_counts

log = logging.getLogger("llmt")

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


# -- subcommands -----------------------------------------------------------

def cmd_parse_lf(args) -> int:
    tree = parse_logical_form(args.logical_form)
    if args.json:
        print(json.dumps({
            "logical_form": serialize(tree),
            "canonical": serialize(canonicalize(tree)),
            "signature": signature(tree).text,
        }, ensure_ascii=False))
    else:
        print(pretty(tree))
        print(f"signature: {signature(tree)}")
        print(f"canonical: {serialize(canonicalize(tree))}")
    return EXIT_OK


def cmd_select_seeds(args) -> int:
    data = load_dataset(args.data, args.format)
    sel = select_seeds_detailed(data, args.min_per_domain, args.seed, split=args.split)
    records = []
    for d in sel.domains:
        records += [{**ex.to_record(), "phase": "greedy"} for ex in d.greedy]
        records += [{**ex.to_record(), "phase": "random"} for ex in d.padded]
    write_jsonl(records, args.out)
    coverage = sel.coverage()
    if args.coverage:
        write_jsonl(coverage, args.coverage)
    header = ("domain", "size", "intents", "slots", "covered", "greedy", "selected")
    rows = [(c["domain"], c["domain_size"], c["intents"], c["slots"],
             f"{c['labels_covered']}/{c['labels_total']}", c["greedy_core"], c["selected"])
            for c in coverage]
    rows.append(("TOTAL", sum(c["domain_size"] for c in coverage), "", "", "",
                 sel.greedy_core_size, len(sel.examples)))
    widths = [max(len(str(x)) for x in col) for col in zip(header, *rows)]
    for row in (header, *rows):
        print("  ".join(str(x).ljust(w) for x, w in zip(row, widths)).rstrip())
    return EXIT_OK


def _config(args) -> PipelineConfig:
    cfg = PipelineConfig.load(args.config) if args.config else PipelineConfig()
    cfg = cfg.override("prompt", target_language=args.language,
                       target_language_name=args.language_name, max_tokens=args.max_tokens)
    if args.fallback:
        cfg = cfg.override("prompt", fallback_all_domains=True)
    return cfg


def _prompt_records(data: Dataset, seeds, spec: PromptSpec, fallback: bool) -> list[dict]:
    records = []
    for ex in sorted(data, key=lambda e: e.id):
        try:
            records.append(build_prompt(ex, seeds, spec, fallback_all_domains=fallback)
                           .to_record(ex.id))
        except (BudgetTooSmall, NoDomainMatch) as e:
            log.warning("%s: %s", ex.id, e)
            records.append({"example_id": ex.id, "error": f"{type(e).__name__}: {e}"})
    return records


def cmd_build_prompts(args) -> int:
    cfg = _config(args)
    data = load_dataset(args.data, args.format)
    seeds = load_seed_pairs(args.seeds)
    write_jsonl(_prompt_records(data, seeds, cfg.prompt_spec(), cfg.prompt.fallback_all_domains),
                args.out)
    return EXIT_OK


def cmd_translate(args) -> int:
    cfg = _config(args)
    cfg = cfg.override("run", worker_count=args.workers, seed=args.seed)
    cfg = cfg.override("backend", mock_noise_rate=args.noise_rate)
    cfg = cfg.override("filter", signature=True if args.signature_filter else None)
    data = load_dataset(args.data, args.format)
    seeds = load_seed_pairs(args.seeds)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    spec = cfg.prompt_spec()
    if args.dry_run:
        write_jsonl(_prompt_records(data, seeds, spec, cfg.prompt.fallback_all_domains),
                    out / "prompts.jsonl")
        return EXIT_OK
    journal = out / "journal.jsonl"
    if not args.resume and journal.exists():
        journal.unlink()
    candidates = []
    backend = cfg.make_backend()
    try:
        target, stats = translate_dataset(
            data, seeds, spec, cfg.decoding_config(), backend, cfg.run.worker_count,
            target_language=cfg.prompt.target_language,
            enable_signature_filter=cfg.filter.signature,
            fallback_all_domains=cfg.prompt.fallback_all_domains,
            journal_path=journal,
            candidates_out=candidates,
            max_output_tokens=cfg.decoding.max_output_tokens,
        )
    finally:
        close = getattr(backend, "close", None)
        if close:
            close()
    write_dataset(target, out / "dataset.jsonl")
    write_stats(stats, out / "stats.json")
    write_jsonl(
        ({**c.to_record(), "target_language": cfg.prompt.target_language,
          "target_language_name": spec.target_language_name} for c in candidates),
        out / "candidates.jsonl",
    )
    print(f"retained {stats.retained}/{stats.generated} candidates from {stats.examples} "
          f"examples ({stats.failed_examples} failed)")
    return EXIT_OK


def cmd_filter(args) -> int:
    data = load_dataset(args.data, args.format)
    groups: dict[str, list] = {}
    languages = set()
    for lineno, rec in read_jsonl(args.candidates):
        try:
            source = data[rec["source_id"]]
            lang_name = args.language_name or rec["target_language_name"]
            languages.add(args.language or rec["target_language"])
            cand = make_candidate(source, int(rec["sample_index"]), rec["raw_completion"],
                                  lang_name)
        except KeyError as e:
            raise RecordError(lineno, f"unknown source id or missing field {e}") from None
        groups.setdefault(source.id, []).append(cand)
    if len(languages) > 1:
        raise UsageError(f"candidates mix target languages {sorted(languages)}; pass --language")
    language = languages.pop() if languages else (args.language or "tgt")
    stats = PipelineStats()
    out = []
    for sid in sorted(groups):
        retained, counts = partition_candidates(groups[sid], args.signature_filter)
        stats.add(sid, counts)
        out += [to_example(c, data[sid], language) for c in retained]
    write_dataset(Dataset(out), args.out)
    if args.stats:
        write_stats(stats, args.stats)
    print(f"retained {stats.retained}/{stats.generated} candidates")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    gold = load_dataset(args.gold, args.format)
    report = evaluate(load_predictions(args.pred), gold, corrected=not args.uncorrected)
    text = report.to_json()
    if args.out:
        _write(Path(args.out), text)
    for lang, score in sorted(report.per_language.items()):
        print(f"{lang}\t{score.matches}/{score.total}\t{score.em:.1f}")
    if report.avg_non_english is not None:
        print(f"avg (non-English)\t{report.avg_non_english:.1f}")
    return EXIT_OK


def cmd_analyze_errors(args) -> int:
    gold = load_dataset(args.gold, args.format)
    pairs, unparsed, seen = [], 0, set()
    for pid, text in load_predictions(args.pred):
        if pid not in gold:
            raise UsageError(f"prediction id {pid!r} not in gold")
        seen.add(pid)
        try:
            pairs.append((parse_logical_form(text), gold[pid].logical_form))
        except LogicalFormError:
            unparsed += 1
    counts = error_counts(pairs)
    errors = sum(counts.values())
    matched = len(pairs) - errors
    if args.out_json:
        _write(Path(args.out_json), distribution_json(counts, unparsed, matched))
    if args.out_csv:
        _write(Path(args.out_csv), distribution_csv(counts))
    if errors == 0:
        print("no errors: every parsed prediction matches its gold parse")
        return EXIT_OK
    for rec in distribution_records(counts):
        print(f"{rec['category']}\t{rec['count']}\t{rec['percent']:.1f}%")
    if unparsed:
        print(f"({unparsed} unparseable prediction(s) excluded)")
    return EXIT_OK


def cmd_report(args) -> int:
    from .plotting import plot_em_deltas, plot_error_distribution
    from .report import em_table_csv, em_table_markdown, load_runs

    runs = load_runs(args.run)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    md = ["# EM accuracy", "", em_table_markdown(runs)]
    _write(out / "em.csv", em_table_csv(runs))
    if len(runs) > 1:
        diff = compare_runs([r.report for r in runs], [r.name for r in runs])
        _write(out / "diff.csv", diff.to_csv())
        _write(out / "diff.json", diff.to_json())
        plot_em_deltas(diff, out / "em_delta.png")
        md += [f"## Difference vs {diff.baseline}", "", "![](em_delta.png)", ""]
    if args.errors:
        records = json.loads(Path(args.errors).read_text(encoding="utf-8"))["categories"]
        plot_error_distribution(records, out / "errors.png")
        md += ["## Error categories", "", "| Category | Count | % |", "|---|---:|---:|"]
        md += [f"| {r['category']} | {r['count']} | {r['percent']:.1f} |" for r in records]
        md += ["", "![](errors.png)", ""]
    _write(out / "report.md", "\n".join(md).rstrip("\n") + "\n")
    print(em_table_markdown(runs), end="")
    return EXIT_OK


# -- parser ----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="llmt", description="Few-shot LLM translation of semantic parsing data.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def data_args(sp, flag="--data", help="dataset file"):
        sp.add_argument(flag, required=True, help=help)
        sp.add_argument("--format", choices=("jsonl", "tsv"), default="jsonl",
                        help="dataset file format (default: jsonl)")

    def prompt_args(sp):
        sp.add_argument("--config", help="pipeline config file (TOML)")
        sp.add_argument("--language", help="target language code, e.g. hi")
        sp.add_argument("--language-name", help="target language name used in prompts")
        sp.add_argument("--max-tokens", type=int, help="prompt token budget")
        sp.add_argument("--fallback", action="store_true",
                        help="use seeds from all domains when none share the query's domain")

    sp = sub.add_parser("parse-lf", help="parse a logical form; print tree and signature")
    sp.add_argument("logical_form")
    sp.add_argument("--json", action="store_true", help="print JSON instead of a tree")
    sp.set_defaults(func=cmd_parse_lf)

    sp = sub.add_parser("select-seeds", help="pick English seed examples to translate")
    data_args(sp)
    sp.add_argument("--min-per-domain", type=int, default=20)
    sp.add_argument("--seed", type=int, default=0, help="padding RNG seed")
    sp.add_argument("--split", choices=("train", "dev", "test"), help="restrict to one split")
    sp.add_argument("--out", required=True, help="selected examples (JSONL)")
    sp.add_argument("--coverage", help="per-domain coverage report (JSONL)")
    sp.set_defaults(func=cmd_select_seeds)

    sp = sub.add_parser("build-prompts", help="render prompts to JSONL for inspection")
    data_args(sp)
    sp.add_argument("--seeds", required=True, help="seed pair file (JSONL)")
    prompt_args(sp)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_build_prompts)

    sp = sub.add_parser("translate", help="translate a dataset with the configured backend")
    data_args(sp)
    sp.add_argument("--seeds", required=True, help="seed pair file (JSONL)")
    prompt_args(sp)
    sp.add_argument("--out-dir", required=True)
    sp.add_argument("--workers", type=int, help="concurrent requests")
    sp.add_argument("--seed", type=int, help="run seed (mock backend sampling)")
    sp.add_argument("--noise-rate", type=float, help="mock backend corruption rate")
    sp.add_argument("--signature-filter", action="store_true",
                    help="also drop candidates whose signature differs from the English parse")
    sp.add_argument("--dry-run", action="store_true", help="write prompts only; no backend calls")
    sp.add_argument("--resume", action="store_true", help="continue from out-dir/journal.jsonl")
    sp.set_defaults(func=cmd_translate)

    sp = sub.add_parser("filter", help="re-filter stored candidates")
    sp.add_argument("--candidates", required=True, help="candidates.jsonl from translate")
    data_args(sp, help="English source dataset")
    sp.add_argument("--language", help="target language code (default: from candidates)")
    sp.add_argument("--language-name", help="target language name (default: from candidates)")
    sp.add_argument("--signature-filter", action="store_true")
    sp.add_argument("--out", required=True)
    sp.add_argument("--stats")
    sp.set_defaults(func=cmd_filter)

    sp = sub.add_parser("evaluate", help="corrected exact-match accuracy per language")
    sp.add_argument("--pred", required=True, help="JSONL with id and logical_form")
    data_args(sp, "--gold", "gold dataset")
    sp.add_argument("--uncorrected", action="store_true", help="order-sensitive string EM")
    sp.add_argument("--out", help="report JSON")
    sp.set_defaults(func=cmd_evaluate)

    sp = sub.add_parser("analyze-errors", help="error category distribution")
    sp.add_argument("--pred", required=True)
    data_args(sp, "--gold", "gold dataset")
    sp.add_argument("--out-json")
    sp.add_argument("--out-csv")
    sp.set_defaults(func=cmd_analyze_errors)

    sp = sub.add_parser("report", help="tables and figures from stored evaluation reports")
    sp.add_argument("--run", action="append", required=True, metavar="NAME=PATH",
                    help="report JSON; repeat. The first run is the baseline. Names of the "
                         "form DECODING@SAMPLES produce a decoding x samples grid.")
    sp.add_argument("--errors", help="analyze-errors JSON to chart")
    sp.add_argument("--out-dir", required=True)
    sp.set_defaults(func=cmd_report)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (LogicalFormError, DatasetLoadError, RecordError, ConfigError, UsageError,
            EmptyDomain, ResumeMismatch, KeyError, ValueError) as e:
        print(f"llmt: error: {e}", file=sys.stderr)
        return EXIT_INVALID
    except (LLMError, OSError) as e:
        print(f"llmt: failed: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
