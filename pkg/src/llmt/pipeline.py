"""Translate an English dataset into a target language with a few-shot LLM.

For each English example: rank seeds, render the prompt, sample completions,
parse them, flag slot-inconsistent ones, filter, and collect the survivors
as target-language examples.
"""

from __future__ import annotations

import hashlib
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Union

from .client import Backend, DecodingConfig, GenerationRequest, LLMError, DEFAULT_STOP
from .data import Dataset, Example, SeedPair, nfc
from .lf import (LogicalFormError, ParseTree, canonical_signature, canonicalize,
                 parse_logical_form, serialize, slot_values)
from .prompts import BudgetTooSmall, NoDomainMatch, PromptSpec, build_prompt

log = logging.getLogger(__name__)


class ParseFailure(ValueError):
    pass


class MissingParseLine(ParseFailure):
    pass


class LogicalFormParseError(ParseFailure):
    pass


class ResumeMismatch(RuntimeError):
    pass


def parse_completion(completion: str, target_language_name: str) -> tuple[str, ParseTree]:
    """Split a completion into (utterance, logical form).

    ``completion`` is the text generated after the prompt's ``<Language>:``;
    its first line is the utterance, and the ``<Language> parse:`` line
    carries the logical form.
    """
    lines = nfc(completion).split("\n")
    utterance = " ".join(lines[0].split())
    marker = f"{target_language_name} parse:"
    lf_line = next((l.strip() for l in lines[1:] if l.strip().startswith(marker)), None)
    if lf_line is None:
        raise MissingParseLine(f"no '{marker}' line in completion")
    if not utterance:
        raise MissingParseLine("empty utterance line")
    try:
        tree = parse_logical_form(lf_line[len(marker):])
    except LogicalFormError as e:
        raise LogicalFormParseError(str(e)) from e
    return utterance, tree


def is_slot_consistent(utterance: str, lf: ParseTree) -> bool:
    """Every slot value occurs verbatim (case-sensitive) in the utterance."""
    return all(value in utterance for _, value in slot_values(lf))


@dataclass(frozen=True)
class TranslationCandidate:
    source_id: str
    sample_index: int
    raw_completion: str
    parse_ok: bool
    utterance_tgt: Optional[str] = None
    logical_form_tgt: Optional[ParseTree] = None
    slot_consistent: bool = False
    signature_match: bool = False
    parse_error: Optional[str] = None

    @property
    def dedup_key(self) -> tuple[str, str]:
        assert self.logical_form_tgt is not None
        return self.utterance_tgt or "", serialize(canonicalize(self.logical_form_tgt))

    def to_record(self) -> dict:
        return {
            "source_id": self.source_id,
            "sample_index": self.sample_index,
            "raw_completion": self.raw_completion,
            "parse_ok": self.parse_ok,
            "utterance": self.utterance_tgt,
            "logical_form": serialize(self.logical_form_tgt) if self.logical_form_tgt else None,
            "slot_consistent": self.slot_consistent,
            "signature_match": self.signature_match,
            "parse_error": self.parse_error,
        }


def make_candidate(
    source: Example, sample_index: int, completion: str, target_language_name: str
) -> TranslationCandidate:
    try:
        utt, lf = parse_completion(completion, target_language_name)
    except ParseFailure as e:
        return TranslationCandidate(source.id, sample_index, completion, False,
                                    parse_error=f"{type(e).__name__}: {e}")
    return TranslationCandidate(
        source.id, sample_index, completion, True, utt, lf,
        slot_consistent=is_slot_consistent(utt, lf),
        signature_match=canonical_signature(lf) == canonical_signature(source.logical_form),
    )


@dataclass
class PipelineStats:
    """Candidate accounting. ``generated`` always equals the sum of the
    five outcome buckets."""

    generated: int = 0
    parse_failures: int = 0
    filtered_inconsistent: int = 0
    filtered_signature: int = 0
    deduplicated: int = 0
    retained: int = 0
    examples: int = 0
    failed_examples: int = 0
    per_example: dict[str, dict[str, int]] = field(default_factory=dict)

    COUNTS = ("generated", "parse_failures", "filtered_inconsistent",
              "filtered_signature", "deduplicated", "retained")

    def conserved(self) -> bool:
        return self.generated == (self.parse_failures + self.filtered_inconsistent
                                  + self.filtered_signature + self.deduplicated + self.retained)

    def add(self, source_id: str, counts: dict[str, int]) -> None:
        self.examples += 1
        self.per_example[source_id] = dict(counts)
        for k in self.COUNTS:
            setattr(self, k, getattr(self, k) + counts[k])

    def to_dict(self) -> dict:
        d = {k: getattr(self, k) for k in self.COUNTS}
        d["examples"] = self.examples
        d["failed_examples"] = self.failed_examples
        d["per_example"] = {k: self.per_example[k] for k in sorted(self.per_example)}
        return d


def partition_candidates(
    candidates: Sequence[TranslationCandidate], enable_signature_filter: bool = False
) -> tuple[list[TranslationCandidate], dict[str, int]]:
    """Retained candidates plus the count of each outcome."""
    counts = dict.fromkeys(PipelineStats.COUNTS, 0)
    counts["generated"] = len(candidates)
    retained: list[TranslationCandidate] = []
    seen: set[tuple[str, str]] = set()
    for cand in sorted(candidates, key=lambda c: c.sample_index):
        if not cand.parse_ok:
            counts["parse_failures"] += 1
        elif not cand.slot_consistent:
            counts["filtered_inconsistent"] += 1
        elif enable_signature_filter and not cand.signature_match:
            counts["filtered_signature"] += 1
        elif cand.dedup_key in seen:
            counts["deduplicated"] += 1
        else:
            seen.add(cand.dedup_key)
            retained.append(cand)
    counts["retained"] = len(retained)
    return retained, counts


def filter_candidates(
    candidates: Sequence[TranslationCandidate], enable_signature_filter: bool = False
) -> list[TranslationCandidate]:
    """Drop parse failures, slot-inconsistent samples, optional signature
    mismatches, and duplicates (the lowest sample_index wins)."""
    return partition_candidates(candidates, enable_signature_filter)[0]


def translate_example(
    example: Example,
    seeds: Sequence[SeedPair],
    spec: PromptSpec,
    config: DecodingConfig,
    client: Backend,
    *,
    fallback_all_domains: bool = False,
    max_output_tokens: int = 256,
    stop: tuple[str, ...] = DEFAULT_STOP,
) -> list[TranslationCandidate]:
    """All sampled candidates for one example, flagged but unfiltered."""
    if example.language != "en":
        raise ValueError(f"{example.id}: source example must be English")
    prompt = build_prompt(example, seeds, spec, fallback_all_domains=fallback_all_domains)
    response = client.generate(GenerationRequest(prompt.text, config, stop, max_output_tokens))
    return [
        make_candidate(example, i, c.text, spec.target_language_name)
        for i, c in enumerate(response.completions)
    ]


def to_example(cand: TranslationCandidate, source: Example, language: str) -> Example:
    assert cand.utterance_tgt is not None and cand.logical_form_tgt is not None
    return Example(
        id=f"{cand.source_id}#s{cand.sample_index}",
        language=language,
        domain=source.domain,
        utterance=cand.utterance_tgt,
        logical_form=cand.logical_form_tgt,
        split=source.split,
    )


# -- resume journal --------------------------------------------------------

def config_fingerprint(
    spec: PromptSpec,
    config: DecodingConfig,
    seeds: Sequence[SeedPair],
    target_language: str,
    extra: Optional[dict] = None,
) -> str:
    payload = {
        "spec": asdict(spec),
        "decoding": config.to_dict(),
        "seeds": [p.id for p in seeds],
        "target_language": target_language,
        "extra": extra or {},
    }
    blob = json.dumps(payload, sort_keys=True, ensure_ascii=False).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()


class Journal:
    """Append-only JSONL log of finished source examples.

    Line 1 holds the run fingerprint; each later line records one source id
    with its raw completions (or failure), so a resumed run can rebuild the
    candidates without calling the backend again.
    """

    def __init__(self, path: Union[str, Path], fingerprint: str):
        self.path = Path(path)
        self.fingerprint = fingerprint
        self.done: dict[str, dict] = {}
        if self.path.exists() and self.path.stat().st_size:
            with open(self.path, encoding="utf-8") as f:
                header = json.loads(f.readline())
                if header.get("fingerprint") != fingerprint:
                    raise ResumeMismatch(
                        f"{self.path} was written by a different configuration; "
                        "remove it or restore the original settings"
                    )
                for line in f:
                    if line.strip():
                        rec = json.loads(line)
                        self.done[rec["source_id"]] = rec
        else:
            self.path.write_text(json.dumps({"fingerprint": fingerprint}) + "\n",
                                 encoding="utf-8")

    def append(self, record: dict) -> None:
        with open(self.path, "a", encoding="utf-8") as f:
            f.write(json.dumps(record, ensure_ascii=False) + "\n")
        self.done[record["source_id"]] = record


@dataclass
class _Outcome:
    source: Example
    completions: Optional[list[str]] = None
    error: Optional[str] = None


def translate_dataset(
    dataset: Dataset,
    seeds: Sequence[SeedPair],
    spec: PromptSpec,
    config: DecodingConfig,
    client: Backend,
    worker_count: int = 1,
    *,
    target_language: str,
    enable_signature_filter: bool = False,
    fallback_all_domains: bool = False,
    journal_path: Optional[Union[str, Path]] = None,
    candidates_out: Optional[list[TranslationCandidate]] = None,
    max_output_tokens: int = 256,
    stop: tuple[str, ...] = DEFAULT_STOP,
) -> tuple[Dataset, PipelineStats]:
    """Translate every English example; returns (target dataset, stats).

    Output ids are ``<source_id>#s<sample_index>``, ordered by source id then
    sample index, and do not depend on ``worker_count``. Per-example backend
    or prompt failures are logged and counted. ``candidates_out``, if given,
    receives every unfiltered candidate.
    """
    if worker_count < 1:
        raise ValueError("worker_count must be at least 1")
    if not seeds:
        raise ValueError("seed set is empty")
    if target_language == "en":
        raise ValueError("target language must differ from English")
    sources = sorted(dataset.examples, key=lambda e: e.id)
    bad = [e.id for e in sources if e.language != "en"]
    if bad:
        raise ValueError(f"{len(bad)} non-English source example(s), e.g. {bad[0]}")

    journal = None
    if journal_path is not None:
        journal = Journal(journal_path, config_fingerprint(
            spec, config, seeds, target_language,
            {"signature_filter": enable_signature_filter, "fallback": fallback_all_domains,
             "max_output_tokens": max_output_tokens, "stop": list(stop)},
        ))

    def run(source: Example) -> _Outcome:
        if journal is not None and source.id in journal.done:
            rec = journal.done[source.id]
            return _Outcome(source, rec.get("completions"), rec.get("error"))
        try:
            prompt = build_prompt(source, seeds, spec, fallback_all_domains=fallback_all_domains)
            resp = client.generate(GenerationRequest(prompt.text, config, stop, max_output_tokens))
        except (LLMError, BudgetTooSmall, NoDomainMatch) as e:
            return _Outcome(source, error=f"{type(e).__name__}: {e}")
        return _Outcome(source, completions=resp.texts)

    stats = PipelineStats()
    out: list[Example] = []
    with ThreadPoolExecutor(max_workers=worker_count) as pool:
        # map() yields in input order, so the journal has a single ordered writer
        for outcome in pool.map(run, sources):
            src = outcome.source
            if journal is not None and src.id not in journal.done:
                journal.append({"source_id": src.id, "completions": outcome.completions,
                                "error": outcome.error})
            if outcome.error is not None:
                log.warning("%s failed: %s", src.id, outcome.error)
                stats.failed_examples += 1
                stats.add(src.id, dict.fromkeys(PipelineStats.COUNTS, 0))
                continue
            cands = [make_candidate(src, i, text, spec.target_language_name)
                     for i, text in enumerate(outcome.completions or [])]
            if candidates_out is not None:
                candidates_out.extend(cands)
            retained, counts = partition_candidates(cands, enable_signature_filter)
            stats.add(src.id, counts)
            out.extend(to_example(c, src, target_language) for c in retained)
    return Dataset(out), stats


def write_stats(stats: PipelineStats, path: Union[str, Path]) -> None:
    Path(path).write_text(json.dumps(stats.to_dict(), indent=2, sort_keys=True) + "\n",
                          encoding="utf-8")
