"""Datasets and seed translation pairs on disk (JSONL and TSV)."""

from __future__ import annotations

import csv
import enum
import io
import json
import unicodedata
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Iterator, Optional, Union

from .lf import ParseTree, canonical_signature, parse_logical_form, serialize

PathLike = Union[str, Path]

FIELDS = ("id", "language", "domain", "utterance", "logical_form", "split")
TSV_COLUMNS = ("utterance", "logical_form", "domain", "id", "language", "split")


class Split(str, enum.Enum):
    TRAIN = "train"
    DEV = "dev"
    TEST = "test"


def nfc(text: str) -> str:
    return unicodedata.normalize("NFC", text)


@dataclass(frozen=True)
class Example:
    id: str
    language: str
    domain: str
    utterance: str
    logical_form: ParseTree
    split: Split = Split.TRAIN

    def __post_init__(self):
        if not self.id:
            raise ValueError("example id is empty")
        if not self.utterance.strip():
            raise ValueError(f"{self.id}: empty utterance")
        if not self.domain.strip():
            raise ValueError(f"{self.id}: empty domain")
        if not isinstance(self.split, Split):
            object.__setattr__(self, "split", Split(self.split))

    @property
    def intent(self) -> str:
        return self.logical_form.label

    def to_record(self) -> dict[str, str]:
        return {
            "id": self.id,
            "language": self.language,
            "domain": self.domain,
            "utterance": self.utterance,
            "logical_form": serialize(self.logical_form),
            "split": self.split.value,
        }


@dataclass(frozen=True)
class SeedPair:
    english: Example
    target: Example

    @property
    def id(self) -> str:
        return self.english.id

    @property
    def domain(self) -> str:
        return self.english.domain


class Dataset:
    """An immutable list of examples indexed by id, domain and top-level intent."""

    def __init__(self, examples: Iterable[Example] = ()):
        self.examples: tuple[Example, ...] = tuple(examples)
        self._by_id: dict[str, Example] = {}
        by_domain: dict[str, list[str]] = defaultdict(list)
        by_intent: dict[str, list[str]] = defaultdict(list)
        for ex in self.examples:
            if ex.id in self._by_id:
                raise ValueError(f"duplicate example id {ex.id!r}")
            self._by_id[ex.id] = ex
            by_domain[ex.domain].append(ex.id)
            by_intent[ex.intent].append(ex.id)
        self.by_domain = {k: tuple(v) for k, v in by_domain.items()}
        self.by_intent = {k: tuple(v) for k, v in by_intent.items()}

    def __len__(self) -> int:
        return len(self.examples)

    def __iter__(self) -> Iterator[Example]:
        return iter(self.examples)

    def __getitem__(self, example_id: str) -> Example:
        return self._by_id[example_id]

    def __contains__(self, example_id: object) -> bool:
        return example_id in self._by_id

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        return self.examples == other.examples

    def __repr__(self) -> str:
        return f"Dataset({len(self)} examples, {len(self.by_domain)} domains)"

    @property
    def domains(self) -> list[str]:
        return sorted(self.by_domain)

    def in_domain(self, domain: str) -> list[Example]:
        return [self._by_id[i] for i in self.by_domain.get(domain, ())]

    def sorted(self) -> Dataset:
        return Dataset(sorted(self.examples, key=lambda e: e.id))


# -- errors ----------------------------------------------------------------

class RecordError(ValueError):
    def __init__(self, line: int, cause: Union[str, Exception], record_id: Optional[str] = None):
        self.line = line
        self.cause = cause
        self.record_id = record_id
        where = f"line {line}" + (f" ({record_id})" if record_id else "")
        name = type(cause).__name__ if isinstance(cause, Exception) else "invalid record"
        super().__init__(f"{where}: {name}: {cause}")


class SignatureMismatch(RecordError):
    pass


class LanguageError(RecordError):
    pass


class DatasetLoadError(ValueError):
    """Raised once loading finishes (or the error cutoff is hit) with every RecordError."""

    def __init__(self, path: PathLike, errors: list[RecordError], truncated: bool = False):
        self.path = str(path)
        self.errors = errors
        self.truncated = truncated
        head = "; ".join(str(e) for e in errors[:5])
        more = f" (+{len(errors) - 5} more)" if len(errors) > 5 else ""
        stop = ", stopped at error cutoff" if truncated else ""
        super().__init__(f"{path}: {len(errors)} bad record(s){stop}: {head}{more}")


class _ErrorSink:
    def __init__(self, path: PathLike, max_errors: Optional[int]):
        self.path = path
        self.max_errors = max_errors
        self.errors: list[RecordError] = []

    def add(self, err: RecordError) -> None:
        self.errors.append(err)
        if self.max_errors is not None and len(self.errors) >= self.max_errors:
            raise DatasetLoadError(self.path, self.errors, truncated=True)

    def check(self) -> None:
        if self.errors:
            raise DatasetLoadError(self.path, self.errors)


# -- reading ---------------------------------------------------------------

def _require(record: dict[str, Any], key: str) -> str:
    value = record.get(key)
    if value is None:
        raise KeyError(f"missing field {key!r}")
    if not isinstance(value, str):
        raise TypeError(f"field {key!r} must be a string")
    return nfc(value)


def example_from_record(record: dict[str, Any]) -> Example:
    return Example(
        id=_require(record, "id"),
        language=_require(record, "language"),
        domain=_require(record, "domain"),
        utterance=_require(record, "utterance"),
        logical_form=parse_logical_form(_require(record, "logical_form")),
        split=Split(_require(record, "split")),
    )


def read_jsonl(path: PathLike) -> Iterator[tuple[int, Any]]:
    """Yield (line_number, decoded_object) for each non-blank line."""
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            if line.strip():
                yield lineno, json.loads(line)


def _jsonl_records(path: PathLike, sink: _ErrorSink) -> Iterator[tuple[int, dict]]:
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                sink.add(RecordError(lineno, e))
                continue
            if not isinstance(obj, dict):
                sink.add(RecordError(lineno, "record is not a JSON object"))
                continue
            yield lineno, obj


def _tsv_records(
    path: PathLike, sink: _ErrorSink, language: str, split: str
) -> Iterator[tuple[int, dict]]:
    with open(path, encoding="utf-8", newline="") as f:
        rows = csv.reader(f, delimiter="\t", quoting=csv.QUOTE_NONE, quotechar=None)
        for lineno, row in enumerate(rows, 1):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if lineno == 1 and tuple(row[:4]) == TSV_COLUMNS[:4]:
                continue
            if len(row) not in (4, 6):
                sink.add(RecordError(lineno, f"expected 4 or 6 columns, got {len(row)}"))
                continue
            record = dict(zip(TSV_COLUMNS, row))
            record.setdefault("language", language)
            record.setdefault("split", split)
            yield lineno, record


def load_dataset(
    path: PathLike,
    format: str = "jsonl",
    max_errors: Optional[int] = 50,
    *,
    language: str = "en",
    split: str = "train",
) -> Dataset:
    """Load and validate a dataset.

    Bad records are collected and raised together as a DatasetLoadError, or
    as soon as ``max_errors`` of them have been seen. ``language``/``split``
    fill in TSV rows that only carry the four MTOP-style columns.
    """
    sink = _ErrorSink(path, max_errors)
    if format == "jsonl":
        records = _jsonl_records(path, sink)
    elif format == "tsv":
        records = _tsv_records(path, sink, language, split)
    else:
        raise ValueError(f"unknown dataset format {format!r}")

    examples: list[Example] = []
    seen: set[str] = set()
    for lineno, record in records:
        try:
            ex = example_from_record(record)
        except (KeyError, TypeError, ValueError) as e:
            sink.add(RecordError(lineno, e, record.get("id")))
            continue
        if ex.id in seen:
            sink.add(RecordError(lineno, f"duplicate id {ex.id!r}", ex.id))
            continue
        seen.add(ex.id)
        examples.append(ex)
    sink.check()
    return Dataset(examples)


def load_seed_pairs(path: PathLike, max_errors: Optional[int] = 50) -> list[SeedPair]:
    """Load human-translated seed pairs from JSONL.

    Record fields: id, domain, split (optional), english_utterance,
    english_logical_form, target_language, target_utterance,
    target_logical_form. Both sides must share a slot-order-insensitive
    signature.
    """
    sink = _ErrorSink(path, max_errors)
    pairs: list[SeedPair] = []
    seen: set[str] = set()
    for lineno, rec in _jsonl_records(path, sink):
        rid = rec.get("id") if isinstance(rec.get("id"), str) else None
        try:
            base = {"id": rec.get("id"), "domain": rec.get("domain"),
                    "split": rec.get("split", "train")}
            english = example_from_record({
                **base, "language": "en",
                "utterance": rec.get("english_utterance"),
                "logical_form": rec.get("english_logical_form"),
            })
            target = example_from_record({
                **base, "language": rec.get("target_language"),
                "utterance": rec.get("target_utterance"),
                "logical_form": rec.get("target_logical_form"),
            })
        except (KeyError, TypeError, ValueError) as e:
            sink.add(RecordError(lineno, e, rid))
            continue
        if target.language == "en" or not target.language:
            sink.add(LanguageError(lineno, "target language must not be 'en'", rid))
            continue
        if canonical_signature(english.logical_form) != canonical_signature(target.logical_form):
            sink.add(SignatureMismatch(
                lineno,
                f"{canonical_signature(english.logical_form)} != "
                f"{canonical_signature(target.logical_form)}",
                rid,
            ))
            continue
        if english.id in seen:
            sink.add(RecordError(lineno, f"duplicate id {english.id!r}", rid))
            continue
        seen.add(english.id)
        pairs.append(SeedPair(english, target))
    sink.check()
    return pairs


# -- writing ---------------------------------------------------------------

def _dump(record: dict) -> str:
    return json.dumps(record, ensure_ascii=False)


def dumps_dataset(dataset: Dataset, format: str = "jsonl") -> str:
    examples = sorted(dataset.examples, key=lambda e: e.id)
    if format == "jsonl":
        return "".join(_dump(ex.to_record()) + "\n" for ex in examples)
    if format == "tsv":
        buf = io.StringIO()
        writer = csv.writer(buf, delimiter="\t", quoting=csv.QUOTE_NONE, quotechar=None,
                            escapechar=None, lineterminator="\n")
        writer.writerow(TSV_COLUMNS)
        for ex in examples:
            rec = ex.to_record()
            if any(c in rec[k] for k in TSV_COLUMNS for c in "\t\n\r"):
                raise ValueError(f"{ex.id}: tab or newline cannot be written to TSV")
            writer.writerow([rec[k] for k in TSV_COLUMNS])
        return buf.getvalue()
    raise ValueError(f"unknown dataset format {format!r}")


def write_dataset(dataset: Dataset, path: PathLike, format: str = "jsonl") -> None:
    """Write records sorted by id with a fixed field order."""
    Path(path).write_text(dumps_dataset(dataset, format), encoding="utf-8")


def seed_pair_record(pair: SeedPair) -> dict[str, str]:
    return {
        "id": pair.english.id,
        "domain": pair.english.domain,
        "split": pair.english.split.value,
        "english_utterance": pair.english.utterance,
        "english_logical_form": serialize(pair.english.logical_form),
        "target_language": pair.target.language,
        "target_utterance": pair.target.utterance,
        "target_logical_form": serialize(pair.target.logical_form),
    }


def write_seed_pairs(pairs: Iterable[SeedPair], path: PathLike) -> None:
    Path(path).write_text(
        "".join(_dump(seed_pair_record(p)) + "\n" for p in pairs), encoding="utf-8"
    )


def write_jsonl(records: Iterable[dict], path: PathLike) -> None:
    Path(path).write_text("".join(_dump(r) + "\n" for r in records), encoding="utf-8")


def load_predictions(path: PathLike) -> list[tuple[str, str]]:
    """Read (id, logical_form string) pairs from any JSONL carrying those fields."""
    out = []
    for lineno, rec in read_jsonl(path):
        if not isinstance(rec, dict) or "id" not in rec:
            raise RecordError(lineno, "prediction record needs an 'id'")
        lf = rec.get("logical_form", rec.get("prediction"))
        out.append((str(rec["id"]), "" if lf is None else str(lf)))
    return out
