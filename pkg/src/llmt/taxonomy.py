"""Sort parser errors into five categories."""

from __future__ import annotations

import csv
import enum
import io
import json
from collections import Counter
from typing import Iterable, Optional

from .lf import ParseTree, canonical_signature, canonicalize, corrected_em, slot_label_counts


class ErrorCategory(str, enum.Enum):
    WRONG_INTENT = "WrongIntent"
    MISSING_SLOT = "MissingSlot"
    EXTRA_SLOT = "ExtraSlot"
    SLOT_CONFUSION = "SlotConfusion"
    SLOT_VALUE_MISMATCH = "SlotValueMismatch"


class NoErrors(ValueError):
    """Every pair matched; there is no distribution to report."""


def classify_error(pred: ParseTree, gold: ParseTree) -> Optional[ErrorCategory]:
    """None for a match, else the first category that applies, in this order:
    wrong top-level intent, right signature but wrong values, fewer slots,
    more slots, same slot count with different labels or structure.

    Slots are counted at every depth, but only those carrying a value.
    """
    if corrected_em(pred, gold):
        return None
    pred, gold = canonicalize(pred), canonicalize(gold)
    if pred.label != gold.label:
        return ErrorCategory.WRONG_INTENT
    if canonical_signature(pred) == canonical_signature(gold):
        return ErrorCategory.SLOT_VALUE_MISMATCH
    n_pred = sum(slot_label_counts(pred).values())
    n_gold = sum(slot_label_counts(gold).values())
    if n_pred < n_gold:
        return ErrorCategory.MISSING_SLOT
    if n_pred > n_gold:
        return ErrorCategory.EXTRA_SLOT
    return ErrorCategory.SLOT_CONFUSION


def error_counts(pairs: Iterable[tuple[ParseTree, ParseTree]]) -> Counter:
    counts: Counter = Counter({c: 0 for c in ErrorCategory})
    for pred, gold in pairs:
        cat = classify_error(pred, gold)
        if cat is not None:
            counts[cat] += 1
    return counts


def error_distribution(pairs: Iterable[tuple[ParseTree, ParseTree]]) -> dict[ErrorCategory, float]:
    """Percentage of non-matching pairs in each category."""
    counts = error_counts(pairs)
    total = sum(counts.values())
    if total == 0:
        raise NoErrors("all predictions match their gold parse")
    return {c: 100.0 * counts[c] / total for c in ErrorCategory}


def distribution_records(counts: Counter) -> list[dict]:
    total = sum(counts.values())
    return [
        {"category": c.value, "count": counts[c],
         "percent": round(100.0 * counts[c] / total, 1) if total else 0.0}
        for c in ErrorCategory
    ]


def distribution_json(counts: Counter, unparsed: int = 0, matched: int = 0) -> str:
    return json.dumps({
        "errors": sum(counts.values()),
        "matched": matched,
        "unparsed_predictions": unparsed,
        "categories": distribution_records(counts),
    }, indent=2) + "\n"


def distribution_csv(counts: Counter) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=["category", "count", "percent"], lineterminator="\n")
    w.writeheader()
    for rec in distribution_records(counts):
        w.writerow({**rec, "percent": f"{rec['percent']:.1f}"})
    return buf.getvalue()
