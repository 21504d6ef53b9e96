"""Choose the English seed examples that get human-translated.

Per domain: greedy set cover over the domain's intent and slot labels, then
random padding up to ``min_per_domain`` examples.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from .data import Dataset, Example
from .lf import labels
from .rng import domain_rng


class EmptyDomain(ValueError):
    pass


def greedy_cover(examples: Sequence[Example]) -> list[Example]:
    """Greedy set cover of the label universe of ``examples``.

    Ties on gain break by shorter utterance, then smaller id. Stops as soon
    as everything is covered, so no pick adds zero new labels.
    """
    label_sets = {ex.id: labels(ex.logical_form) for ex in examples}
    uncovered = set().union(*label_sets.values()) if label_sets else set()
    remaining = list(examples)
    chosen: list[Example] = []
    while uncovered:
        best = min(
            remaining,
            key=lambda ex: (-len(label_sets[ex.id] & uncovered), len(ex.utterance), ex.id),
        )
        chosen.append(best)
        uncovered -= label_sets[best.id]
        remaining.remove(best)
    return chosen


@dataclass
class DomainSelection:
    domain: str
    greedy: list[Example]
    padded: list[Example]
    label_universe: set[str]
    size: int

    @property
    def examples(self) -> list[Example]:
        return self.greedy + self.padded

    def coverage(self) -> dict:
        covered = set()
        for ex in self.examples:
            covered |= labels(ex.logical_form)
        return {
            "domain": self.domain,
            "domain_size": self.size,
            "intents": sum(1 for l in self.label_universe if l.startswith("IN:")),
            "slots": sum(1 for l in self.label_universe if l.startswith("SL:")),
            "labels_covered": len(covered & self.label_universe),
            "labels_total": len(self.label_universe),
            "greedy_core": len(self.greedy),
            "selected": len(self.examples),
        }


@dataclass
class SeedSelection:
    domains: list[DomainSelection] = field(default_factory=list)

    @property
    def examples(self) -> list[Example]:
        return [ex for d in self.domains for ex in d.examples]

    @property
    def greedy_core_size(self) -> int:
        return sum(len(d.greedy) for d in self.domains)

    def coverage(self) -> list[dict]:
        return [d.coverage() for d in self.domains]


def select_domain(
    examples: Sequence[Example], domain: str, min_per_domain: int, rng_seed: int
) -> DomainSelection:
    if not examples:
        raise EmptyDomain(f"domain {domain!r} has no examples")
    universe = set().union(*(labels(ex.logical_form) for ex in examples))
    core = greedy_cover(examples)
    picked = {ex.id for ex in core}
    rest = sorted((ex for ex in examples if ex.id not in picked), key=lambda ex: ex.id)
    want = min(min_per_domain, len(examples)) - len(core)
    padded = domain_rng(rng_seed, domain).sample(rest, want) if want > 0 else []
    return DomainSelection(domain, core, padded, universe, len(examples))


def select_seeds_detailed(
    dataset: Dataset,
    min_per_domain: int = 20,
    rng_seed: int = 0,
    domains: Optional[Iterable[str]] = None,
    split: Optional[str] = None,
) -> SeedSelection:
    if len(dataset) == 0:
        raise EmptyDomain("dataset is empty")
    pool = [ex for ex in dataset if split is None or ex.split.value == split]
    by_domain: dict[str, list[Example]] = {}
    for ex in pool:
        by_domain.setdefault(ex.domain, []).append(ex)
    wanted = sorted(domains) if domains is not None else sorted(dataset.by_domain)
    return SeedSelection([
        select_domain(by_domain.get(d, []), d, min_per_domain, rng_seed) for d in wanted
    ])


def select_seeds(
    dataset: Dataset,
    min_per_domain: int = 20,
    rng_seed: int = 0,
    domains: Optional[Iterable[str]] = None,
    split: Optional[str] = None,
) -> list[Example]:
    """Seed examples ordered by (domain, selection order)."""
    return select_seeds_detailed(dataset, min_per_domain, rng_seed, domains, split).examples
