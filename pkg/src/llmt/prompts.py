"""Few-shot translation prompts built from seed pairs."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

from .data import Example, SeedPair
from .lf import serialize

TokenCounter = Callable[[str], int]

TEMPLATE_VERSION = "v1"
DEFAULT_PROMPT_BUDGET = 1024
PROMPT_BUDGETS = (768, 1024, 1792)


class NoDomainMatch(LookupError):
    pass


class BudgetTooSmall(ValueError):
    pass


def char_token_estimate(text: str) -> int:
    """ceil(characters / 4); monotone in text length."""
    return math.ceil(len(text) / 4)


@dataclass(frozen=True)
class PromptSpec:
    target_language_name: str
    max_tokens: int = DEFAULT_PROMPT_BUDGET
    task_description: Optional[str] = None
    template_version: str = TEMPLATE_VERSION
    source_language_name: str = "English"

    def __post_init__(self):
        if self.max_tokens <= 0:
            raise ValueError("max_tokens must be positive")
        if self.template_version != TEMPLATE_VERSION:
            raise ValueError(f"unsupported template version {self.template_version!r}")
        if not self.target_language_name or "\n" in self.target_language_name:
            raise ValueError("target_language_name must be a single non-empty line")

    @property
    def description(self) -> str:
        if self.task_description is not None:
            return self.task_description
        return (
            f"Translate each {self.source_language_name} sentence and its parse "
            f"into {self.target_language_name}, keeping the parse structure unchanged."
        )


@dataclass(frozen=True)
class RenderedPrompt:
    text: str
    exemplar_ids: tuple[str, ...]
    token_estimate: int

    def to_record(self, example_id: str) -> dict:
        return {
            "example_id": example_id,
            "prompt_text": self.text,
            "exemplar_ids": list(self.exemplar_ids),
            "token_estimate": self.token_estimate,
        }


def rank_exemplars(
    query: Example, seeds: Sequence[SeedPair], fallback_all_domains: bool = False
) -> list[SeedPair]:
    """Same-domain seeds, different-intent ones first and same-intent ones last.

    The last exemplars end up adjacent to the query in the prompt. Within each
    group the seed-set order is kept.
    """
    pool = [s for s in seeds if s.english.domain == query.domain]
    if not pool:
        if not fallback_all_domains:
            raise NoDomainMatch(f"no seed in domain {query.domain!r} for {query.id}")
        pool = list(seeds)
    other = [s for s in pool if s.english.intent != query.intent]
    same = [s for s in pool if s.english.intent == query.intent]
    return other + same


def exemplar_block(pair: SeedPair, spec: PromptSpec) -> str:
    src, tgt = spec.source_language_name, spec.target_language_name
    return (
        f"{src}: {pair.english.utterance}\n"
        f"{src} parse: {serialize(pair.english.logical_form)}\n"
        f"{tgt}: {pair.target.utterance}\n"
        f"{tgt} parse: {serialize(pair.target.logical_form)}\n"
        "\n"
    )


def query_block(query: Example, spec: PromptSpec) -> str:
    src = spec.source_language_name
    return (
        f"{src}: {query.utterance}\n"
        f"{src} parse: {serialize(query.logical_form)}\n"
        f"{spec.target_language_name}:"
    )


def render_prompt(
    ranked: Sequence[SeedPair],
    query: Example,
    spec: PromptSpec,
    counter: TokenCounter = char_token_estimate,
) -> RenderedPrompt:
    """Task description, exemplars in ranked order, then the query.

    Over budget, exemplars are dropped from the front of ``ranked`` (the
    least relevant) until the prompt fits.
    """
    head = spec.description + "\n\n"
    tail = query_block(query, spec)
    blocks = [exemplar_block(p, spec) for p in ranked]
    if counter(head + tail) > spec.max_tokens:
        raise BudgetTooSmall(
            f"{query.id}: description + query need {counter(head + tail)} tokens, "
            f"budget is {spec.max_tokens}"
        )
    for start in range(len(blocks) + 1):
        text = head + "".join(blocks[start:]) + tail
        tokens = counter(text)
        if tokens <= spec.max_tokens:
            return RenderedPrompt(text, tuple(p.id for p in ranked[start:]), tokens)
    raise AssertionError("unreachable: the query-only prompt fits")


def build_prompt(
    query: Example,
    seeds: Sequence[SeedPair],
    spec: PromptSpec,
    counter: TokenCounter = char_token_estimate,
    fallback_all_domains: bool = False,
) -> RenderedPrompt:
    return render_prompt(rank_exemplars(query, seeds, fallback_all_domains), query, spec, counter)
