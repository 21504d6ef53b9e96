"""Translate task-oriented semantic parsing data with few-shot prompted LLMs."""

__version__ = "0.1.0"

from .lf import (ParseTree, Signature, canonicalize, corrected_em, parse_logical_form,
                 serialize, signature, slot_values)
from .data import Dataset, Example, SeedPair, load_dataset, load_seed_pairs, write_dataset
from .seeds import select_seeds
from .prompts import PromptSpec, RenderedPrompt, rank_exemplars, render_prompt
from .client import DecodingConfig, GenerationRequest, HttpBackend, MockBackend
from .pipeline import (TranslationCandidate, filter_candidates, is_slot_consistent,
                       parse_completion, translate_dataset, translate_example)
from .metrics import EvalReport, compare_runs, evaluate
from .taxonomy import ErrorCategory, classify_error, error_distribution

__all__ = [
    "ParseTree", "Signature", "canonicalize", "corrected_em", "parse_logical_form",
    "serialize", "signature", "slot_values",
    "Dataset", "Example", "SeedPair", "load_dataset", "load_seed_pairs", "write_dataset",
    "select_seeds",
    "PromptSpec", "RenderedPrompt", "rank_exemplars", "render_prompt",
    "DecodingConfig", "GenerationRequest", "HttpBackend", "MockBackend",
    "TranslationCandidate", "filter_candidates", "is_slot_consistent", "parse_completion",
    "translate_dataset", "translate_example",
    "EvalReport", "compare_runs", "evaluate",
    "ErrorCategory", "classify_error", "error_distribution",
]
