"""Text-generation backends: an HTTP JSON client and a seeded mock."""

from __future__ import annotations

import enum
import logging
import os
import threading
import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Protocol, Sequence

import httpx

from .lf import (LogicalFormError, NodeKind, ParseTree, parse_logical_form, replace_slot_value,
                 serialize, slot)
from .rng import SplitMix64, seed_from

log = logging.getLogger(__name__)

DEFAULT_TOP_P = 0.95
DEFAULT_TOP_K = 40
DEFAULT_TEMPERATURE = 0.7
DEFAULT_NUM_SAMPLES = 8
SAMPLE_COUNTS = (1, 2, 4, 8)

DEFAULT_STOP = ("\n\nEnglish:",)
DEFAULT_MAX_OUTPUT_TOKENS = 256
API_KEY_ENV = "LLMT_API_KEY"


class Strategy(str, enum.Enum):
    GREEDY = "greedy"
    TOP_K = "top_k"
    TOP_P = "top_p"


@dataclass(frozen=True)
class DecodingConfig:
    strategy: Strategy = Strategy.TOP_P
    k: int = DEFAULT_TOP_K
    p: float = DEFAULT_TOP_P
    temperature: float = DEFAULT_TEMPERATURE
    num_samples: int = DEFAULT_NUM_SAMPLES

    def __post_init__(self):
        if not isinstance(self.strategy, Strategy):
            object.__setattr__(self, "strategy", Strategy(self.strategy))
        if self.temperature < 0:
            raise ValueError("temperature must be non-negative")
        if self.num_samples < 1:
            raise ValueError("num_samples must be at least 1")
        if self.strategy is Strategy.GREEDY and self.num_samples != 1:
            raise ValueError("greedy decoding yields exactly one sample")
        if self.strategy is Strategy.TOP_K and self.k < 1:
            raise ValueError("top_k needs k >= 1")
        if self.strategy is Strategy.TOP_P and not 0 < self.p <= 1:
            raise ValueError("top_p needs 0 < p <= 1")

    @classmethod
    def greedy(cls) -> DecodingConfig:
        return cls(Strategy.GREEDY, num_samples=1, temperature=0.0)

    def to_dict(self) -> dict:
        return {
            "strategy": self.strategy.value,
            "k": self.k,
            "p": self.p,
            "temperature": self.temperature,
            "num_samples": self.num_samples,
        }


@dataclass(frozen=True)
class GenerationRequest:
    prompt: str
    config: DecodingConfig = field(default_factory=DecodingConfig)
    stop: tuple[str, ...] = DEFAULT_STOP
    max_output_tokens: int = DEFAULT_MAX_OUTPUT_TOKENS

    def to_wire(self) -> dict:
        c = self.config
        return {
            "prompt": self.prompt,
            "strategy": c.strategy.value,
            "k": c.k,
            "p": c.p,
            "temperature": c.temperature,
            "num_samples": c.num_samples,
            "stop": list(self.stop),
            "max_output_tokens": self.max_output_tokens,
        }


@dataclass(frozen=True)
class Completion:
    text: str
    finish_reason: str


@dataclass(frozen=True)
class GenerationResponse:
    completions: tuple[Completion, ...]
    latency: float = 0.0

    @property
    def texts(self) -> list[str]:
        return [c.text for c in self.completions]


class Backend(Protocol):
    def generate(self, request: GenerationRequest) -> GenerationResponse: ...


# -- errors ----------------------------------------------------------------

class LLMError(RuntimeError):
    retryable = False


class TransportError(LLMError):
    retryable = True


class RateLimited(LLMError):
    retryable = True


class Timeout(LLMError):
    retryable = True


class BackendRejected(LLMError):
    pass


class TemplateParseError(ValueError):
    pass


def truncate_at_stop(text: str, stop: Sequence[str]) -> tuple[str, bool]:
    """Cut ``text`` at the earliest occurrence of any stop sequence."""
    cut = min((i for i in (text.find(s) for s in stop if s) if i >= 0), default=-1)
    return (text[:cut], True) if cut >= 0 else (text, False)


def _finish(raw: Sequence[str], request: GenerationRequest, latency: float) -> GenerationResponse:
    out = []
    for text in raw[: request.config.num_samples]:
        text, stopped = truncate_at_stop(text, request.stop)
        out.append(Completion(text, "stop" if stopped else "length"))
    return GenerationResponse(tuple(out), latency)


def with_retries(
    call: Callable[[], GenerationResponse],
    max_attempts: int = 5,
    backoff: float = 0.5,
    max_backoff: float = 30.0,
    sleep: Callable[[float], None] = time.sleep,
) -> GenerationResponse:
    """Retry retryable LLMErrors with exponential backoff."""
    for attempt in range(1, max_attempts + 1):
        try:
            return call()
        except LLMError as e:
            if not e.retryable or attempt == max_attempts:
                raise
            delay = min(max_backoff, backoff * 2 ** (attempt - 1))
            log.warning("attempt %d/%d failed (%s); retrying in %.2fs",
                        attempt, max_attempts, e, delay)
            sleep(delay)
    raise AssertionError("unreachable")


class HttpBackend:
    """POSTs a JSON request to ``endpoint``; see README for the wire format."""

    def __init__(
        self,
        endpoint: str,
        api_key_env: str = API_KEY_ENV,
        timeout: float = 60.0,
        max_attempts: int = 5,
        backoff: float = 0.5,
        transport: Optional[httpx.BaseTransport] = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.endpoint = endpoint
        self.max_attempts = max_attempts
        self.backoff = backoff
        self.sleep = sleep
        headers = {"Content-Type": "application/json"}
        key = os.environ.get(api_key_env)
        if key:
            headers["Authorization"] = f"Bearer {key}"
        self._http = httpx.Client(timeout=timeout, headers=headers, transport=transport)

    def close(self) -> None:
        self._http.close()

    def _post(self, request: GenerationRequest) -> GenerationResponse:
        start = time.monotonic()
        try:
            resp = self._http.post(self.endpoint, json=request.to_wire())
        except httpx.TimeoutException as e:
            raise Timeout(str(e)) from e
        except httpx.TransportError as e:
            raise TransportError(str(e)) from e
        if resp.status_code == 429:
            raise RateLimited(f"HTTP 429 from {self.endpoint}")
        if resp.status_code >= 500:
            raise TransportError(f"HTTP {resp.status_code} from {self.endpoint}")
        if resp.status_code >= 400:
            raise BackendRejected(f"HTTP {resp.status_code}: {resp.text[:200]}")
        try:
            items = resp.json()["completions"]
            raw = [(str(c["text"]), str(c.get("finish_reason", ""))) for c in items]
        except (ValueError, KeyError, TypeError) as e:
            raise BackendRejected(f"malformed response body: {e}") from e
        latency = time.monotonic() - start
        out = []
        for text, reason in raw[: request.config.num_samples]:
            text, stopped = truncate_at_stop(text, request.stop)
            out.append(Completion(text, "stop" if stopped else (reason or "length")))
        return GenerationResponse(tuple(out), latency)

    def generate(self, request: GenerationRequest) -> GenerationResponse:
        return with_retries(lambda: self._post(request), self.max_attempts,
                            self.backoff, sleep=self.sleep)


# -- mock ------------------------------------------------------------------

# Pseudo-language used by the mock: fixed word map, OOV words are reversed.
LEXICON = {
    "a": "ek", "alarm": "alarum", "am": "suba", "an": "ek", "and": "aur",
    "are": "hain", "at": "par", "call": "kol", "can": "sakta", "cancel": "radd",
    "create": "banao", "day": "din", "do": "karo", "for": "ke-liye", "get": "lao",
    "i": "main", "in": "mein", "is": "hai", "me": "mujhe", "message": "sandesh",
    "music": "sangeet", "my": "mera", "news": "khabar", "of": "ka", "on": "par",
    "play": "bajao", "please": "kripya", "pm": "shaam", "rain": "barish",
    "rainfall": "varsha", "remind": "yaad", "send": "bhejo", "set": "lagao",
    "show": "dikhao", "song": "gaana", "the": "", "to": "ko", "today": "aaj",
    "tomorrow": "kal", "up": "utha", "wake": "jagao", "weather": "mausam",
    "what": "kya", "when": "kab", "will": "ga", "with": "saath",
}
FILLERS = ("na", "ji", "zara", "abhi", "bas", "toh", "bhi", "hi")
NOISE_MARK = "~"


def pseudo_word(word: str) -> str:
    mapped = LEXICON.get(word.lower())
    if mapped is None:
        return word[::-1]
    return mapped or "da"


def pseudo_translate(text: str) -> str:
    return " ".join(pseudo_word(w) for w in text.split())


def parse_query_block(prompt: str) -> tuple[str, str, str]:
    """Return (target language name, query utterance, query logical form)."""
    lines = prompt.rstrip("\n").split("\n")
    if len(lines) < 3 or not lines[-1].endswith(":"):
        raise TemplateParseError("prompt does not end with '<Language>:'")
    lang = lines[-1][:-1].strip()
    utt_line, lf_line = lines[-3], lines[-2]
    src, sep, utt = utt_line.partition(": ")
    if not sep or not lf_line.startswith(f"{src} parse: ") or not lang:
        raise TemplateParseError("query block does not follow template v1")
    return lang, utt, lf_line[len(f"{src} parse: "):]


def _translate_tree(tree: ParseTree) -> ParseTree:
    if tree.kind is NodeKind.SLOT and tree.value is not None:
        return slot(tree.label, pseudo_translate(tree.value))
    return ParseTree(tree.kind, tree.label, tuple(_translate_tree(c) for c in tree.children),
                     None)


def _perturb(tree: ParseTree, utterance: str, original: ParseTree, rng: SplitMix64) -> ParseTree:
    """Make one slot value disagree with ``utterance``."""
    values = [n for n in tree.walk() if n.kind is NodeKind.SLOT and n.value is not None]
    if not values:
        bogus = NOISE_MARK
        while bogus in utterance:
            bogus += NOISE_MARK
        return ParseTree(tree.kind, tree.label, tree.children + (slot("NOISE", bogus),))
    index = rng.below(len(values))
    english = [v for _, v in _value_slots(original)][index]
    new = english
    if new in utterance:
        new = values[index].value + NOISE_MARK
        while new in utterance:
            new += NOISE_MARK
    return replace_slot_value(tree, index, new)


def _value_slots(tree: ParseTree) -> list[tuple[str, str]]:
    return [(n.label, n.value) for n in tree.walk()
            if n.kind is NodeKind.SLOT and n.value is not None]


def noise_flags(prompt: str, seed: int, noise_rate: float, num_samples: int) -> list[bool]:
    """Which samples the mock corrupts for this prompt; the mock's ground truth."""
    rng = SplitMix64(seed_from("noise", seed, prompt))
    return [rng.random() < noise_rate for _ in range(num_samples)]


def mock_translate(
    prompt: str,
    seed: int = 0,
    noise_rate: float = 0.0,
    num_samples: int = 1,
    greedy: bool = False,
    continuation: bool = True,
) -> list[str]:
    """Raw mock completions for a template-v1 prompt.

    Each sample is the pseudo-language rendering of the query; sampled
    (non-greedy) outputs get a distinct filler word so they differ from each
    other. A sample flagged by :func:`noise_flags` has one slot value made
    inconsistent with its utterance.
    """
    if not 0.0 <= noise_rate <= 1.0:
        raise ValueError("noise_rate must be in [0, 1]")
    lang, utterance, lf_text = parse_query_block(prompt)
    try:
        english = parse_logical_form(lf_text)
    except LogicalFormError as e:
        raise TemplateParseError(f"query parse is not a logical form: {e}") from e
    base_utt = pseudo_translate(utterance)
    base_lf = _translate_tree(english)
    flags = noise_flags(prompt, seed, noise_rate, num_samples)
    order = SplitMix64(seed_from("fill", seed, prompt)).sample(range(len(FILLERS)), len(FILLERS))
    rng = SplitMix64(seed_from("slot", seed, prompt))
    out = []
    for i, noisy in enumerate(flags):
        utt = base_utt
        if not greedy:
            utt += " " + " ".join([FILLERS[order[i % len(FILLERS)]]] * (i // len(FILLERS) + 1))
        lf = _perturb(base_lf, utt, english, rng) if noisy else base_lf
        text = f" {utt}\n{lang} parse: {serialize(lf)}"
        if continuation:
            text += f"\n\nEnglish: {utterance}"
        out.append(text)
    return out


class MockBackend:
    """Deterministic stand-in for an LLM endpoint.

    Output depends only on (seed, prompt, decoding config), never on call
    order, so it is safe to share across worker threads.
    """

    def __init__(self, seed: int = 0, noise_rate: float = 0.0):
        if not 0.0 <= noise_rate <= 1.0:
            raise ValueError("noise_rate must be in [0, 1]")
        self.seed = seed
        self.noise_rate = noise_rate
        self._lock = threading.Lock()
        self.calls = 0

    def generate(self, request: GenerationRequest) -> GenerationResponse:
        with self._lock:
            self.calls += 1
        c = request.config
        raw = mock_translate(
            request.prompt,
            seed=self.seed,
            noise_rate=self.noise_rate,
            num_samples=c.num_samples,
            greedy=c.strategy is Strategy.GREEDY,
        )
        return _finish(raw, request, 0.0)
