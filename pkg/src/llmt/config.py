"""Pipeline configuration file (TOML).

Example::

    [backend]
    kind = "http"                 # or "mock"
    endpoint = "http://localhost:8000/generate"
    api_key_env = "LLMT_API_KEY"
    timeout = 60.0
    max_attempts = 5
    mock_noise_rate = 0.0

    [prompt]
    target_language = "hi"
    target_language_name = "Hindi"
    max_tokens = 1024
    fallback_all_domains = false

    [decoding]
    strategy = "top_p"
    p = 0.95
    k = 40
    temperature = 0.7
    num_samples = 8
    max_output_tokens = 256

    [filter]
    signature = false

    [run]
    worker_count = 4
    seed = 0
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Optional, Union

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .client import API_KEY_ENV, DecodingConfig, HttpBackend, MockBackend
from .prompts import PromptSpec


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class BackendSection:
    kind: str = "mock"
    endpoint: Optional[str] = None
    api_key_env: str = API_KEY_ENV
    timeout: float = 60.0
    max_attempts: int = 5
    mock_noise_rate: float = 0.0


@dataclass(frozen=True)
class PromptSection:
    target_language: str = "hi"
    target_language_name: str = "Hindi"
    max_tokens: int = 1024
    task_description: Optional[str] = None
    fallback_all_domains: bool = False


@dataclass(frozen=True)
class DecodingSection:
    strategy: str = "top_p"
    p: float = 0.95
    k: int = 40
    temperature: float = 0.7
    num_samples: int = 8
    max_output_tokens: int = 256


@dataclass(frozen=True)
class FilterSection:
    signature: bool = False


@dataclass(frozen=True)
class RunSection:
    worker_count: int = 1
    seed: int = 0


@dataclass(frozen=True)
class PipelineConfig:
    backend: BackendSection = field(default_factory=BackendSection)
    prompt: PromptSection = field(default_factory=PromptSection)
    decoding: DecodingSection = field(default_factory=DecodingSection)
    filter: FilterSection = field(default_factory=FilterSection)
    run: RunSection = field(default_factory=RunSection)

    @classmethod
    def from_dict(cls, raw: dict[str, Any]) -> PipelineConfig:
        sections = {}
        for f in fields(cls):
            section_type = f.default_factory  # type: ignore[misc]
            body = raw.get(f.name, {})
            if not isinstance(body, dict):
                raise ConfigError(f"[{f.name}] must be a table")
            known = {x.name for x in fields(section_type)}
            unknown = set(body) - known
            if unknown:
                raise ConfigError(f"unknown key(s) in [{f.name}]: {', '.join(sorted(unknown))}")
            sections[f.name] = section_type(**body)
        unknown = set(raw) - set(sections)
        if unknown:
            raise ConfigError(f"unknown section(s): {', '.join(sorted(unknown))}")
        cfg = cls(**sections)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path: Union[str, Path]) -> PipelineConfig:
        try:
            with open(path, "rb") as f:
                raw = tomllib.load(f)
        except tomllib.TOMLDecodeError as e:
            raise ConfigError(f"{path}: {e}") from e
        return cls.from_dict(raw)

    def override(self, section: str, **values: Any) -> PipelineConfig:
        values = {k: v for k, v in values.items() if v is not None}
        if not values:
            return self
        cfg = replace(self, **{section: replace(getattr(self, section), **values)})
        cfg.validate()
        return cfg

    def validate(self) -> None:
        try:
            self.decoding_config()
            self.prompt_spec()
        except ValueError as e:
            raise ConfigError(str(e)) from e
        if self.backend.kind not in ("mock", "http"):
            raise ConfigError(f"backend.kind must be 'mock' or 'http', not {self.backend.kind!r}")
        if self.backend.kind == "http" and not self.backend.endpoint:
            raise ConfigError("backend.endpoint is required for the http backend")
        if not 0 <= self.backend.mock_noise_rate <= 1:
            raise ConfigError("backend.mock_noise_rate must be in [0, 1]")
        if self.run.worker_count < 1:
            raise ConfigError("run.worker_count must be at least 1")
        if self.prompt.target_language == "en":
            raise ConfigError("prompt.target_language must not be 'en'")
        if self.decoding.max_output_tokens < 1:
            raise ConfigError("decoding.max_output_tokens must be positive")

    def decoding_config(self) -> DecodingConfig:
        d = self.decoding
        return DecodingConfig(d.strategy, d.k, d.p, d.temperature, d.num_samples)

    def prompt_spec(self) -> PromptSpec:
        p = self.prompt
        return PromptSpec(p.target_language_name, p.max_tokens, p.task_description)

    def make_backend(self):
        b = self.backend
        if b.kind == "mock":
            return MockBackend(seed=self.run.seed, noise_rate=b.mock_noise_rate)
        return HttpBackend(b.endpoint, b.api_key_env, b.timeout, b.max_attempts)
