import pytest

from llmt.client import HttpBackend, MockBackend, Strategy
from llmt.config import ConfigError, PipelineConfig


def test_defaults():
    cfg = PipelineConfig()
    d = cfg.decoding_config()
    assert (d.strategy, d.p, d.temperature, d.num_samples) == (Strategy.TOP_P, 0.95, 0.7, 8)
    assert cfg.prompt_spec().max_tokens == 1024
    assert isinstance(cfg.make_backend(), MockBackend)


def test_load_toml(tmp_path):
    path = tmp_path / "c.toml"
    path.write_text(
        '[backend]\nkind = "http"\nendpoint = "http://x/generate"\n'
        '[prompt]\ntarget_language = "de"\ntarget_language_name = "German"\nmax_tokens = 768\n'
        '[decoding]\nstrategy = "top_k"\nk = 10\nnum_samples = 4\n'
        '[filter]\nsignature = true\n[run]\nworker_count = 3\n')
    cfg = PipelineConfig.load(path)
    assert cfg.prompt_spec().target_language_name == "German"
    assert cfg.decoding_config().strategy is Strategy.TOP_K
    assert cfg.filter.signature and cfg.run.worker_count == 3
    assert isinstance(cfg.make_backend(), HttpBackend)


@pytest.mark.parametrize("raw", [
    {"decoding": {"strategy": "beam"}},
    {"decoding": {"nope": 1}},
    {"extra": {}},
    {"backend": {"kind": "http"}},
    {"backend": {"mock_noise_rate": 2.0}},
    {"run": {"worker_count": 0}},
    {"prompt": {"target_language": "en"}},
    {"decoding": "top_p"},
])
def test_invalid(raw):
    with pytest.raises(ConfigError):
        PipelineConfig.from_dict(raw)


def test_bad_toml(tmp_path):
    path = tmp_path / "c.toml"
    path.write_text("[backend\n")
    with pytest.raises(ConfigError):
        PipelineConfig.load(path)


def test_override_skips_none_and_validates():
    cfg = PipelineConfig().override("run", worker_count=None, seed=5)
    assert cfg.run.seed == 5 and cfg.run.worker_count == 1
    with pytest.raises(ConfigError):
        cfg.override("decoding", num_samples=0)
