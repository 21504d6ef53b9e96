import json
import random
import unicodedata

import pytest

from llmt.data import (Dataset, DatasetLoadError, Example, LanguageError, SeedPair,
                       SignatureMismatch, dumps_dataset, load_dataset, load_seed_pairs,
                       write_dataset, write_seed_pairs)
from llmt.lf import intent, slot
from treegen import random_tree

WEATHER = {
    "id": "w1", "language": "en", "domain": "weather", "utterance": "How is the rainfall today?",
    "logical_form": "[IN:GET_WEATHER [SL:ATTRIBUTE rainfall ] [SL:DATE today ] ]", "split": "train",
}


def _write_lines(path, records):
    path.write_text("".join(json.dumps(r, ensure_ascii=False) + "\n" for r in records),
                    encoding="utf-8")
    return path


def test_load_single_weather(tmp_path):
    d = load_dataset(_write_lines(tmp_path / "d.jsonl", [WEATHER]))
    assert len(d) == 1
    ex = d["w1"]
    assert ex.logical_form.label == "GET_WEATHER"
    assert d.by_domain == {"weather": ("w1",)}
    assert d.by_intent == {"GET_WEATHER": ("w1",)}


def test_load_empty(tmp_path):
    p = tmp_path / "empty.jsonl"
    p.write_text("")
    assert len(load_dataset(p)) == 0


def test_bad_logical_form_reports_cause(tmp_path):
    p = _write_lines(tmp_path / "d.jsonl", [{**WEATHER, "logical_form": "[IN:X [SL:Y"}])
    with pytest.raises(DatasetLoadError) as e:
        load_dataset(p)
    (err,) = e.value.errors
    assert err.line == 1
    assert "UnbalancedBrackets" in str(err)


def test_missing_field_and_duplicates_are_aggregated(tmp_path):
    recs = [WEATHER, WEATHER, {k: v for k, v in WEATHER.items() if k != "domain"} | {"id": "w2"}]
    with pytest.raises(DatasetLoadError) as e:
        load_dataset(_write_lines(tmp_path / "d.jsonl", recs))
    assert [err.line for err in e.value.errors] == [2, 3]


def test_error_cutoff(tmp_path):
    recs = [{**WEATHER, "id": f"x{i}", "logical_form": "[IN:X"} for i in range(10)]
    with pytest.raises(DatasetLoadError) as e:
        load_dataset(_write_lines(tmp_path / "d.jsonl", recs), max_errors=3)
    assert e.value.truncated and len(e.value.errors) == 3


def test_nfc_normalization(tmp_path):
    decomposed = unicodedata.normalize("NFD", "café à 5 heures")
    rec = {**WEATHER, "utterance": decomposed,
           "logical_form": f"[IN:CREATE_ALARM [SL:LOCATION {unicodedata.normalize('NFD', 'café')} ] ]"}
    ex = load_dataset(_write_lines(tmp_path / "d.jsonl", [rec]))["w1"]
    assert ex.utterance == "café à 5 heures"
    assert ex.logical_form.children[0].value == unicodedata.normalize("NFC", "café")


def test_write_then_load_identity(tmp_path):
    d = load_dataset(_write_lines(tmp_path / "d.jsonl", [WEATHER]))
    for fmt in ("jsonl", "tsv"):
        write_dataset(d, tmp_path / f"out.{fmt}", fmt)
        assert load_dataset(tmp_path / f"out.{fmt}", fmt) == d


def test_empty_tsv_has_header_only(tmp_path):
    write_dataset(Dataset(), tmp_path / "e.tsv", "tsv")
    assert (tmp_path / "e.tsv").read_text() == "utterance\tlogical_form\tdomain\tid\tlanguage\tsplit\n"
    assert (tmp_path / "e.jsonl").exists() is False
    write_dataset(Dataset(), tmp_path / "e.jsonl")
    assert (tmp_path / "e.jsonl").read_text() == ""


def test_four_column_tsv(tmp_path):
    p = tmp_path / "mtop.tsv"
    p.write_text("set an alarm for 5 am\t[IN:CREATE_ALARM [SL:DATE_TIME 5 am ] ]\talarm\ta1\n",
                 encoding="utf-8")
    ex = load_dataset(p, "tsv", language="en", split="dev")["a1"]
    assert (ex.language, ex.split.value, ex.domain) == ("en", "dev", "alarm")


def _random_dataset(n, seed):
    rng = random.Random(seed)
    examples = []
    for i in range(n):
        t = random_tree(rng)
        examples.append(Example(
            f"id{rng.randrange(10**9):09d}-{i}", rng.choice(["en", "hi", "th"]),
            rng.choice(["alarm", "music"]), f"utterance {i} ça va \"quoted\"", t,
            rng.choice(["train", "dev", "test"])))
    return Dataset(examples).sorted()


@pytest.mark.parametrize("fmt", ["jsonl", "tsv"])
def test_round_trip_100_random(tmp_path, fmt):
    d = _random_dataset(100, seed=11)
    write_dataset(d, tmp_path / "d", fmt)
    assert load_dataset(tmp_path / "d", fmt) == d


def test_write_is_byte_deterministic_and_sorted():
    d = _random_dataset(30, seed=5)
    shuffled = list(d.examples)
    random.Random(0).shuffle(shuffled)
    assert dumps_dataset(Dataset(shuffled)) == dumps_dataset(d)
    ids = [json.loads(l)["id"] for l in dumps_dataset(d).splitlines()]
    assert ids == sorted(ids)
    assert list(json.loads(dumps_dataset(d).splitlines()[0])) == [
        "id", "language", "domain", "utterance", "logical_form", "split"]


def _pair_record(**over):
    rec = {
        "id": "s1", "domain": "alarm",
        "english_utterance": "wake me up by 5 am",
        "english_logical_form": "[IN:CREATE_ALARM [SL:DATE_TIME 5 am ] ]",
        "target_language": "hi",
        "target_utterance": "subah 5 baje mujhe utha dena",
        "target_logical_form": "[IN:CREATE_ALARM [SL:DATE_TIME subah 5 baje ] ]",
    }
    rec.update(over)
    return rec


def test_seed_pair_accepted(tmp_path):
    (pair,) = load_seed_pairs(_write_lines(tmp_path / "s.jsonl", [_pair_record()]))
    assert pair.english.language == "en" and pair.target.language == "hi"
    assert pair.target.logical_form.children[0].value == "subah 5 baje"


def test_seed_pair_slot_order_does_not_matter(tmp_path):
    rec = _pair_record(
        english_logical_form="[IN:GET_WEATHER [SL:ATTRIBUTE rain ] [SL:DATE today ] ]",
        target_logical_form="[IN:GET_WEATHER [SL:DATE aaj ] [SL:ATTRIBUTE barish ] ]")
    assert len(load_seed_pairs(_write_lines(tmp_path / "s.jsonl", [rec]))) == 1


def test_seed_pair_dropped_slot(tmp_path):
    rec = _pair_record(target_logical_form="[IN:CREATE_ALARM ]")
    with pytest.raises(DatasetLoadError) as e:
        load_seed_pairs(_write_lines(tmp_path / "s.jsonl", [rec]))
    assert isinstance(e.value.errors[0], SignatureMismatch)


def test_seed_pair_english_target(tmp_path):
    with pytest.raises(DatasetLoadError) as e:
        load_seed_pairs(_write_lines(tmp_path / "s.jsonl", [_pair_record(target_language="en")]))
    assert isinstance(e.value.errors[0], LanguageError)


def test_seed_file_250_pairs_11_domains(tmp_path):
    pairs = []
    for i in range(250):
        en = Example(f"s{i:03d}", "en", f"domain{i % 11}", f"call contact {i}",
                     intent("CREATE_CALL", slot("CONTACT", f"contact {i}")))
        tgt = Example(en.id, "hi", en.domain, f"sampark {i} ko call karo",
                      intent("CREATE_CALL", slot("CONTACT", f"sampark {i}")))
        pairs.append(SeedPair(en, tgt))
    write_seed_pairs(pairs, tmp_path / "seeds.jsonl")
    loaded = load_seed_pairs(tmp_path / "seeds.jsonl")
    assert len(loaded) == 250
    assert len({p.domain for p in loaded}) == 11
    assert loaded == pairs
