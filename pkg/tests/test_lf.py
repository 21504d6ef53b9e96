import random

import pytest
from hypothesis import given

from llmt.lf import (EmptyInput, NodeKind, SlotWithBothValueAndChild, UnbalancedBrackets,
                     UnexpectedToken, UnknownNodePrefix, canonical_signature, canonicalize,
                     corrected_em, exact_match, intent, parse_logical_form, serialize, signature,
                     slot, slot_values)
from treegen import mutate_one_value, random_tree, shuffle_slots, trees

WEATHER = "[IN:GET_WEATHER [SL:ATTRIBUTE rainfall ] [SL:DATE today ] ]"
LF1 = "[IN:GET_WEATHER [SL:ATTRIBUTE rainfall] [SL:DATE today ] ]"
LF2 = "[IN:GET_WEATHER [SL:DATE today][SL:ATTRIBUTE rainfall ] ]"
NESTED = "[IN:A [SL:B [IN:C [SL:D x ]]]]"


def test_parse_alarm():
    t = parse_logical_form("[IN:CREATE_ALARM [SL:DATE_TIME 5 am ] ]")
    assert t.kind is NodeKind.INTENT and t.label == "CREATE_ALARM"
    (s,) = t.children
    assert (s.kind, s.label, s.value, s.children) == (NodeKind.SLOT, "DATE_TIME", "5 am", ())


def test_parse_weather_two_slots():
    t = parse_logical_form(WEATHER)
    assert t.label == "GET_WEATHER"
    assert [(c.label, c.value) for c in t.children] == [("ATTRIBUTE", "rainfall"), ("DATE", "today")]


def test_parse_nested():
    t = parse_logical_form(NESTED)
    inner = t.children[0].children[0]
    assert inner.label == "C" and inner.children[0].value == "x"


def test_parse_tolerates_tight_brackets_and_extra_space():
    assert serialize(parse_logical_form("[IN:X  [SL:Y  a\t b]\n]")) == "[IN:X [SL:Y a b ] ]"
    assert parse_logical_form("[IN:GET_WEATHER [SL:ATTRIBUTE][SL:DATE]]") == parse_logical_form(
        "[IN:GET_WEATHER [SL:ATTRIBUTE ] [SL:DATE ] ]")


@pytest.mark.parametrize("text, error", [
    ("[IN:CREATE_ALARM [SL:DATE_TIME 5 pm", UnbalancedBrackets),
    ("[IN:X ] ]", UnbalancedBrackets),
    ("]", UnbalancedBrackets),
    ("", EmptyInput),
    ("   \n", EmptyInput),
    ("[XX:FOO ]", UnknownNodePrefix),
    ("[IN:X [FOO ] ]", UnknownNodePrefix),
    ("[IN:X [SL:Y a [IN:Z ] ] ]", SlotWithBothValueAndChild),
    ("[IN:X [SL:Y [IN:Z ] a ] ]", SlotWithBothValueAndChild),
    ("[IN:X word ]", UnexpectedToken),
    ("[SL:X a ]", UnexpectedToken),
    ("[IN:X [IN:Y ] ]", UnexpectedToken),
    ("[IN:X ] trailing", UnexpectedToken),
    ("[IN: ]", UnexpectedToken),
])
def test_parse_errors(text, error):
    with pytest.raises(error):
        parse_logical_form(text)


def test_error_offsets_are_bytes():
    with pytest.raises(UnknownNodePrefix) as e:
        parse_logical_form("[IN:X [SL:Y é ] [BAD ] ]")
    # 'é' is two bytes in UTF-8, so the char offset 16 becomes byte 17
    assert e.value.offset == 17
    with pytest.raises(UnbalancedBrackets) as e:
        parse_logical_form("[IN:CREATE_ALARM [SL:DATE_TIME 5 pm")
    assert e.value.offset == 17


def test_serialize():
    t = intent("GET_WEATHER", slot("ATTRIBUTE", "rainfall"), slot("DATE", "today"))
    assert serialize(t) == WEATHER
    assert serialize(intent("GET_WEATHER")) == "[IN:GET_WEATHER ]"


def test_tree_invariants_enforced():
    with pytest.raises(ValueError):
        intent("X", intent("Y"))
    with pytest.raises(ValueError):
        slot("S", "a", intent("Y"))
    with pytest.raises(ValueError):
        slot("S", "a [b]")
    with pytest.raises(ValueError):
        intent("HAS SPACE")


@given(trees)
def test_round_trip(t):
    assert parse_logical_form(serialize(t)) == t


def test_signature():
    assert signature(parse_logical_form(WEATHER)).text == "[IN:GET_WEATHER [SL:ATTRIBUTE ] [SL:DATE ] ]"
    assert signature(intent("GET_WEATHER")).text == "[IN:GET_WEATHER ]"
    assert signature(parse_logical_form(NESTED)).text == "[IN:A [SL:B [IN:C [SL:D ] ] ] ]"


@given(trees)
def test_signature_has_no_values_and_round_trips(t):
    sig = signature(t)
    assert slot_values(sig.tree) == []
    assert serialize(sig.tree) == sig.text


def test_canonicalize_lf1_lf2():
    assert canonicalize(parse_logical_form(LF1)) == canonicalize(parse_logical_form(LF2))


def test_canonicalize_single_slot_unchanged():
    t = parse_logical_form("[IN:CREATE_ALARM [SL:DATE_TIME 5 am ] ]")
    assert canonicalize(t) == t


def test_canonicalize_same_label_tiebreak():
    t = intent("X", slot("S", "b"), slot("S", "a"))
    assert [c.value for c in canonicalize(t).children] == ["a", "b"]


@given(trees)
def test_canonicalize_idempotent(t):
    c = canonicalize(t)
    assert canonicalize(c) == c


@given(trees)
def test_signature_after_canonicalize_is_deterministic(t):
    assert signature(canonicalize(t)) == signature(canonicalize(t))
    assert canonical_signature(t) == canonical_signature(canonicalize(t))


def test_slot_values():
    assert slot_values(parse_logical_form(WEATHER)) == [("ATTRIBUTE", "rainfall"), ("DATE", "today")]
    assert slot_values(intent("X")) == []
    assert slot_values(parse_logical_form(NESTED)) == [("D", "x")]


@given(trees)
def test_slot_values_counts_value_nodes(t):
    assert len(slot_values(t)) == sum(1 for n in t.walk() if n.value is not None)


def test_corrected_em_cases():
    lf1, lf2 = parse_logical_form(LF1), parse_logical_form(LF2)
    assert corrected_em(lf1, lf2)
    assert not exact_match(lf1, lf2)
    assert corrected_em(lf1, lf1)
    changed = parse_logical_form("[IN:GET_WEATHER [SL:ATTRIBUTE snow ] [SL:DATE today ] ]")
    assert not corrected_em(lf1, changed)


def test_corrected_em_equivalence_relation():
    rng = random.Random(7)
    for _ in range(200):
        a = random_tree(rng)
        b = shuffle_slots(a, rng)
        c = shuffle_slots(b, rng)
        assert corrected_em(a, a)
        assert corrected_em(a, b) == corrected_em(b, a)
        assert corrected_em(a, b) and corrected_em(b, c) and corrected_em(a, c)
        d = random_tree(rng)
        assert corrected_em(a, d) == corrected_em(d, a)


def test_shuffle_and_mutate_oracles():
    rng = random.Random(3)
    for _ in range(300):
        t = random_tree(rng)
        assert corrected_em(t, shuffle_slots(t, rng))
        if slot_values(t):
            assert not corrected_em(t, mutate_one_value(t, rng))
