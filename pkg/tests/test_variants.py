import pytest
from hypothesis import given, strategies as st

from sokopoints.points import MAPPINGS, SPLITS, GPInstance, format_gp_answer, generate_instance
from sokopoints.responses import parse_response
from sokopoints.sokoban import Action
from sokopoints.variants import (
    CANONICAL_TOKENS,
    SOKOBAN_VARIANTS,
    SokobanVariant,
    builtin_variants,
    bundled_wordlist,
    check_validity,
    decode_action,
    sample_diverse_vocab,
)


def wrap(a):
    return f"<think> t </think> <answer> {a} </answer>"


def test_registry_contents():
    reg = builtin_variants()
    assert "SimpleSokobanNumerical" in reg.sokoban
    assert reg.sokoban["SimpleSokobanAlphabetical"].tokens == ("A", "B", "C", "D")
    assert reg.sokoban["SimpleSokobanRandom"].tokens == ("*", "&", "1", "M")
    assert reg.sokoban["LargerSokoban"].dims == (10, 10)
    assert reg.sokoban["TwoBoxesSokoban"].num_boxes == 2
    assert reg.sokoban["ComplexSokoban"].dims == (10, 10) and reg.sokoban["ComplexSokoban"].num_boxes == 2
    assert reg.sokoban["FakeSokobanNumerical"].fake
    assert {"all_5", "all_7", "all_12", "regular", "fake", "five_cards", "large_number"} <= set(reg.gp_splits)


@pytest.mark.parametrize("name", sorted(SOKOBAN_VARIANTS))
def test_decode_prompted_tokens(name):
    v = SOKOBAN_VARIANTS[name]
    for token, action in zip(v.tokens, (Action.UP, Action.DOWN, Action.LEFT, Action.RIGHT)):
        if v.fake:
            assert decode_action(token, v) is None or token in CANONICAL_TOKENS
        else:
            assert decode_action(token, v) is action
            assert v.token_for(action) == token


def test_fake_variant_decodes_only_training_words():
    fake = SOKOBAN_VARIANTS["FakeSokobanNumerical"]
    assert decode_action("Up", fake) is Action.UP
    assert decode_action("Right", fake) is Action.RIGHT
    assert decode_action("1", fake) is None


def test_decoding_is_case_insensitive_by_default():
    v = SOKOBAN_VARIANTS["SimpleSokoban"]
    assert decode_action("up", v) is Action.UP
    assert decode_action("  LEFT ", v) is Action.LEFT
    assert decode_action("up", v, case_sensitive=True) is None
    assert decode_action("Up Up", v) is None


def test_validity_is_membership_in_the_offered_tokens():
    num = SOKOBAN_VARIANTS["SimpleSokobanNumerical"]
    assert check_validity(wrap("3"), num)
    assert not check_validity(wrap("Left"), num)
    assert not check_validity("3", num)  # no answer block
    fake = SOKOBAN_VARIANTS["FakeSokobanNumerical"]
    assert check_validity(wrap("3"), fake)
    assert not check_validity(wrap("Left"), fake)


def test_gp_validity_uses_declared_values():
    inst = generate_instance("regular", 2)
    right = format_gp_answer(inst, "1+1")
    assert check_validity(wrap(right), inst)
    frozen = GPInstance(inst.cards, MAPPINGS["all_10"])
    assert not check_validity(wrap(format_gp_answer(frozen, "1+1")), inst)
    assert not check_validity(wrap(format_gp_answer(inst, "1+")), inst)


def test_variant_needs_four_distinct_tokens():
    with pytest.raises(ValueError):
        SokobanVariant("bad", ("a", "b", "c"))
    with pytest.raises(ValueError):
        SokobanVariant("bad", ("a", "A", "c", "d"))


def test_wordlist_is_clean():
    words = bundled_wordlist()
    assert len(words) >= 1000
    assert len(set(words)) == len(words)
    reserved = {"up", "down", "left", "right"}
    assert not reserved & set(words)
    assert all(w.isalpha() and w.islower() for w in words)


@given(st.integers(0, 2**63 - 1))
def test_vocab_samples_are_deterministic_and_distinct(seed):
    a = sample_diverse_vocab(seed)
    assert a == sample_diverse_vocab(seed)
    assert len(set(a.words)) == 4
    v = a.variant()
    for w, action in zip(v.tokens, (Action.UP, Action.DOWN, Action.LEFT, Action.RIGHT)):
        assert decode_action(w, v) is action


def test_vocab_sampling_needs_enough_words():
    with pytest.raises(ValueError):
        sample_diverse_vocab(0, ["a", "b", "c"])
    assert set(sample_diverse_vocab(0, ["a", "b", "c", "d"]).words) == {"a", "b", "c", "d"}
