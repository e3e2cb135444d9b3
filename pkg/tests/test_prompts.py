import pytest
from hypothesis import given, settings, strategies as st

from golden import all_rendered, expected, gp_cases, sokoban_cases
from sokopoints.points import SPLITS, generate_instance
from sokopoints.prompts import (
    parse_gp_prompt,
    parse_sokoban_prompt,
    prompt_to_messages,
    render_gp_prompt,
    render_sokoban_prompt,
)
from sokopoints.sokoban import PuzzleSpec, generate_puzzle
from sokopoints.variants import SOKOBAN_VARIANTS, sample_diverse_vocab


@pytest.mark.parametrize("name,rendered", list(all_rendered()), ids=lambda x: x if isinstance(x, str) and x.endswith(".txt") else "")
def test_prompt_matches_fixture_bytes(name, rendered):
    assert rendered.encode("utf-8") == expected(name).encode("utf-8")


def test_every_sokoban_variant_has_a_fixture():
    covered = {v.name for _, _, v in sokoban_cases()}
    assert set(SOKOBAN_VARIANTS) <= covered


def test_prompts_end_with_open_think():
    for _, text in all_rendered():
        assert text.endswith("<|im_start|>assistant\n\n<think>")


def test_sokoban_prompt_round_trip():
    for _, state, variant in sokoban_cases():
        parsed_state, tokens = parse_sokoban_prompt(render_sokoban_prompt(state, variant))
        assert parsed_state == state
        assert tokens == variant.tokens


def test_gp_prompt_round_trip_keeps_declared_mapping():
    for _, inst in gp_cases():
        back = parse_gp_prompt(render_gp_prompt(inst))
        assert back.labels == inst.labels
        assert back.values == inst.declared_values
        assert back.target == inst.target


def test_fake_prompt_is_indistinguishable_from_its_declared_split():
    fake = generate_instance("fake", 4)
    regular = type(fake)(fake.cards, SPLITS["regular"].mapping, 24, "regular")
    assert render_gp_prompt(fake) == render_gp_prompt(regular)
    state, _ = generate_puzzle(PuzzleSpec(seed=4))
    assert render_sokoban_prompt(state, SOKOBAN_VARIANTS["FakeSokobanNumerical"]) == render_sokoban_prompt(
        state, SOKOBAN_VARIANTS["SimpleSokobanNumerical"]
    )


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10**6), st.integers(0, 10**6))
def test_diverse_prompts_parse_back(puzzle_seed, vocab_seed):
    state, _ = generate_puzzle(PuzzleSpec(seed=puzzle_seed))
    variant = sample_diverse_vocab(vocab_seed).variant()
    s, tokens = parse_sokoban_prompt(render_sokoban_prompt(state, variant))
    assert s == state and tokens == variant.tokens


def test_chat_messages_strip_markup():
    _, text = next(iter(all_rendered()))
    (msg,) = prompt_to_messages(text)
    assert msg["role"] == "user"
    assert msg["content"].startswith("You are a Sokoban solver.")
    assert "<|im_end|>" not in msg["content"] and "<|im_start|>" not in msg["content"]


def test_parsers_reject_other_text():
    with pytest.raises(ValueError):
        parse_sokoban_prompt("hello")
    with pytest.raises(ValueError):
        parse_gp_prompt("hello")
