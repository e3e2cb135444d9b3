"""Instruction variants, random-word action vocabularies, action decoding and
the instruction-validity metric."""
from __future__ import annotations

import random
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from types import MappingProxyType
from typing import Mapping, Optional, Sequence, Union

from .formula import FormulaSyntaxError, parse_formula
from .points import MAPPINGS, SPLITS, FaceMapping, GPInstance, GPSplit, parse_gp_answer
from .responses import ParsedResponse, parse_response
from .sokoban import Action

# Order used by the prompt's answer exemplars.
TEMPLATE_ORDER = (Action.UP, Action.DOWN, Action.LEFT, Action.RIGHT)
CANONICAL_TOKENS = ("Up", "Down", "Left", "Right")


@dataclass(frozen=True)
class SokobanVariant:
    """A Sokoban evaluation column: action vocabulary plus board size.

    ``tokens`` are the words shown in the prompt for Up, Down, Left, Right.
    A fake variant shows them but only the canonical words decode."""
    name: str
    tokens: tuple[str, str, str, str] = CANONICAL_TOKENS
    fake: bool = False
    dims: tuple[int, int] = (6, 6)
    num_boxes: int = 1
    group: str = "id"

    def __post_init__(self):
        if len(self.tokens) != 4 or len({t.casefold() for t in self.tokens}) != 4:
            raise ValueError(f"{self.name}: need four distinct tokens, got {self.tokens}")

    @property
    def action_tokens(self) -> dict[str, Action]:
        return dict(zip(self.tokens, TEMPLATE_ORDER))

    @property
    def decoding_tokens(self) -> dict[str, Action]:
        return dict(zip(CANONICAL_TOKENS, TEMPLATE_ORDER)) if self.fake else self.action_tokens

    @property
    def admissible_set(self) -> frozenset[str]:
        return frozenset(self.tokens)

    @property
    def canonical(self) -> bool:
        return self.tokens == CANONICAL_TOKENS

    def token_for(self, action: Action) -> str:
        return self.tokens[TEMPLATE_ORDER.index(action)]


SOKOBAN_VARIANTS = MappingProxyType({
    v.name: v
    for v in (
        SokobanVariant("SimpleSokoban"),
        SokobanVariant("SimpleSokobanAlphabetical", ("A", "B", "C", "D"), group="instruction"),
        SokobanVariant("SimpleSokobanNumerical", ("1", "2", "3", "4"), group="instruction"),
        SokobanVariant("SimpleSokobanRandom", ("*", "&", "1", "M"), group="instruction"),
        SokobanVariant("LargerSokoban", dims=(10, 10), group="difficulty"),
        SokobanVariant("TwoBoxesSokoban", num_boxes=2, group="difficulty"),
        SokobanVariant("ComplexSokoban", dims=(10, 10), num_boxes=2, group="difficulty"),
        SokobanVariant("FakeSokobanNumerical", ("1", "2", "3", "4"), fake=True, group="fake"),
    )
})


@dataclass(frozen=True)
class Registry:
    sokoban: Mapping[str, SokobanVariant]
    gp_mappings: Mapping[str, FaceMapping]
    gp_splits: Mapping[str, GPSplit]


def builtin_variants() -> Registry:
    return Registry(SOKOBAN_VARIANTS, MAPPINGS, SPLITS)


# --- prompt diversity ------------------------------------------------------

@lru_cache(maxsize=1)
def bundled_wordlist() -> tuple[str, ...]:
    text = resources.files("sokopoints").joinpath("data/wordlist.txt").read_text(encoding="utf-8")
    return tuple(w for w in text.split("\n") if w)


@dataclass(frozen=True)
class VocabularySample:
    words: tuple[str, str, str, str]  # meaning Up, Down, Left, Right
    seed: int

    def variant(self) -> SokobanVariant:
        return SokobanVariant("Diverse:" + ",".join(self.words), self.words, group="diversity")


def sample_diverse_vocab(seed: int, wordlist: Optional[Sequence[str]] = None) -> VocabularySample:
    words = bundled_wordlist() if wordlist is None else wordlist
    if len(set(words)) != len(words) or len(words) < 4:
        raise ValueError("wordlist needs at least four distinct entries")
    return VocabularySample(tuple(random.Random(seed).sample(words, 4)), seed)


# --- decoding and validity -------------------------------------------------

def _lookup(token: str, table: Mapping[str, Action], case_sensitive: bool) -> Optional[Action]:
    token = token.strip()
    if case_sensitive:
        return table.get(token)
    folded = {k.casefold(): v for k, v in table.items()}
    return folded.get(token.casefold())


def decode_action(answer_text: str, variant: SokobanVariant, case_sensitive: bool = False) -> Optional[Action]:
    """The action named by ``answer_text``, or None if it is not exactly one
    token of the variant's decoding vocabulary."""
    return _lookup(answer_text, variant.decoding_tokens, case_sensitive)


def check_validity(
    response: Union[ParsedResponse, str],
    context: Union[SokobanVariant, GPInstance],
    case_sensitive: bool = False,
) -> bool:
    """Instruction adherence, independent of task success.

    Sokoban: the answer is one of the tokens the prompt offered.
    General Points: the ``number`` list matches the card values under the
    prompt's declared mapping and the formula is syntactically legal.
    Responses without a well-formed answer block are invalid."""
    if isinstance(response, str):
        response = parse_response(response)
    if not response.format_ok:
        return False
    if isinstance(context, SokobanVariant):
        return _lookup(response.answer_text, context.action_tokens, case_sensitive) is not None
    answer = parse_gp_answer(response.answer_text)
    if answer is None or answer.number_field is None:
        return False
    if Counter(answer.number_field) != Counter(context.declared_values):
        return False
    try:
        parse_formula(answer.formula_field)
    except FormulaSyntaxError:
        return False
    return True
