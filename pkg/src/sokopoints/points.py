"""General Points (the 24 game with configurable face-card values).

A hand is solved by combining every mapped card value exactly once with
``+ - * /`` and any parenthesization.
"""
from __future__ import annotations

import json
import random
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from types import MappingProxyType
from typing import Optional, Sequence, Union

from .formula import BinOp, Num, Verdict, check_formula, parse_formula, FormulaSyntaxError, to_text
from .responses import parse_answer_object, parse_response
from .sokoban import GenerationExhausted

RANK_LABELS = ("A", "2", "3", "4", "5", "6", "7", "8", "9", "10", "J", "Q", "K")
DEFAULT_TARGET = 24


@dataclass(frozen=True)
class Card:
    rank: int  # 1 (A) .. 13 (K)

    def __post_init__(self):
        if not 1 <= self.rank <= 13:
            raise ValueError(f"rank {self.rank} outside 1..13")

    @property
    def label(self) -> str:
        return RANK_LABELS[self.rank - 1]

    @property
    def is_face(self) -> bool:
        return self.rank >= 11

    @classmethod
    def from_label(cls, label: str) -> "Card":
        return cls(RANK_LABELS.index(label.strip().upper()) + 1)


# Large-number hands carry plain integers (14..19) next to cards.
Entry = Union[Card, int]


@dataclass(frozen=True)
class FaceMapping:
    name: str
    j_value: int
    q_value: int
    k_value: int

    def __post_init__(self):
        if min(self.j_value, self.q_value, self.k_value) < 1:
            raise ValueError("face values must be >= 1")

    @property
    def uniform(self) -> bool:
        return self.j_value == self.q_value == self.k_value

    def message(self) -> str:
        """The sentence fragment the prompt uses to declare the mapping."""
        if self.uniform:
            return f"'J', 'Q', and 'K' count as '{self.j_value}'"
        return f"'J', 'Q', and 'K' count as '{self.j_value}', '{self.q_value}', and '{self.k_value}' respectively"


MAPPINGS = MappingProxyType({
    m.name: m
    for m in (
        FaceMapping("all_10", 10, 10, 10),
        FaceMapping("all_5", 5, 5, 5),
        FaceMapping("all_7", 7, 7, 7),
        FaceMapping("all_12", 12, 12, 12),
        FaceMapping("regular", 11, 12, 13),
        FaceMapping("all_8", 8, 8, 8),
        FaceMapping("all_9", 9, 9, 9),
        FaceMapping("mixed", 8, 9, 10),
        FaceMapping("staggered", 7, 8, 9),
        # Declared (not scored) on the fake split.
        FaceMapping("fake_regular", 11, 12, 13),
    )
})
TRAINING_MAPPING = MAPPINGS["all_10"]
DIVERSITY_REGIMES = ("all_10", "all_8", "all_9", "mixed", "staggered")


def map_card_value(card: Entry, mapping: FaceMapping) -> int:
    if isinstance(card, int):
        return card
    if card.rank == 11:
        return mapping.j_value
    if card.rank == 12:
        return mapping.q_value
    if card.rank == 13:
        return mapping.k_value
    return card.rank


def card_label(card: Entry) -> str:
    return str(card) if isinstance(card, int) else card.label


def parse_card(token: str) -> Entry:
    token = token.strip().strip("'\"")
    if token.upper() in RANK_LABELS:
        return Card.from_label(token)
    if token.isdigit():
        n = int(token)
        # "1" reads as the ace; only values past the deck are bare numbers.
        return Card(n) if 1 <= n <= 13 else n
    raise ValueError(f"not a card: {token!r}")


@dataclass(frozen=True)
class GPSplit:
    """How hands for one evaluation column are drawn and scored.

    ``mapping`` scores answers; ``prompt_mapping`` is what the prompt
    declares (differs only on the fake split)."""
    name: str
    mapping: FaceMapping = TRAINING_MAPPING
    prompt_mapping: Optional[FaceMapping] = None
    num_cards: int = 4
    require_face: bool = False
    large_number: bool = False
    target: int = DEFAULT_TARGET
    fake: bool = False

    @property
    def declared_mapping(self) -> FaceMapping:
        return self.prompt_mapping or self.mapping


SPLITS = MappingProxyType({
    s.name: s
    for s in (
        GPSplit("training"),
        GPSplit("all_5", MAPPINGS["all_5"]),
        GPSplit("all_7", MAPPINGS["all_7"]),
        GPSplit("all_12", MAPPINGS["all_12"], require_face=True),
        GPSplit("regular", MAPPINGS["regular"], require_face=True),
        GPSplit("large_number", large_number=True),
        GPSplit("five_cards", num_cards=5),
        GPSplit("fake", TRAINING_MAPPING, MAPPINGS["fake_regular"], require_face=True, fake=True),
        GPSplit("all_8", MAPPINGS["all_8"]),
        GPSplit("all_9", MAPPINGS["all_9"]),
        GPSplit("mixed", MAPPINGS["mixed"]),
        GPSplit("staggered", MAPPINGS["staggered"]),
    )
})


@dataclass(frozen=True)
class GPInstance:
    cards: tuple[Entry, ...]
    mapping: FaceMapping = TRAINING_MAPPING
    target: int = DEFAULT_TARGET
    split_tag: str = "training"
    prompt_mapping: Optional[FaceMapping] = None

    @property
    def num_cards(self) -> int:
        return len(self.cards)

    @property
    def values(self) -> list[int]:
        """Card values under the scoring mapping."""
        return [map_card_value(c, self.mapping) for c in self.cards]

    @property
    def declared_mapping(self) -> FaceMapping:
        return self.prompt_mapping or self.mapping

    @property
    def declared_values(self) -> list[int]:
        return [map_card_value(c, self.declared_mapping) for c in self.cards]

    @property
    def labels(self) -> list[str]:
        return [card_label(c) for c in self.cards]

    def to_dict(self) -> dict:
        return {
            "cards": self.labels,
            "mapping": self.mapping.name,
            "prompt_mapping": self.declared_mapping.name,
            "target": self.target,
            "split": self.split_tag,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GPInstance":
        mapping = MAPPINGS[d.get("mapping", "all_10")]
        prompt = MAPPINGS[d["prompt_mapping"]] if d.get("prompt_mapping") else None
        return cls(
            tuple(parse_card(str(c)) for c in d["cards"]),
            mapping,
            int(d.get("target", DEFAULT_TARGET)),
            d.get("split", "training"),
            None if prompt == mapping else prompt,
        )


# --- solving ---------------------------------------------------------------
# Trees are ints (leaves) or (op, left, right) tuples while searching; only
# the returned witness is turned into an Expr.

def _split_pairs(values: tuple[int, ...]):
    n = len(values)
    seen = set()
    for mask in range(1, (1 << n) - 1):
        left = tuple(values[i] for i in range(n) if mask >> i & 1)
        right = tuple(values[i] for i in range(n) if not mask >> i & 1)
        if (left, right) not in seen:
            seen.add((left, right))
            yield left, right


@lru_cache(maxsize=1 << 18)
def _reachable(values: tuple[int, ...]) -> dict:
    """Every value obtainable from the sorted multiset ``values``, each with
    the first tree found for it."""
    if len(values) == 1:
        return {Fraction(values[0]): values[0]}
    out = {}
    for left, right in _split_pairs(values):
        rl = _reachable(left)
        rr = _reachable(right)
        for a, ta in rl.items():
            for b, tb in rr.items():
                for op, v in (("+", a + b), ("-", a - b), ("*", a * b)):
                    if v not in out:
                        out[v] = (op, ta, tb)
                if b and (v := a / b) not in out:
                    out[v] = ("/", ta, tb)
    return out


def _find(values: tuple[int, ...], target: Fraction):
    if len(values) == 1:
        return values[0] if values[0] == target else None
    for left, right in _split_pairs(values):
        rl = _reachable(left)
        rr = _reachable(right)
        for a, ta in rl.items():
            # For each operator, the right operand that would hit the target.
            needs = [("+", target - a), ("-", a - target)]
            if a:
                needs.append(("*", target / a))
            elif target == 0 and rr:
                needs.append(("*", next(iter(rr))))
            if target:
                needs.append(("/", a / target))
            elif a == 0:
                needs.extend(("/", b) for b in rr if b)
            for op, b in needs:
                if op == "/" and b == 0:
                    continue
                tb = rr.get(b)
                if tb is not None:
                    return (op, ta, tb)
    return None


def _to_expr(tree):
    if isinstance(tree, int):
        return Num(tree)
    op, a, b = tree
    return BinOp(op, _to_expr(a), _to_expr(b))


@lru_cache(maxsize=65536)
def _solve_sorted(values: tuple[int, ...], target: int) -> Optional[str]:
    tree = _find(values, Fraction(target))
    return None if tree is None else to_text(_to_expr(tree))


def solve_exhaustive(values: Sequence[int], target: int = DEFAULT_TARGET) -> Optional[str]:
    """A formula using each of ``values`` once that equals ``target``, or None.

    Searches every binary expression tree over every ordering of the values
    (subtrees are shared through a cache keyed on sub-multisets). The input
    is sorted first, so the answer depends only on the multiset."""
    values = tuple(sorted(int(v) for v in values))
    if not 1 <= len(values) <= 5:
        raise ValueError("between 1 and 5 values are supported")
    return _solve_sorted(values, int(target))


# --- generation ------------------------------------------------------------

def generate_instance(split: Union[str, GPSplit], seed: int, max_attempts: int = 10_000) -> GPInstance:
    if isinstance(split, str):
        split = SPLITS[split]
    rng = random.Random(seed)
    for _ in range(max_attempts):
        cards: list[Entry] = [Card(rng.randint(1, 13)) for _ in range(split.num_cards)]
        if split.require_face and not any(c.is_face for c in cards):
            continue
        if split.large_number:
            cards[rng.randrange(split.num_cards)] = rng.randint(14, 19)
        inst = GPInstance(
            tuple(cards),
            split.mapping,
            split.target,
            split.name,
            split.prompt_mapping,
        )
        if solve_exhaustive(inst.values, split.target) is not None:
            return inst
    raise GenerationExhausted(f"no solvable hand for split {split.name!r} after {max_attempts} attempts")


# --- answers and scoring ---------------------------------------------------

@dataclass(frozen=True)
class GPAnswer:
    cards_field: list
    number_field: Optional[list[int]]  # None when not a list of integers
    formula_field: str


@dataclass(frozen=True)
class GPScore:
    points: int
    verdict: Verdict
    success: bool


_POINTS = {Verdict.CORRECT: 5, Verdict.WRONG_TARGET: 1, Verdict.WRONG_NUMBERS: -2, Verdict.ILLEGAL: -3}


def _int_list(field) -> Optional[list[int]]:
    if not isinstance(field, (list, tuple)):
        return None
    out = []
    for x in field:
        if isinstance(x, bool):
            return None
        if isinstance(x, int):
            out.append(x)
        elif isinstance(x, str) and x.strip().isdigit():
            out.append(int(x))
        else:
            return None
    return out


def parse_gp_answer(answer_text: str) -> Optional[GPAnswer]:
    obj = parse_answer_object(answer_text)
    if obj is None or not isinstance(obj.get("formula"), str):
        return None
    cards = obj.get("cards")
    return GPAnswer(list(cards) if isinstance(cards, (list, tuple)) else [], _int_list(obj.get("number")), obj["formula"])


def format_gp_answer(instance: GPInstance, formula: str) -> str:
    """The answer object for ``instance`` with numbers under its declared mapping."""
    return json.dumps({
        "cards": instance.labels,
        "number": instance.declared_values,
        "formula": formula,
    })


def score_gp_answer(response_text: str, instance: GPInstance) -> GPScore:
    """+5 correct, +1 right numbers but wrong value, -2 wrong numbers,
    -3 no readable answer object or illegal formula. Checked in that
    severity order, so co-occurring defects score the worst one."""
    parsed = parse_response(response_text)
    answer = parse_gp_answer(parsed.answer_text) if parsed.format_ok else None
    if answer is None:
        return GPScore(-3, Verdict.ILLEGAL, False)
    try:
        parse_formula(answer.formula_field)
    except FormulaSyntaxError:
        return GPScore(-3, Verdict.ILLEGAL, False)
    required = instance.values
    if answer.number_field is None or Counter(answer.number_field) != Counter(required):
        return GPScore(-2, Verdict.WRONG_NUMBERS, False)
    verdict = check_formula(answer.formula_field, required, instance.target)
    return GPScore(_POINTS[verdict], verdict, verdict is Verdict.CORRECT)
