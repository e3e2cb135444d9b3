"""Prompt rendering for both tasks, plus the inverse parsers used by
agents that only see prompt text."""
from __future__ import annotations

import ast
import re

from .points import FaceMapping, GPInstance, parse_card
from .sokoban import SokobanState, parse_render, render
from .variants import SokobanVariant

SOKOBAN_TEMPLATE = """<|im_start|>user

You are a Sokoban solver.

Sokoban Quick Guide

Goal: Push all boxes (X) onto targets (O).


Symbols:

# Wall | _ Floor | O Target | X Box | P You | ✓ = Box on Target | S = You on Target


Rules:

1. Push boxes (can't pull).

2. Avoid walls (#).


Answers:

{answers}


Rewards:

Move: -0.1

Box on target: +1.0

All boxes placed: +10.0


[Current Observation]:{observation}

Decide the next action:

Always output: <think> [Your thoughts] </think> <answer> [your answer] </answer> with no extra text. Strictly follow this format. <|im_end|>

<|im_start|>assistant

<think>"""

GP_TEMPLATE = """<|im_start|>user

[Task Description]
You are an expert {target_number} points card game player. You will receive a set of {num_cards} cards.
Note that {face_card_msg}, and each card must be used once.
Your goal is to output a formula that evaluates to {target_number} using numbers from the cards and operators such as '+', '-', '*', '/', '(', ')', and '='.

[Input]
Cards: {cards}

[Output]
{
  "cards": [x, y, z, w], where {face_card_msg},
  "number": [a, b, c, d], where a, b, c, and d are the numbers on the cards,
  "formula": 'an equation that equals {target_number}',
}

Always output: <think> [Your thoughts] </think> <answer> [your answer] </answer> with no extra text. Strictly follow this format. <|im_end|>

<|im_start|>assistant

<think>"""

_DIRECTIONS = ("Up", "Down", "Left", "Right")


def answers_block(variant: SokobanVariant) -> str:
    line = " | ".join(f"<answer> {t} </answer>" for t in variant.tokens)
    if variant.canonical:
        return line
    mapping = ", ".join(f"{t} means {d}" for t, d in zip(variant.tokens, _DIRECTIONS))
    return f"{line}\n\n{mapping}"


def render_sokoban_prompt(state: SokobanState, variant: SokobanVariant) -> str:
    return (SOKOBAN_TEMPLATE
            .replace("{answers}", answers_block(variant))
            .replace("{observation}", "\n" + render(state)))


def format_cards(instance: GPInstance) -> str:
    return "[" + ", ".join(f"'{label}'" for label in instance.labels) + "]"


def render_gp_prompt(instance: GPInstance) -> str:
    # {face_card_msg} last: the mapping sentence itself contains no placeholders.
    return (GP_TEMPLATE
            .replace("{target_number}", str(instance.target))
            .replace("{num_cards}", str(instance.num_cards))
            .replace("{cards}", format_cards(instance))
            .replace("{face_card_msg}", instance.declared_mapping.message()))


# --- inverse direction -----------------------------------------------------

_OBS = re.compile(r"\[Current Observation\]:\n(.*?)\n\nDecide the next action:", re.DOTALL)
_ANSWERS = re.compile(r"Answers:\n\n(.*?)\n\n\nRewards:", re.DOTALL)
_EXEMPLAR = re.compile(r"<answer> (.*?) </answer>")
_EXPERT = re.compile(r"You are an expert (\d+) points card game player")
_CARDS = re.compile(r"^Cards: (.*)$", re.MULTILINE)
_UNIFORM = re.compile(r"^Note that 'J', 'Q', and 'K' count as '(\d+)', and each card", re.MULTILINE)
_STAGGERED = re.compile(
    r"^Note that 'J', 'Q', and 'K' count as '(\d+)', '(\d+)', and '(\d+)' respectively, and each card", re.MULTILINE
)


def parse_sokoban_prompt(prompt: str) -> tuple[SokobanState, tuple[str, ...]]:
    """Board and offered tokens (Up, Down, Left, Right order) of a rendered prompt."""
    obs = _OBS.search(prompt)
    answers = _ANSWERS.search(prompt)
    if not obs or not answers:
        raise ValueError("not a Sokoban prompt")
    tokens = tuple(_EXEMPLAR.findall(answers.group(1).split("\n")[0]))
    if len(tokens) != 4:
        raise ValueError("prompt does not offer four answer tokens")
    return parse_render(obs.group(1)), tokens


def parse_gp_prompt(prompt: str) -> GPInstance:
    """The hand, target and *declared* mapping of a rendered prompt.

    The returned instance scores under the declared mapping, which is all a
    reader of the prompt can know."""
    target = _EXPERT.search(prompt)
    cards = _CARDS.search(prompt)
    if not target or not cards:
        raise ValueError("not a General Points prompt")
    labels = ast.literal_eval(cards.group(1))
    m = _UNIFORM.search(prompt)
    if m:
        j = q = k = int(m.group(1))
    else:
        m = _STAGGERED.search(prompt)
        if not m:
            raise ValueError("face-card mapping not found")
        j, q, k = (int(g) for g in m.groups())
    mapping = FaceMapping("declared", j, q, k)
    return GPInstance(tuple(parse_card(str(c)) for c in labels), mapping, int(target.group(1)), "declared")


def prompt_to_messages(prompt: str) -> list[dict[str, str]]:
    """Chat messages for an OpenAI-style endpoint: the user turn of the
    template without the chat-markup tokens or the pre-filled ``<think>``."""
    body = prompt
    if body.startswith("<|im_start|>user\n"):
        body = body[len("<|im_start|>user\n"):]
    end = body.find("<|im_end|>")
    if end >= 0:
        body = body[:end]
    return [{"role": "user", "content": body.strip()}]

