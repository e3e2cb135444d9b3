"""Reference versions of the per-step action reward and the GRPO advantage
and clipped-surrogate terms. Plain floats in, plain floats out; no
training loop lives here."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .sokoban import Action


@dataclass
class AdvantageGroup:
    rewards: Sequence[float]
    epsilon_std: float = 1e-8

    def __post_init__(self):
        if len(self.rewards) < 1:
            raise ValueError("a group needs at least one reward")


@dataclass
class ClipParams:
    epsilon: float = 0.2

    def __post_init__(self):
        if not 0 < self.epsilon < 1:
            raise ValueError("epsilon must lie in (0, 1)")


def action_match_reward(predicted: Optional[Action], expert: Action, format_ok: bool) -> float:
    """1.0 for the expert action, 0.1 for a well-formatted miss, else 0."""
    if predicted is not None and predicted == expert:
        return 1.0
    return 0.1 if format_ok else 0.0


def group_relative_advantage(group: AdvantageGroup) -> list[float]:
    """(r_i - mean) / std over the group, population std (no Bessel
    correction). Groups whose std falls below ``epsilon_std`` get zeros."""
    r = np.asarray(group.rewards, dtype=np.float64)
    centered = r - r.mean()
    std = float(np.sqrt(np.mean(centered ** 2)))
    if std < group.epsilon_std:
        return [0.0] * len(r)
    return (centered / std).tolist()


def grpo_clipped_term(ratio: float, advantage: float, clip: ClipParams = ClipParams()) -> float:
    """min(ratio * A, clamp(ratio, 1 - eps, 1 + eps) * A)."""
    if ratio <= 0:
        raise ValueError("ratio must be positive")
    clamped = min(max(ratio, 1 - clip.epsilon), 1 + clip.epsilon)
    return min(ratio * advantage, clamped * advantage)
