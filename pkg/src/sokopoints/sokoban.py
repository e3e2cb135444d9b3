"""Sokoban world model: grid state, push dynamics, rewards, text rendering,
BFS solving and seeded puzzle generation.

Coordinates are ``(row, col)`` with the border of the grid always made of
walls. States are immutable; :func:`step` returns a new state.
"""
from __future__ import annotations

import enum
import random
from collections import deque
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Iterable, Optional

Pos = tuple[int, int]

MAX_STEPS = 30


class Action(enum.Enum):
    UP = "Up"
    RIGHT = "Right"
    DOWN = "Down"
    LEFT = "Left"

    @property
    def delta(self) -> Pos:
        return _DELTAS[self]


# Canonical expansion order; BFS tie-breaking depends on it.
ACTIONS = (Action.UP, Action.RIGHT, Action.DOWN, Action.LEFT)
_DELTAS = {Action.UP: (-1, 0), Action.RIGHT: (0, 1), Action.DOWN: (1, 0), Action.LEFT: (0, -1)}


class GenerationExhausted(RuntimeError):
    """No acceptable instance was found within the attempt budget."""


@dataclass(frozen=True)
class Grid:
    width: int
    height: int
    walls: frozenset[Pos]
    targets: frozenset[Pos]

    def __post_init__(self):
        if self.width < 3 or self.height < 3:
            raise ValueError("grid must be at least 3x3")
        if self.walls & self.targets:
            raise ValueError("walls and targets overlap")
        for r, c in self.walls | self.targets:
            if not (0 <= r < self.height and 0 <= c < self.width):
                raise ValueError(f"cell {(r, c)} out of bounds")
        for r in range(self.height):
            for c in range(self.width):
                if self.is_border((r, c)) and (r, c) not in self.walls:
                    raise ValueError(f"border cell {(r, c)} is not a wall")

    def is_border(self, pos: Pos) -> bool:
        r, c = pos
        return r in (0, self.height - 1) or c in (0, self.width - 1)

    def interior(self) -> list[Pos]:
        return [(r, c) for r in range(1, self.height - 1) for c in range(1, self.width - 1)]

    @cached_property
    def _dead_cells(self) -> frozenset[Pos]:
        """Floor cells from which a lone box can never reach any target."""
        live = set(self.targets)
        frontier = deque(self.targets)
        while frontier:
            r, c = frontier.popleft()
            for dr, dc in _DELTAS.values():
                # Reverse push: box came from (r+dr, c+dc), player stood at (r+2dr, c+2dc).
                prev = (r + dr, c + dc)
                stand = (r + 2 * dr, c + 2 * dc)
                if prev in live or prev in self.walls or stand in self.walls:
                    continue
                if not (0 <= stand[0] < self.height and 0 <= stand[1] < self.width):
                    continue
                live.add(prev)
                frontier.append(prev)
        return frozenset(p for p in self.interior() if p not in self.walls and p not in live)

    def is_corner(self, pos: Pos) -> bool:
        r, c = pos
        vertical = (r - 1, c) in self.walls or (r + 1, c) in self.walls
        horizontal = (r, c - 1) in self.walls or (r, c + 1) in self.walls
        return vertical and horizontal


@dataclass(frozen=True)
class SokobanState:
    grid: Grid
    boxes: frozenset[Pos]
    player: Pos
    steps_taken: int = 0
    max_steps: int = MAX_STEPS

    def __post_init__(self):
        if self.player in self.grid.walls or self.player in self.boxes:
            raise ValueError("player overlaps a wall or box")
        if self.boxes & self.grid.walls:
            raise ValueError("box on a wall")
        if len(self.boxes) != len(self.grid.targets):
            raise ValueError("box and target counts differ")
        if not 0 <= self.steps_taken <= self.max_steps:
            raise ValueError("steps_taken outside [0, max_steps]")

    @property
    def solved(self) -> bool:
        return self.boxes <= self.grid.targets

    @property
    def steps_left(self) -> int:
        return self.max_steps - self.steps_taken

    @property
    def terminated(self) -> bool:
        return self.solved or self.steps_taken >= self.max_steps


@dataclass(frozen=True)
class RewardSchedule:
    move_penalty: float = -0.1
    box_on_target: float = 1.0
    box_off_target: float = -1.0
    all_placed_bonus: float = 10.0


@dataclass(frozen=True)
class StepOutcome:
    next_state: SokobanState
    reward: float
    success: bool
    terminated: bool
    moved: bool


@dataclass(frozen=True)
class PuzzleSpec:
    dims: tuple[int, int] = (6, 6)  # (width, height)
    num_boxes: int = 1
    max_steps: int = MAX_STEPS
    seed: int = 0
    wall_prob: float = 0.2
    max_attempts: int = 10_000

    def __post_init__(self):
        if self.num_boxes not in (1, 2):
            raise ValueError("num_boxes must be 1 or 2")
        w, h = self.dims
        if (w - 2) * (h - 2) < 2 * self.num_boxes + 1:
            raise ValueError(f"dims {self.dims} cannot hold {self.num_boxes} boxes, targets and a player")


def step(state: SokobanState, action: Action, schedule: RewardSchedule = RewardSchedule()) -> StepOutcome:
    """Apply one action. Blocked moves leave positions unchanged but still
    consume a step and pay the move penalty."""
    if state.solved:
        raise ValueError("state is already solved")
    if state.steps_taken >= state.max_steps:
        raise ValueError("step budget exhausted")
    grid = state.grid
    dr, dc = action.delta
    pr, pc = state.player
    dest = (pr + dr, pc + dc)
    boxes = state.boxes
    player = state.player
    moved = False
    reward = schedule.move_penalty
    if dest not in grid.walls:
        if dest not in boxes:
            player, moved = dest, True
        else:
            beyond = (dest[0] + dr, dest[1] + dc)
            if beyond not in grid.walls and beyond not in boxes:
                boxes = (boxes - {dest}) | {beyond}
                player, moved = dest, True
                if beyond in grid.targets and dest not in grid.targets:
                    reward += schedule.box_on_target
                elif dest in grid.targets and beyond not in grid.targets:
                    reward += schedule.box_off_target
    nxt = replace(state, boxes=frozenset(boxes), player=player, steps_taken=state.steps_taken + 1)
    success = nxt.solved
    if success:
        reward += schedule.all_placed_bonus
    return StepOutcome(nxt, reward, success, nxt.terminated, moved)


def skip_turn(state: SokobanState, schedule: RewardSchedule = RewardSchedule()) -> StepOutcome:
    """A turn with no decodable action: positions unchanged, one step consumed."""
    if state.terminated:
        raise ValueError("episode already terminated")
    nxt = replace(state, steps_taken=state.steps_taken + 1)
    return StepOutcome(nxt, schedule.move_penalty, False, nxt.terminated, False)


def replay(state: SokobanState, actions: Iterable[Action], schedule: RewardSchedule = RewardSchedule()) -> list[StepOutcome]:
    out = []
    for a in actions:
        o = step(state, a, schedule)
        out.append(o)
        state = o.next_state
    return out


# --- rendering -------------------------------------------------------------

DEFAULT_SYMBOLS = {
    "wall": "#",
    "floor": "_",
    "target": "O",
    "box": "X",
    "player": "P",
    "box_on_target": "✓",
    "player_on_target": "S",
}


def render(state: SokobanState, symbols: dict[str, str] = DEFAULT_SYMBOLS) -> str:
    grid = state.grid
    lines = []
    for r in range(grid.height):
        row = []
        for c in range(grid.width):
            p = (r, c)
            on_target = p in grid.targets
            if p == state.player:
                row.append(symbols["player_on_target" if on_target else "player"])
            elif p in state.boxes:
                row.append(symbols["box_on_target" if on_target else "box"])
            elif on_target:
                row.append(symbols["target"])
            elif p in grid.walls:
                row.append(symbols["wall"])
            else:
                row.append(symbols["floor"])
        lines.append("".join(row))
    return "\n".join(lines)


def parse_render(text: str, symbols: dict[str, str] = DEFAULT_SYMBOLS, max_steps: int = MAX_STEPS) -> SokobanState:
    """Inverse of :func:`render`."""
    lookup = {v: k for k, v in symbols.items()}
    lines = text.strip("\n").split("\n")
    width = len(lines[0])
    if any(len(line) != width for line in lines):
        raise ValueError("ragged observation")
    walls, targets, boxes = set(), set(), set()
    player = None
    for r, line in enumerate(lines):
        for c, ch in enumerate(line):
            kind = lookup.get(ch)
            if kind is None:
                raise ValueError(f"unknown symbol {ch!r} at {(r, c)}")
            if kind == "wall":
                walls.add((r, c))
            if kind in ("target", "box_on_target", "player_on_target"):
                targets.add((r, c))
            if kind in ("box", "box_on_target"):
                boxes.add((r, c))
            if kind in ("player", "player_on_target"):
                if player is not None:
                    raise ValueError("more than one player")
                player = (r, c)
    if player is None:
        raise ValueError("no player in observation")
    grid = Grid(width, len(lines), frozenset(walls), frozenset(targets))
    return SokobanState(grid, frozenset(boxes), player, 0, max_steps)


# --- solving ---------------------------------------------------------------

def solve_bfs(state: SokobanState, max_steps: Optional[int] = None, prune: bool = True) -> Optional[list[Action]]:
    """Shortest action sequence solving ``state`` within ``max_steps`` moves.

    Nodes are ``(player, boxes)``; actions are expanded in canonical order, so
    the returned plan is the lexicographically first among shortest plans.
    With ``prune`` set, pushes onto dead cells (no path to any target even
    for a lone box) are skipped; this never changes the result.
    Returns ``None`` when no plan exists within the budget.
    """
    if max_steps is None:
        max_steps = state.steps_left
    if state.solved:
        return []
    grid = state.grid
    w = grid.width
    n = w * grid.height
    blocked = bytearray(n)
    for r, c in grid.walls:
        blocked[r * w + c] = 1
    dead = bytearray(n)
    if prune:
        for r, c in grid._dead_cells:
            dead[r * w + c] = 1
    goal = 0
    for r, c in grid.targets:
        goal |= 1 << (r * w + c)
    deltas = [dr * w + dc for dr, dc in (a.delta for a in ACTIONS)]

    start_mask = 0
    for r, c in state.boxes:
        start_mask |= 1 << (r * w + c)
    start = (state.player[0] * w + state.player[1], start_mask)
    parent = {start: None}
    frontier = [start]
    depth = 0
    while frontier and depth < max_steps:
        depth += 1
        nxt_frontier = []
        for node in frontier:
            p, mask = node
            for ai, d in enumerate(deltas):
                q = p + d
                if blocked[q]:
                    continue
                bit = 1 << q
                if mask & bit:
                    b = q + d
                    bbit = 1 << b
                    if blocked[b] or mask & bbit or dead[b]:
                        continue
                    child = (q, (mask ^ bit) | bbit)
                else:
                    child = (q, mask)
                if child in parent:
                    continue
                parent[child] = (node, ai)
                if child[1] == goal:
                    return _unwind(parent, child)
                nxt_frontier.append(child)
        frontier = nxt_frontier
    return None


def _unwind(parent, node) -> list[Action]:
    plan = []
    while parent[node] is not None:
        node, ai = parent[node]
        plan.append(ACTIONS[ai])
    plan.reverse()
    return plan


# --- generation ------------------------------------------------------------

def _connected(grid: Grid, start: Pos, needed: Iterable[Pos]) -> bool:
    seen = {start}
    frontier = [start]
    while frontier:
        r, c = frontier.pop()
        for dr, dc in _DELTAS.values():
            q = (r + dr, c + dc)
            if q not in seen and q not in grid.walls:
                seen.add(q)
                frontier.append(q)
    return all(p in seen for p in needed)


def _random_layout(spec: PuzzleSpec, rng: random.Random) -> Optional[SokobanState]:
    width, height = spec.dims
    walls = set()
    floor = []
    for r in range(height):
        for c in range(width):
            if r in (0, height - 1) or c in (0, width - 1):
                walls.add((r, c))
            elif rng.random() < spec.wall_prob:
                walls.add((r, c))
            else:
                floor.append((r, c))
    k = spec.num_boxes
    if len(floor) < 2 * k + 1:
        return None
    picks = rng.sample(floor, 2 * k + 1)
    targets, boxes, player = picks[:k], picks[k:2 * k], picks[2 * k]
    grid = Grid(width, height, frozenset(walls), frozenset(targets))
    return SokobanState(grid, frozenset(boxes), player, 0, spec.max_steps)


def generate_puzzle(spec: PuzzleSpec) -> tuple[SokobanState, list[Action]]:
    """Random walls/targets/boxes/player, kept only if BFS solves it within
    ``spec.max_steps``. Deterministic in ``spec.seed``."""
    rng = random.Random(spec.seed)
    for _ in range(spec.max_attempts):
        state = _random_layout(spec, rng)
        if state is None:
            continue
        grid = state.grid
        # Cheap rejections before the search; none of them discards a solvable puzzle.
        if any(b in grid._dead_cells for b in state.boxes):
            continue
        if not _connected(grid, state.player, state.boxes | grid.targets):
            continue
        plan = solve_bfs(state, spec.max_steps)
        if plan:
            return state, plan
    raise GenerationExhausted(f"no solvable puzzle for {spec} after {spec.max_attempts} attempts")
