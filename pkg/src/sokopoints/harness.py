"""Episode runners, per-split aggregation and report emission."""
from __future__ import annotations

import csv
import io
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Optional, Sequence, Union

from .agents import Agent
from .points import SPLITS, GPInstance, generate_instance, score_gp_answer
from .prompts import render_gp_prompt, render_sokoban_prompt
from .responses import parse_response
from .seeding import derive_seed, digest
from .sokoban import MAX_STEPS, PuzzleSpec, RewardSchedule, SokobanState, generate_puzzle, skip_turn, step
from .variants import SOKOBAN_VARIANTS, SokobanVariant, check_validity, decode_action

log = logging.getLogger(__name__)

SOKOBAN_SPLITS = (
    "SimpleSokoban",
    "SimpleSokobanAlphabetical",
    "SimpleSokobanNumerical",
    "SimpleSokobanRandom",
    "LargerSokoban",
    "TwoBoxesSokoban",
    "ComplexSokoban",
    "FakeSokobanNumerical",
)
GP_SPLITS = ("training", "all_5", "all_7", "all_12", "regular", "large_number", "five_cards", "fake")
GP_GROUPS = {
    "training": "id",
    "all_5": "instruction",
    "all_7": "instruction",
    "all_12": "mixed",
    "regular": "mixed",
    "large_number": "difficulty",
    "five_cards": "difficulty",
    "fake": "fake",
}
GROUP_ORDER = ("id", "instruction", "mixed", "difficulty", "fake", "diversity")


@dataclass
class Turn:
    prompt: str
    response: str
    valid: bool
    reward: float
    action: Optional[str] = None  # decoded Sokoban action
    points: Optional[int] = None  # General Points score


@dataclass
class EpisodeRecord:
    task: str
    variant: str
    seed: int
    turns: list[Turn] = field(default_factory=list)
    success: bool = False
    validity_fraction: float = 0.0
    steps_used: int = 0
    error: Optional[str] = None

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, ensure_ascii=False)


def _finish(rec: EpisodeRecord) -> EpisodeRecord:
    if rec.turns:
        rec.validity_fraction = sum(t.valid for t in rec.turns) / len(rec.turns)
    return rec


def run_sokoban_episode(
    state: SokobanState,
    variant: SokobanVariant,
    agent: Agent,
    schedule: RewardSchedule = RewardSchedule(),
    seed: int = 0,
) -> EpisodeRecord:
    """Query the agent once per step until solved or out of steps. Turns
    whose answer does not decode still consume a step."""
    rec = EpisodeRecord("sokoban", variant.name, seed)
    while not state.terminated:
        prompt = render_sokoban_prompt(state, variant)
        try:
            response = agent.respond(prompt)
        except Exception as e:  # any agent failure ends this episode only
            rec.error = f"{type(e).__name__}: {e}"
            break
        parsed = parse_response(response)
        valid = check_validity(parsed, variant)
        action = decode_action(parsed.answer_text, variant) if parsed.format_ok else None
        outcome = step(state, action, schedule) if action is not None else skip_turn(state, schedule)
        rec.turns.append(Turn(prompt, response, valid, outcome.reward, action=action.value if action else None))
        state = outcome.next_state
        rec.success = outcome.success
    rec.steps_used = state.steps_taken
    return _finish(rec)


def run_gp_trial(instance: GPInstance, agent: Agent, seed: int = 0) -> EpisodeRecord:
    rec = EpisodeRecord("gp", instance.split_tag, seed)
    prompt = render_gp_prompt(instance)
    try:
        response = agent.respond(prompt)
    except Exception as e:
        rec.error = f"{type(e).__name__}: {e}"
        return rec
    score = score_gp_answer(response, instance)
    valid = check_validity(response, instance)
    rec.turns.append(Turn(prompt, response, valid, float(score.points), points=score.points))
    rec.success = score.success
    rec.steps_used = 1
    return _finish(rec)


# --- batch evaluation ------------------------------------------------------

@dataclass
class EvalConfig:
    task: str = "sokoban"
    splits: Optional[Sequence[str]] = None  # None: every evaluation split for the task
    episodes_per_split: int = 100
    seed: int = 0
    concurrency: int = 1

    def resolved_splits(self) -> list[str]:
        if self.splits:
            return list(self.splits)
        return list(SOKOBAN_SPLITS if self.task == "sokoban" else GP_SPLITS)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["splits"] = self.resolved_splits()
        # Concurrency never changes results, so it stays out of the digest.
        d.pop("concurrency")
        return d


def split_group(task: str, split: str) -> str:
    if task == "sokoban":
        return SOKOBAN_VARIANTS[split].group
    return GP_GROUPS.get(split, "diversity")


def episode_seed(seed: int, index: int) -> int:
    # Independent of the split, so the same index sees the same board or
    # hand on every split that shares a size.
    return derive_seed(seed, "episode", index)


def sokoban_episode_state(variant: SokobanVariant, ep_seed: int) -> SokobanState:
    state, _ = generate_puzzle(PuzzleSpec(variant.dims, variant.num_boxes, MAX_STEPS, ep_seed))
    return state


def run_one(task: str, split: str, index: int, seed: int, agent: Agent) -> EpisodeRecord:
    s = episode_seed(seed, index)
    if task == "sokoban":
        variant = SOKOBAN_VARIANTS[split]
        return run_sokoban_episode(sokoban_episode_state(variant, s), variant, agent, seed=s)
    return run_gp_trial(generate_instance(SPLITS[split], s), agent, seed=s)


@dataclass
class SplitResult:
    split: str
    group: str
    episodes: int
    successes: int
    success_rate: float
    validity_rate: float
    errors: int


@dataclass
class EvalReport:
    task: str
    seed: int
    episodes_per_split: int
    config_digest: str
    results: list[SplitResult]
    episodes: list[EpisodeRecord] = field(default_factory=list, repr=False)

    @property
    def errors(self) -> int:
        return sum(r.errors for r in self.results)

    @property
    def partial(self) -> bool:
        return self.errors > 0

    def grouped(self) -> list[tuple[str, list[SplitResult]]]:
        order = {g: i for i, g in enumerate(GROUP_ORDER)}
        groups: dict[str, list[SplitResult]] = {}
        for r in self.results:
            groups.setdefault(r.group, []).append(r)
        return sorted(groups.items(), key=lambda kv: order.get(kv[0], len(order)))

    def to_dict(self) -> dict[str, Any]:
        return {
            "task": self.task,
            "seed": self.seed,
            "episodes_per_split": self.episodes_per_split,
            "config_digest": self.config_digest,
            "partial": self.partial,
            "errors": self.errors,
            "groups": [{"group": g, "splits": [asdict(r) for r in rs]} for g, rs in self.grouped()],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["group", "split", "episodes", "successes", "success_rate", "validity_rate", "errors"])
        for g, rs in self.grouped():
            for r in rs:
                w.writerow([g, r.split, r.episodes, r.successes, f"{r.success_rate:.4f}", f"{r.validity_rate:.4f}", r.errors])
        return buf.getvalue()

    def to_text(self) -> str:
        """Success and validity rows, with ``|`` between column groups."""
        cells = [[r.split for r in rs] for _, rs in self.grouped()]
        succ = [[f"{r.success_rate:.2f}" for r in rs] for _, rs in self.grouped()]
        val = [[f"{r.validity_rate:.2f}" for r in rs] for _, rs in self.grouped()]
        widths = [[max(len(a), len(b), len(c)) for a, b, c in zip(*cols)] for cols in zip(cells, succ, val)]

        def line(label, rows):
            parts = [" ".join(x.rjust(wd) for x, wd in zip(row, ws)) for row, ws in zip(rows, widths)]
            return f"{label:<9}" + " | ".join(parts)

        return "\n".join([
            f"{self.task} seed={self.seed} episodes/split={self.episodes_per_split}",
            line("", cells),
            line("success", succ),
            line("validity", val),
        ]) + "\n"


def aggregate(task: str, split: str, episodes: Sequence[EpisodeRecord]) -> SplitResult:
    n = len(episodes)
    successes = sum(e.success for e in episodes)
    return SplitResult(
        split=split,
        group=split_group(task, split),
        episodes=n,
        successes=successes,
        success_rate=successes / n if n else 0.0,
        validity_rate=sum(e.validity_fraction for e in episodes) / n if n else 0.0,
        errors=sum(e.error is not None for e in episodes),
    )


def evaluate(config: EvalConfig, agent: Agent) -> EvalReport:
    """Run ``episodes_per_split`` episodes on every split. Results are
    collected by episode index, so the report does not depend on
    ``concurrency`` for deterministic agents."""
    splits = config.resolved_splits()
    jobs = [(split, i) for split in splits for i in range(config.episodes_per_split)]

    def work(job):
        split, i = job
        return run_one(config.task, split, i, config.seed, agent)

    if config.concurrency <= 1:
        episodes = [work(j) for j in jobs]
    else:
        with ThreadPoolExecutor(max_workers=config.concurrency) as pool:
            episodes = list(pool.map(work, jobs))
    return build_report(config, splits, episodes)


def build_report(config: EvalConfig, splits: Sequence[str], episodes: Sequence[EpisodeRecord]) -> EvalReport:
    n = config.episodes_per_split
    results = [aggregate(config.task, s, episodes[k * n:(k + 1) * n]) for k, s in enumerate(splits)]
    return EvalReport(config.task, config.seed, n, digest(config.to_dict()), results, list(episodes))


def write_report(report: EvalReport, out_dir: Union[str, Path]) -> None:
    """``report.json``, ``report.txt``, ``report.csv`` and ``transcript.jsonl``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(report.to_json(), encoding="utf-8")
    (out / "report.txt").write_text(report.to_text(), encoding="utf-8")
    (out / "report.csv").write_text(report.to_csv(), encoding="utf-8")
    with open(out / "transcript.jsonl", "w", encoding="utf-8", newline="\n") as f:
        for ep in report.episodes:
            f.write(ep.to_json() + "\n")
