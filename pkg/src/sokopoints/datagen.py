"""Demonstration datasets: solver-labelled answer-only records, random-word
and face-mapping diversity, rejection filtering of chain-of-thought
candidates, and JSON-lines persistence."""
from __future__ import annotations

import hashlib
import json
import logging
from collections import Counter, defaultdict
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Iterable, Iterator, Optional, Union

from .points import (
    DIVERSITY_REGIMES,
    MAPPINGS,
    SPLITS,
    GPInstance,
    GPSplit,
    format_gp_answer,
    generate_instance,
    score_gp_answer,
    solve_exhaustive,
)
from .prompts import render_gp_prompt, render_sokoban_prompt
from .responses import parse_response
from .seeding import derive_seed, digest, in_validation
from .sokoban import GenerationExhausted, PuzzleSpec, generate_puzzle, render, step
from .variants import SOKOBAN_VARIANTS, SokobanVariant, decode_action, sample_diverse_vocab

log = logging.getLogger(__name__)

RECORD_FIELDS = ("prompt", "response", "task", "variant", "seed", "split", "extra")


class DatasetSchemaError(ValueError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass
class DemonstrationRecord:
    prompt: str
    response: str
    task: str
    variant: str
    seed: int
    split: str = "train"
    extra: dict[str, Any] = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, ensure_ascii=False)


def answer_label(answer: str) -> str:
    return f"<think> </think> <answer> {answer} </answer>"


# --- Sokoban ---------------------------------------------------------------

@dataclass
class SokobanDemoConfig:
    variant: str = "SimpleSokoban"
    diverse: bool = False
    num_pairs: int = 3981
    validation_fraction: float = 0.05
    # Puzzles whose whole trajectory no longer fits the remaining pair count
    # are skipped; this bounds how many may be skipped in a row.
    max_skips: int = 100_000


def gen_sokoban_demos(config: SokobanDemoConfig, seed: int) -> Iterator[DemonstrationRecord]:
    """One record per (state, expert action) along BFS solutions.

    Only whole trajectories are emitted, so every puzzle's records replay to
    success; a trajectory longer than the remaining budget is skipped and
    the next puzzle tried, which makes the total exactly ``num_pairs``."""
    base = SOKOBAN_VARIANTS[config.variant]
    remaining = config.num_pairs
    index = 0
    puzzle_no = 0
    skips = 0
    while remaining > 0:
        puzzle_seed = derive_seed(seed, "sokoban-puzzle", puzzle_no)
        puzzle_no += 1
        state, plan = generate_puzzle(PuzzleSpec(base.dims, base.num_boxes, seed=puzzle_seed))
        if len(plan) > remaining:
            skips += 1
            if skips > config.max_skips:
                raise GenerationExhausted(f"could not fill the last {remaining} pairs")
            continue
        skips = 0
        for t, action in enumerate(plan):
            if config.diverse:
                variant = sample_diverse_vocab(derive_seed(seed, "vocab", index)).variant()
            else:
                variant = base
            token = variant.token_for(action)
            yield DemonstrationRecord(
                prompt=render_sokoban_prompt(state, variant),
                response=answer_label(token),
                task="sokoban",
                variant="diverse" if config.diverse else base.name,
                seed=puzzle_seed,
                split="validation" if in_validation(seed, index, config.validation_fraction) else "train",
                extra={
                    "expert_action": action.value,
                    "observation": render(state),
                    "solution_length": len(plan),
                    "step_index": t,
                    "tokens": list(variant.tokens),
                },
            )
            state = step(state, action).next_state
            index += 1
        remaining -= len(plan)


# --- General Points --------------------------------------------------------

@dataclass
class GPDemoConfig:
    split: str = "training"
    count: int = 10_000
    diverse: bool = False
    regimes: tuple[str, ...] = DIVERSITY_REGIMES  # face mappings, used when diverse
    validation_fraction: float = 0.05


def _regime_split(name: str) -> GPSplit:
    return SPLITS["training"] if name == "all_10" else GPSplit(name, MAPPINGS[name])


def gen_gp_demos(config: GPDemoConfig, seed: int) -> Iterator[DemonstrationRecord]:
    for index in range(config.count):
        record_seed = derive_seed(seed, "gp-instance", index)
        if config.diverse:
            regime = config.regimes[derive_seed(seed, "gp-regime", index) % len(config.regimes)]
            split = _regime_split(regime)
        else:
            split = SPLITS[config.split]
        inst = generate_instance(split, record_seed)
        formula = f"{solve_exhaustive(inst.values, inst.target)}={inst.target}"
        yield DemonstrationRecord(
            prompt=render_gp_prompt(inst),
            response=answer_label(format_gp_answer(inst, formula)),
            task="gp",
            variant=split.name,
            seed=record_seed,
            split="validation" if in_validation(seed, index, config.validation_fraction) else "train",
            extra={"instance": inst.to_dict()},
        )


# --- chain-of-thought rejection sampling -----------------------------------

@dataclass
class CotCandidate:
    """A sampled response plus what is needed to verify it.

    ``context`` for Sokoban: ``expert_action`` and ``tokens`` (Up, Down,
    Left, Right as prompted); for General Points: ``instance`` as produced
    by :meth:`GPInstance.to_dict`."""
    prompt: str
    response: str
    task: str
    context: dict[str, Any]
    variant: str = ""
    seed: int = 0


@dataclass
class FilterResult:
    accepted: list[DemonstrationRecord]
    rejected: int = 0
    malformed: int = 0
    over_cap: int = 0


def verify_candidate(c: CotCandidate) -> bool:
    """Whether the final answer is right. Raises on an unverifiable row."""
    if not isinstance(c.prompt, str) or not isinstance(c.response, str) or not c.prompt:
        raise ValueError("prompt and response must be strings")
    if c.task == "gp":
        inst = GPInstance.from_dict(c.context["instance"])
        return score_gp_answer(c.response, inst).success
    if c.task == "sokoban":
        expert = c.context["expert_action"]
        variant = SokobanVariant("cot", tuple(c.context["tokens"]))
        parsed = parse_response(c.response)
        action = decode_action(parsed.answer_text, variant) if parsed.format_ok else None
        return action is not None and action.value == expert
    raise ValueError(f"unknown task {c.task!r}")


def _as_candidate(row: Union[CotCandidate, dict]) -> CotCandidate:
    if isinstance(row, CotCandidate):
        return row
    return CotCandidate(
        prompt=row["prompt"],
        response=row["response"],
        task=row["task"],
        context=dict(row["context"]),
        variant=row.get("variant", ""),
        seed=int(row.get("seed", 0)),
    )


def filter_cot(
    candidates: Iterable[Union[CotCandidate, dict]],
    k_per_prompt: int = 16,
    seed: int = 0,
    validation_fraction: float = 0.05,
) -> FilterResult:
    """Keep candidates whose final answer verifies, at most ``k_per_prompt``
    per prompt, in input order. Think text is kept verbatim."""
    result = FilterResult([])
    per_prompt: Counter = Counter()
    for i, row in enumerate(candidates):
        try:
            cand = _as_candidate(row)
            ok = verify_candidate(cand)
        except (KeyError, TypeError, ValueError, AttributeError) as e:
            log.debug("malformed candidate %d: %s", i, e)
            result.malformed += 1
            continue
        if not ok:
            result.rejected += 1
            continue
        if per_prompt[cand.prompt] >= k_per_prompt:
            result.over_cap += 1
            continue
        per_prompt[cand.prompt] += 1
        index = len(result.accepted)
        result.accepted.append(DemonstrationRecord(
            prompt=cand.prompt,
            response=cand.response,
            task=cand.task,
            variant=cand.variant,
            seed=cand.seed,
            split="validation" if in_validation(seed, index, validation_fraction) else "train",
            extra={**cand.context, "source": "cot"},
        ))
    return result


# --- persistence -----------------------------------------------------------

@dataclass
class DatasetManifest:
    total: int
    by_split: dict[str, int]
    by_variant: dict[str, int]
    config_digest: str
    seed: Optional[int]
    sha256: str

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, indent=2) + "\n"


def manifest_path(path: Union[str, Path]) -> Path:
    path = Path(path)
    return path.with_name(path.stem + ".manifest.json")


def persist_dataset(
    records: Iterable[DemonstrationRecord],
    path: Union[str, Path],
    config: Any = None,
    seed: Optional[int] = None,
) -> DatasetManifest:
    """Write one JSON object per line (UTF-8, sorted keys) and a manifest
    next to it."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    by_split: Counter = Counter()
    by_variant: Counter = Counter()
    sha = hashlib.sha256()
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for rec in records:
            line = rec.to_json() + "\n"
            f.write(line)
            sha.update(line.encode("utf-8"))
            by_split[rec.split] += 1
            by_variant[rec.variant] += 1
    cfg = asdict(config) if hasattr(config, "__dataclass_fields__") else config
    manifest = DatasetManifest(
        total=sum(by_split.values()),
        by_split=dict(sorted(by_split.items())),
        by_variant=dict(sorted(by_variant.items())),
        config_digest=digest(cfg),
        seed=seed,
        sha256=sha.hexdigest(),
    )
    manifest_path(path).write_text(manifest.to_json(), encoding="utf-8")
    return manifest


def _check_record(obj: Any, line: int) -> DemonstrationRecord:
    if not isinstance(obj, dict):
        raise DatasetSchemaError(line, "record is not an object")
    keys = set(obj)
    if keys != set(RECORD_FIELDS):
        missing = sorted(set(RECORD_FIELDS) - keys)
        extra = sorted(keys - set(RECORD_FIELDS))
        raise DatasetSchemaError(line, f"bad fields (missing {missing}, unexpected {extra})")
    for name in ("prompt", "response", "task", "variant", "split"):
        if not isinstance(obj[name], str):
            raise DatasetSchemaError(line, f"{name} must be a string")
    if not isinstance(obj["seed"], int) or isinstance(obj["seed"], bool):
        raise DatasetSchemaError(line, "seed must be an integer")
    if not isinstance(obj["extra"], dict):
        raise DatasetSchemaError(line, "extra must be an object")
    return DemonstrationRecord(**obj)


def load_dataset(path: Union[str, Path]) -> list[DemonstrationRecord]:
    records = []
    with open(path, encoding="utf-8") as f:
        for n, line in enumerate(f, start=1):
            try:
                obj = json.loads(line)
            except ValueError as e:
                raise DatasetSchemaError(n, f"invalid JSON: {e}") from None
            records.append(_check_record(obj, n))
    return records


def group_by_puzzle(records: Iterable[DemonstrationRecord]) -> dict[int, list[DemonstrationRecord]]:
    """Sokoban records keyed by puzzle seed, in trajectory order."""
    groups = defaultdict(list)
    for r in records:
        groups[r.seed].append(r)
    for rs in groups.values():
        rs.sort(key=lambda r: r.extra["step_index"])
    return dict(groups)
