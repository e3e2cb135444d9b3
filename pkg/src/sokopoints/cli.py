"""Command-line entry point.

Every subcommand takes ``--seed``, ``--config FILE`` and ``--out PATH``. A
config file is a flat JSON or YAML mapping whose keys are the subcommand's
long option names (dashes or underscores); flags given on the command line
win over the file. Exit status: 0 ok, 1 partial failure, 2 usage error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

import yaml

from .agents import make_agent
from .datagen import (
    GPDemoConfig,
    SokobanDemoConfig,
    filter_cot,
    gen_gp_demos,
    gen_sokoban_demos,
    persist_dataset,
)
from .formula import check_formula
from .harness import GP_SPLITS, SOKOBAN_SPLITS, EvalConfig, evaluate, write_report
from .points import MAPPINGS, SPLITS, GPInstance, parse_card, score_gp_answer, solve_exhaustive
from .prompts import parse_gp_prompt, parse_sokoban_prompt
from .responses import parse_response
from .rl_math import action_match_reward
from .seeding import derive_seed
from .sokoban import MAX_STEPS, PuzzleSpec, generate_puzzle, parse_render, render, solve_bfs
from .variants import SOKOBAN_VARIANTS, SokobanVariant, builtin_variants, check_validity, decode_action

log = logging.getLogger("sokopoints")

EXIT_OK, EXIT_PARTIAL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _csv(text) -> list[str]:
    if isinstance(text, (list, tuple)):
        return [str(t) for t in text]
    return [t.strip() for t in str(text).split(",") if t.strip()]


def _write_lines(lines, out: Optional[str]) -> None:
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        with open(out, "w", encoding="utf-8", newline="\n") as f:
            for line in lines:
                f.write(line + "\n")
    else:
        for line in lines:
            sys.stdout.write(line + "\n")


# --- subcommands -----------------------------------------------------------

def cmd_gen_puzzles(args) -> int:
    if args.variant:
        v = SOKOBAN_VARIANTS[args.variant]
        dims, boxes = v.dims, v.num_boxes
    else:
        dims, boxes = (args.size, args.size), args.boxes
    rows = []
    for i in range(args.count):
        spec = PuzzleSpec(dims, boxes, MAX_STEPS, derive_seed(args.seed, "puzzle", i), wall_prob=args.wall_prob)
        state, plan = generate_puzzle(spec)
        rows.append(json.dumps({
            "index": i,
            "seed": spec.seed,
            "dims": list(dims),
            "num_boxes": boxes,
            "observation": render(state),
            "solution": [a.value for a in plan],
        }, sort_keys=True, ensure_ascii=False))
    _write_lines(rows, args.out)
    return EXIT_OK


def cmd_gen_data(args) -> int:
    out = args.out or f"{args.task}_demos.jsonl"
    if args.cot_candidates:
        with open(args.cot_candidates, encoding="utf-8") as f:
            rows = [json.loads(line) for line in f if line.strip()]
        result = filter_cot(rows, args.k_per_prompt, args.seed, args.validation_fraction)
        manifest = persist_dataset(result.accepted, out, {"cot_candidates": args.cot_candidates, "k": args.k_per_prompt}, args.seed)
        print(f"accepted {manifest.total}, rejected {result.rejected}, malformed {result.malformed}, over cap {result.over_cap} -> {out}")
        return EXIT_PARTIAL if result.malformed else EXIT_OK
    if args.task == "sokoban":
        config = SokobanDemoConfig(
            variant=args.variant or "SimpleSokoban",
            diverse=args.diverse,
            num_pairs=args.count if args.count is not None else 3981,
            validation_fraction=args.validation_fraction,
        )
        records = gen_sokoban_demos(config, args.seed)
    else:
        config = GPDemoConfig(
            split=args.variant or "training",
            count=args.count if args.count is not None else 10_000,
            diverse=args.diverse,
            validation_fraction=args.validation_fraction,
        )
        records = gen_gp_demos(config, args.seed)
    manifest = persist_dataset(records, out, config, args.seed)
    print(f"wrote {manifest.total} records -> {out}")
    return EXIT_OK


def cmd_solve(args) -> int:
    if args.task == "gp":
        if not args.cards:
            raise UsageError("solve --task gp needs --cards")
        cards = tuple(parse_card(c) for c in _csv(args.cards))
        inst = GPInstance(cards, MAPPINGS[args.mapping], args.target)
        formula = solve_exhaustive(inst.values, inst.target)
        if formula is None:
            print(f"no solution for {inst.labels} to {inst.target}", file=sys.stderr)
            return EXIT_PARTIAL
        text = f"{formula}={inst.target}"
        assert check_formula(text, inst.values, inst.target).value == "correct"
        _write_lines([text], args.out)
        return EXIT_OK
    variant = SOKOBAN_VARIANTS[args.variant or "SimpleSokoban"]
    if args.observation:
        state = parse_render(Path(args.observation).read_text(encoding="utf-8"))
    else:
        state, _ = generate_puzzle(PuzzleSpec(variant.dims, variant.num_boxes, MAX_STEPS, args.seed))
    plan = solve_bfs(state)
    if plan is None:
        print("no solution within the step budget", file=sys.stderr)
        return EXIT_PARTIAL
    _write_lines([render(state), " ".join(variant.token_for(a) for a in plan)], args.out)
    return EXIT_OK


def _score_row(task: str, row: dict) -> dict:
    response = row["response"]
    if task == "gp":
        inst = GPInstance.from_dict(row["instance"]) if "instance" in row else parse_gp_prompt(row["prompt"])
        score = score_gp_answer(response, inst)
        return {"points": score.points, "verdict": score.verdict.value, "success": score.success,
                "valid": check_validity(response, inst)}
    if "prompt" in row:
        state, tokens = parse_sokoban_prompt(row["prompt"])
    else:
        state, tokens = parse_render(row["observation"]), tuple(row.get("tokens", ("Up", "Down", "Left", "Right")))
    variant = SokobanVariant("scored", tokens)
    parsed = parse_response(response)
    action = decode_action(parsed.answer_text, variant) if parsed.format_ok else None
    plan = solve_bfs(state)
    if not plan:
        raise ValueError("observation has no solution to compare against")
    return {"action": action.value if action else None, "expert_action": plan[0].value,
            "reward": action_match_reward(action, plan[0], parsed.format_ok),
            "valid": check_validity(parsed, variant)}


def cmd_score(args) -> int:
    if not args.responses:
        raise UsageError("score needs --responses")
    out_rows, failures = [], 0
    with open(args.responses, encoding="utf-8") as f:
        for n, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                scored = _score_row(args.task, json.loads(line))
            except (KeyError, TypeError, ValueError) as e:
                print(f"line {n}: cannot score: {e}", file=sys.stderr)
                failures += 1
                scored = {"error": str(e)}
            out_rows.append(json.dumps({"line": n, **scored}, sort_keys=True))
    _write_lines(out_rows, args.out)
    return EXIT_PARTIAL if failures else EXIT_OK


def cmd_eval(args) -> int:
    config = EvalConfig(
        task=args.task,
        splits=_csv(args.splits) if args.splits else None,
        episodes_per_split=args.episodes,
        seed=args.seed,
        concurrency=args.concurrency,
    )
    known = SOKOBAN_SPLITS + tuple(SOKOBAN_VARIANTS) if args.task == "sokoban" else GP_SPLITS + tuple(SPLITS)
    bad = [s for s in config.resolved_splits() if s not in known]
    if bad:
        raise UsageError(f"unknown splits for {args.task}: {bad}")
    if args.agent == "replay" and not args.transcript:
        raise UsageError("--agent replay needs --transcript")
    if args.agent == "remote" and not args.endpoint:
        raise UsageError("--agent remote needs --endpoint")
    agent = make_agent(
        args.agent,
        error_rate=args.error_rate,
        transcript=args.transcript,
        response=args.response,
        endpoint=args.endpoint,
        model=args.model,
        temperature=args.temperature,
        max_tokens=args.max_tokens,
    )
    if args.service:
        from .service import evaluate_remote
        report = evaluate_remote(args.service, config, agent)
    else:
        report = evaluate(config, agent)
    if args.out:
        write_report(report, args.out)
    sys.stdout.write(report.to_text())
    if report.partial:
        print(f"{report.errors} episode(s) failed", file=sys.stderr)
        return EXIT_PARTIAL
    return EXIT_OK


def cmd_serve(args) -> int:
    from .service import ServiceConfig, make_server
    server = make_server(args.host, args.port, ServiceConfig(idle_timeout=args.idle_timeout, sokoban_reward=args.reward_mode))
    host, port = server.server_address[:2]
    print(f"serving on http://{host}:{port}", file=sys.stderr, flush=True)
    if args.out:
        # The bound address, useful with --port 0.
        Path(args.out).write_text(json.dumps({"host": host, "port": port}) + "\n", encoding="utf-8")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return EXIT_OK


def cmd_variants(args) -> int:
    reg = builtin_variants()
    listing = {
        "sokoban": {n: {"tokens": list(v.tokens), "dims": list(v.dims), "num_boxes": v.num_boxes,
                        "group": v.group, "fake": v.fake} for n, v in reg.sokoban.items()},
        "gp_splits": {n: {"mapping": s.mapping.name, "prompt_mapping": s.prompt_mapping.name if s.prompt_mapping else None,
                          "num_cards": s.num_cards, "fake": s.fake} for n, s in reg.gp_splits.items()},
        "gp_mappings": {n: [m.j_value, m.q_value, m.k_value] for n, m in reg.gp_mappings.items()},
    }
    if args.out:
        Path(args.out).write_text(json.dumps(listing, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    lines = ["Sokoban variants:"]
    lines += [f"  {n:<28} {' '.join(v.tokens):<24} {v.dims[0]}x{v.dims[1]}/{v.num_boxes} {v.group}" for n, v in reg.sokoban.items()]
    lines.append("General Points splits:")
    lines += [f"  {n:<28} {s.mapping.name:<10} cards={s.num_cards}" + (f" declared={s.prompt_mapping.name}" if s.prompt_mapping else "")
              for n, s in reg.gp_splits.items()]
    print("\n".join(lines))
    return EXIT_OK


# --- parser ----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sokopoints", description=__doc__.split("\n\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help):
        p = sub.add_parser(name, help=help)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--config", help="JSON or YAML file of option defaults")
        p.add_argument("--out", help="output path")
        p.set_defaults(func=func)
        return p

    p = add("gen-puzzles", cmd_gen_puzzles, "generate solvable Sokoban puzzles with BFS solutions")
    p.add_argument("--variant", choices=sorted(SOKOBAN_VARIANTS))
    p.add_argument("--size", type=int, default=6)
    p.add_argument("--boxes", type=int, default=1)
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--wall-prob", type=float, default=0.2)

    p = add("gen-data", cmd_gen_data, "generate demonstration datasets")
    p.add_argument("--task", choices=("sokoban", "gp"), default="sokoban")
    p.add_argument("--variant", help="Sokoban variant or General Points split")
    p.add_argument("--count", type=int, help="pairs (Sokoban) or records (General Points)")
    p.add_argument("--diverse", action="store_true", help="random-word vocabularies or mixed face mappings")
    p.add_argument("--validation-fraction", type=float, default=0.05)
    p.add_argument("--cot-candidates", help="JSONL of sampled responses to filter instead of generating")
    p.add_argument("--k-per-prompt", type=int, default=16)

    p = add("solve", cmd_solve, "solve one hand or puzzle")
    p.add_argument("--task", choices=("sokoban", "gp"), default="gp")
    p.add_argument("--cards", help="comma separated, e.g. 3,3,8,8 or A,J,Q,K")
    p.add_argument("--target", type=int, default=24)
    p.add_argument("--mapping", choices=sorted(MAPPINGS), default="all_10")
    p.add_argument("--variant", choices=sorted(SOKOBAN_VARIANTS))
    p.add_argument("--observation", help="file holding a rendered board")

    p = add("score", cmd_score, "score a JSONL file of responses")
    p.add_argument("--task", choices=("sokoban", "gp"), default="gp")
    p.add_argument("--responses", help="JSONL rows with response and prompt/instance/observation")

    p = add("eval", cmd_eval, "evaluate an agent on every split")
    p.add_argument("--task", choices=("sokoban", "gp"), default="sokoban")
    p.add_argument("--splits", help="comma separated; default all table columns")
    p.add_argument("--episodes", type=int, default=100)
    p.add_argument("--agent", choices=("oracle", "frozen", "replay", "scripted", "remote"), default="oracle")
    p.add_argument("--error-rate", type=float, default=0.0, help="frozen agent")
    p.add_argument("--transcript", help="replay agent: transcript.jsonl")
    p.add_argument("--response", default="", help="scripted agent: fixed completion")
    p.add_argument("--endpoint", help="remote agent: chat-completions URL")
    p.add_argument("--model")
    p.add_argument("--temperature", type=float)
    p.add_argument("--max-tokens", type=int)
    p.add_argument("--concurrency", type=int, default=1)
    p.add_argument("--service", help="run episodes through a running `serve` at this base URL")

    p = add("serve", cmd_serve, "run the HTTP environment service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--idle-timeout", type=float, default=600.0)
    p.add_argument("--reward-mode", choices=("env", "action_match"), default="env")

    add("variants", cmd_variants, "list the variant registry")
    return parser


def _subparser(parser: argparse.ArgumentParser, command: str) -> argparse.ArgumentParser:
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            return action.choices[command]
    raise KeyError(command)


def load_config(path: str) -> dict:
    text = Path(path).read_text(encoding="utf-8")
    data = yaml.safe_load(text) if text.strip() else {}  # YAML is a superset of JSON
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise UsageError(f"{path}: config must be a mapping")
    return data


def apply_config(sub: argparse.ArgumentParser, config: dict) -> None:
    dests = {a.dest for a in sub._actions if a.dest not in ("help", "config")}
    defaults = {}
    for key, value in config.items():
        dest = str(key).replace("-", "_")
        if dest not in dests:
            raise UsageError(f"unknown config key {key!r}")
        defaults[dest] = value
    sub.set_defaults(**defaults)


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    sub = _subparser(parser, args.command)
    try:
        if args.config:
            apply_config(sub, load_config(args.config))
            args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as e:
        sub.print_usage(sys.stderr)
        print(f"{sub.prog}: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, yaml.YAMLError) as e:
        print(f"{sub.prog}: error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
