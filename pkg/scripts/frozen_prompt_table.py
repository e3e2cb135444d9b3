"""Success/validity table for the scripted agents on every split of both
tasks, laid out like the evaluation columns (ID | instruction | mixed |
difficulty | fake).

A frozen agent that answers only in training vocabulary keeps its
in-distribution success on the fake splits and drops to zero validity on
relabelled ones; an oracle that reads the prompt does the opposite.

    python scripts/frozen_prompt_table.py --episodes 100 --error-rate 0.25
"""
import argparse
import logging
from pathlib import Path

from sokopoints.agents import FrozenAgent, OracleAgent
from sokopoints.harness import EvalConfig, evaluate, write_report


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--episodes", type=int, default=100)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--error-rate", type=float, default=0.25, help="frozen agent's deterministic mistake rate")
    ap.add_argument("--concurrency", type=int, default=4)
    ap.add_argument("--out", type=Path, help="also write report files under this directory")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    agents = {"oracle": OracleAgent(), "frozen": FrozenAgent(args.error_rate)}
    for task in ("sokoban", "gp"):
        for name, agent in agents.items():
            report = evaluate(EvalConfig(task, None, args.episodes, args.seed, args.concurrency), agent)
            print(f"== {name} agent ==")
            print(report.to_text())
            if args.out:
                write_report(report, args.out / f"{task}-{name}")


if __name__ == "__main__":
    main()
