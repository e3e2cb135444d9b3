"""Write the default demonstration sets: answer-only Sokoban pairs (6x6,
one box), General Points records, and their prompt-diverse counterparts.

    python scripts/make_datasets.py --out data/ --seed 0
"""
import argparse
import time
from pathlib import Path

from sokopoints.datagen import GPDemoConfig, SokobanDemoConfig, gen_gp_demos, gen_sokoban_demos, persist_dataset


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--out", type=Path, default=Path("data"))
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--sokoban-pairs", type=int, default=3981)
    ap.add_argument("--gp-records", type=int, default=10_000)
    args = ap.parse_args()

    jobs = {
        "sokoban_answer_only.jsonl": (gen_sokoban_demos, SokobanDemoConfig(num_pairs=args.sokoban_pairs)),
        "sokoban_diverse.jsonl": (gen_sokoban_demos, SokobanDemoConfig(num_pairs=args.sokoban_pairs, diverse=True)),
        "gp_answer_only.jsonl": (gen_gp_demos, GPDemoConfig(count=args.gp_records)),
        "gp_diverse.jsonl": (gen_gp_demos, GPDemoConfig(count=args.gp_records, diverse=True)),
    }
    for name, (gen, config) in jobs.items():
        t0 = time.perf_counter()
        manifest = persist_dataset(gen(config, args.seed), args.out / name, config, args.seed)
        print(f"{name}: {manifest.total} records {manifest.by_split} in {time.perf_counter() - t0:.1f}s")


if __name__ == "__main__":
    main()
