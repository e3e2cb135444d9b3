"""Regenerate the bundled vocabulary used for action-word diversity.

Needs the optional ``wordfreq`` package (``pip install wordfreq``); the
runtime never imports it, it only reads the text file written here.
"""
import argparse
from pathlib import Path

from wordfreq import top_n_list

# Words that already carry a meaning in the Sokoban prompt.
RESERVED = {"up", "down", "left", "right", "wall", "floor", "target", "box", "you", "push", "pull"}

DEFAULT_OUT = Path(__file__).resolve().parents[1] / "src" / "sokopoints" / "data" / "wordlist.txt"


def build(size):
    words = []
    for w in top_n_list("en", 20000):
        if not (w.isascii() and w.isalpha() and w.islower()):
            continue
        if not 3 <= len(w) <= 10 or w in RESERVED:
            continue
        words.append(w)
        if len(words) == size:
            break
    return words


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--size", type=int, default=2000)
    ap.add_argument("--out", type=Path, default=DEFAULT_OUT)
    args = ap.parse_args()
    words = build(args.size)
    args.out.write_text("\n".join(words) + "\n", encoding="utf-8")
    print(f"wrote {len(words)} words to {args.out}")


if __name__ == "__main__":
    main()
