#!/usr/bin/env python3
"""Builds the desk lexicons in data/ from wordfreq's English list.

desk_lexicon.tsv  2000 words used to render the corpus
check_extra.tsv   further words; union with the desk list forms the checking lexicon

Casing is drawn per word (lower 60%, Capitalized 25%, UPPER 15%) with a fixed
seed so the files are reproducible.
"""
import random
import sys
from pathlib import Path

from wordfreq import top_n_list, word_frequency

DESK = 2000
EXTRA = 6000


def main(out_dir: Path) -> None:
    words = []
    seen = set()
    for w in top_n_list("en", 60000):
        if not (w.isascii() and w.isalpha() and 4 <= len(w) <= 10):
            continue
        if w in seen:
            continue
        seen.add(w)
        words.append(w)
        if len(words) == DESK + EXTRA:
            break
    rng = random.Random(20240607)
    order = list(range(len(words)))
    rng.shuffle(order)
    desk_idx = set(order[:DESK])

    def cased(w: str) -> str:
        r = rng.random()
        if r < 0.60:
            return w
        if r < 0.85:
            return w.capitalize()
        return w.upper()

    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "desk_lexicon.tsv", "w") as desk, open(out_dir / "check_extra.tsv", "w") as extra:
        for i, w in enumerate(words):
            freq = max(1, round(word_frequency(w, "en") * 1e9))
            line = f"{cased(w)}\t{freq}\n"
            (desk if i in desk_idx else extra).write(line)


if __name__ == "__main__":
    main(Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).resolve().parent.parent / "data")
