#!/usr/bin/env python3
# Copyright 2026 The magic-gat Authors
# SPDX-License-Identifier: Apache-2.0
"""Writes the small bundled dataset used by the smoke pipeline.

Each class draws post and comment words mostly from its own vocabulary with
some shared filler, so a fallback-embedded model can learn it but not
trivially from a single token.
"""

import argparse
import json
import random

SHARED = "news today people report said story update video photo share city world".split()
VOCAB = {
    "real": "council budget approved hospital opens researchers published election results "
            "weather forecast rainfall bridge repair officials confirmed school".split(),
    "fake": "shocking miracle cure secret aliens hidden truth banned doctors hate "
            "conspiracy exposed viral hoax unbelievable leaked".split(),
}
COMMENTS = {
    "real": "thanks for sharing|good to know|source looks solid|saw this on the local station".split("|"),
    "fake": "this is fake|debunked already|total hoax|cannot believe people share this".split("|"),
}


def sentence(rng, label, n):
    words = []
    for _ in range(n):
        pool = VOCAB[label] if rng.random() < 0.6 else SHARED
        words.append(rng.choice(pool))
    return " ".join(words)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", required=True)
    ap.add_argument("--records", type=int, default=120)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()

    rng = random.Random(args.seed)
    labels = list(VOCAB)
    with open(args.out, "w", encoding="utf-8") as f:
        for i in range(args.records):
            label = labels[i % len(labels)]
            comments = []
            for _ in range(rng.randint(0, 4)):
                other = label if rng.random() < 0.7 else rng.choice(labels)
                comments.append(rng.choice(COMMENTS[other]))
            image = f"img_{label}_{rng.randint(0, 5)}.jpg" if rng.random() < 0.7 else None
            rec = {"id": f"s{i:04d}", "label": label, "text": sentence(rng, label, rng.randint(5, 12)),
                   "comments": comments, "image": image}
            f.write(json.dumps(rec, ensure_ascii=False) + "\n")


if __name__ == "__main__":
    main()
