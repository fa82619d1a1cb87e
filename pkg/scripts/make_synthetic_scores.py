#!/usr/bin/env python3
"""Regenerate data/synthetic_scores.csv.

A balanced two-class score set on a detector-like 60..85 scale: negatives
around 67, positives around 77, both with sigma 4.  It exists so the sweep
and roc CLI commands have a realistic bundled input; the numbers are
synthetic and deterministic (fixed seed).
"""

from pathlib import Path

import numpy as np

OUT = Path(__file__).resolve().parents[1] / "data" / "synthetic_scores.csv"
N_PER_CLASS = 500
SEED = 20240901


def main() -> None:
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(SEED)))
    negatives = rng.normal(67.0, 4.0, N_PER_CLASS)
    positives = rng.normal(77.0, 4.0, N_PER_CLASS)
    rows = [(score, 0) for score in negatives] + [(score, 1) for score in positives]

    OUT.parent.mkdir(parents=True, exist_ok=True)
    with open(OUT, "w", encoding="utf-8") as handle:
        handle.write("score,label\n")
        for score, label in rows:
            handle.write(f"{score:.4f},{label}\n")
    print(f"wrote {len(rows)} rows to {OUT}")


if __name__ == "__main__":
    main()
