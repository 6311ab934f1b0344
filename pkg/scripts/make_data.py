"""Synthetic CSV data and model files for the ML workloads.

    python scripts/make_data.py regression --rows 512 --features 100 --out data/lin.csv
    python scripts/make_data.py regression --logistic --rows 512 --features 100 --out data/log.csv
    python scripts/make_data.py nn --rows 100 --out data/nn
"""
import argparse
from pathlib import Path

import numpy as np

from trimpc.ml import csv_write


def regression(rows, features, logistic, seed, out: Path):
    rng = np.random.default_rng(seed)
    x = rng.uniform(-1, 1, (rows, features))
    w = rng.uniform(-1, 1, features)
    y = x @ w / features
    if logistic:
        y = (y > 0).astype(float)
    out.parent.mkdir(parents=True, exist_ok=True)
    csv_write(out, np.column_stack([x, y]), [f"x{i}" for i in range(features)] + ["y"])
    csv_write(out.with_name(out.stem + "_w.csv"), w[:, None], ["w"])


def network(rows, seed, out: Path, shape=(784, 128, 128, 10)):
    """Gaussian weights scaled by 1/sqrt(fan-in) and inputs in [0, 1), like normalized pixels."""
    rng = np.random.default_rng(seed)
    model = out / "model"
    model.mkdir(parents=True, exist_ok=True)
    for i, (k, m) in enumerate(zip(shape[:-1], shape[1:])):
        csv_write(model / f"w{i}.csv", rng.normal(0, 1 / np.sqrt(k), (k, m)), [f"c{j}" for j in range(m)])
    csv_write(out / "x.csv", rng.uniform(0, 1, (rows, shape[0])), [f"p{j}" for j in range(shape[0])])


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("kind", choices=["regression", "nn"])
    ap.add_argument("--rows", type=int, default=256)
    ap.add_argument("--features", type=int, default=10)
    ap.add_argument("--logistic", action="store_true")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", type=Path, required=True)
    args = ap.parse_args()
    if args.kind == "regression":
        regression(args.rows, args.features, args.logistic, args.seed, args.out)
    else:
        network(args.rows, args.seed, args.out)


if __name__ == "__main__":
    main()
