#!/usr/bin/env python3
"""Cross-validated grid search over memory-cell type and hidden size on a
preprocessed dataset (see run_pipeline.py, which writes prep/train.jsonl).

The augmented pool is large; --limit subsamples it (stratified, seeded) to
keep desk-scale runtimes. Results are ranked by mean fold accuracy, ties
toward fewer parameters.
"""
import argparse
import sys

from headgest import cli


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--data", default="runs/pipeline/prep/train.jsonl")
    parser.add_argument("--cells", default="gru,lstm")
    parser.add_argument("--hidden", default="8,16,32")
    parser.add_argument("--k", type=int, default=5)
    parser.add_argument("--epochs", type=int, default=10)
    parser.add_argument("--batch", type=int, default=80)
    parser.add_argument("--seed", type=int, default=42)
    parser.add_argument("--limit", type=int, default=4000)
    parser.add_argument("--out", default="runs/pipeline/grid.json")
    args = parser.parse_args()
    return cli.main([
        "grid", "--data", args.data, "--cells", args.cells, "--hidden", args.hidden,
        "--k", str(args.k), "--epochs", str(args.epochs), "--batch", str(args.batch),
        "--seed", str(args.seed), "--limit", str(args.limit), "--out", args.out,
    ])


if __name__ == "__main__":
    sys.exit(main())
