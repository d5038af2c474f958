#!/usr/bin/env python3
"""End-to-end desk-scale experiment: synthesize gestures, augment with
change-point-guided time warping, standardize, train a GRU classifier, and
report accuracy on the augmented and raw test sets.

Every stage goes through the CLI so the run is reproducible from the printed
configs alone. Artifacts land in --workdir.
"""
import argparse
import sys
import time
from pathlib import Path

from headgest import cli


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--workdir", default="runs/pipeline")
    parser.add_argument("--per-class", type=int, default=300)
    parser.add_argument("--seed", type=int, default=42)
    parser.add_argument("--cell", choices=["gru", "lstm"], default="gru")
    parser.add_argument("--hidden", type=int, default=32)
    parser.add_argument("--epochs", type=int, default=10)
    parser.add_argument("--batch", type=int, default=80)
    args = parser.parse_args()

    work = Path(args.workdir)
    work.mkdir(parents=True, exist_ok=True)
    raw = work / "raw.jsonl"
    train, test = work / "train.jsonl", work / "test.jsonl"
    train_aug, test_aug = work / "train_aug.jsonl", work / "test_aug.jsonl"
    prep = work / "prep"
    model = work / "model.bin"
    seed = str(args.seed)

    stages = [
        ("synth", ["synth", "--per-class", str(args.per_class), "--seed", seed,
                   "--out", str(raw)]),
        ("split", ["split", "--in", str(raw), "--train-out", str(train),
                   "--test-out", str(test), "--test-frac", "0.1", "--seed", seed]),
        ("augment train", ["augment", "--in", str(train), "--out", str(train_aug)]),
        ("augment test", ["augment", "--in", str(test), "--out", str(test_aug)]),
        ("preprocess", ["preprocess", "--train", str(train_aug), "--test", str(test_aug),
                        "--out-dir", str(prep)]),
        ("train", ["train", "--data", str(prep / "train.jsonl"),
                   "--standardizer", str(prep / "standardizer.json"),
                   "--cell", args.cell, "--hidden", str(args.hidden),
                   "--epochs", str(args.epochs), "--batch", str(args.batch),
                   "--seed", seed, "--out", str(model),
                   "--metrics", str(work / "metrics.jsonl")]),
        ("eval augmented test", ["eval", "--model", str(model),
                                 "--data", str(prep / "test.jsonl"),
                                 "--out", str(work / "eval_aug.json")]),
        ("eval raw test", ["eval", "--model", str(model), "--data", str(test),
                           "--raw-test", "--out", str(work / "eval_raw.json")]),
        ("replay raw test", ["replay", "--model", str(model), "--data", str(test),
                             "--out", str(work / "replay.jsonl")]),
    ]
    t0 = time.perf_counter()
    for name, argv in stages:
        print(f"=== {name} ===")
        t1 = time.perf_counter()
        code = cli.main(argv)
        if code != 0:
            print(f"stage {name!r} failed with exit {code}", file=sys.stderr)
            return code
        print(f"=== {name} done in {time.perf_counter() - t1:.1f}s ===\n")
    print(f"pipeline complete in {time.perf_counter() - t0:.1f}s; artifacts in {work}")
    print(f"serve it: headgest serve --model {model} --bind 127.0.0.1:8765")
    return 0


if __name__ == "__main__":
    sys.exit(main())
