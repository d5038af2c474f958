"""Command-line entry point wiring the pipeline stages into reproducible runs.

Every subcommand prints its resolved configuration (defaults included) as a
single JSON line before doing any work, so a transcript fully determines the
run. Stages communicate through the JSON Lines dataset format; a typical
flow is synth -> split -> augment -> preprocess -> grid/train -> eval ->
replay or serve.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import augment as aug
from . import changepoint as cp
from . import nn, pipeline, preprocess, seqdata, stream

STANDARDIZER_FILE = "standardizer.json"


def _print_config(command: str, args: argparse.Namespace) -> None:
    resolved = {k: v for k, v in sorted(vars(args).items()) if k != "func"}
    print(f"{command} config: {json.dumps(resolved, default=str)}")


def _load_2ch(path: str) -> seqdata.Dataset:
    """Load a dataset, dropping the third channel if present."""
    data = seqdata.load_dataset(path)
    if data.sequences and data.sequences[0].channels == 3:
        data = preprocess.drop_third_channel_dataset(data)
    return data


def _write_jsonl(records, path: str | None) -> None:
    lines = (json.dumps(r) for r in records)
    if path is None:
        for line in lines:
            print(line)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            for line in lines:
                fh.write(line + "\n")


def cmd_synth(args) -> int:
    cfg = seqdata.SynthConfig(
        per_class_count=args.per_class,
        length_range=(args.length_min, args.length_max),
        noise_std=args.noise_std,
        seed=args.seed,
    )
    data = seqdata.synth_dataset(cfg)
    seqdata.save_dataset(data, args.out)
    print(f"wrote {len(data)} sequences to {args.out}")
    return 0


def cmd_split(args) -> int:
    data = seqdata.load_dataset(getattr(args, "in"))
    kept = seqdata.filter_short(data, args.min_len)
    train, test = seqdata.split(kept, args.test_frac, args.seed)
    seqdata.save_dataset(train, args.train_out)
    seqdata.save_dataset(test, args.test_out)
    print(
        f"kept {len(kept)}/{len(data)} sequences; "
        f"train {len(train)} -> {args.train_out}, test {len(test)} -> {args.test_out}"
    )
    return 0


def cmd_augment(args) -> int:
    data = seqdata.load_dataset(getattr(args, "in"))
    pelt_cfg = None
    if args.pelt_penalty != "auto":
        pelt_cfg = cp.PeltConfig(penalty=float(args.pelt_penalty))
    out = aug.augment_dataset(data, aug.AugmentConfig(), pelt_cfg)
    seqdata.save_dataset(out, args.out)
    counts = {label.value: n for label, n in out.counts().items()}
    print(f"augmented {len(data)} -> {len(out)} sequences {counts} -> {args.out}")
    return 0


def cmd_preprocess(args) -> int:
    train = _load_2ch(args.train)
    test = _load_2ch(args.test)
    standardizer = preprocess.fit_standardizer(train)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    seqdata.save_dataset(
        preprocess.apply_standardizer_dataset(train, standardizer), out_dir / "train.jsonl"
    )
    seqdata.save_dataset(
        preprocess.apply_standardizer_dataset(test, standardizer), out_dir / "test.jsonl"
    )
    with open(out_dir / STANDARDIZER_FILE, "w", encoding="utf-8") as fh:
        json.dump(standardizer.to_dict(), fh)
    print(
        f"standardized {len(train)} train / {len(test)} test sequences into {out_dir} "
        f"(mean={standardizer.mean.tolist()}, std={standardizer.std.tolist()})"
    )
    return 0


def _resolve_standardizer(args, data: seqdata.Dataset):
    """Explicit standardizer file means the data is already standardized;
    otherwise fit on the given data and standardize it here."""
    if args.standardizer is not None:
        with open(args.standardizer, "r", encoding="utf-8") as fh:
            return preprocess.Standardizer.from_dict(json.load(fh)), data
    standardizer = preprocess.fit_standardizer(data)
    return standardizer, preprocess.apply_standardizer_dataset(data, standardizer)


def cmd_train(args) -> int:
    data = _load_2ch(args.data)
    standardizer, data = _resolve_standardizer(args, data)
    x, y = preprocess.dataset_to_matrix(data)
    cfg = nn.ModelConfig(cell=nn.CellType(args.cell), hidden=args.hidden, seed=args.seed)
    tcfg = pipeline.TrainConfig(
        epochs=args.epochs,
        batch_size=args.batch,
        validation_frac=args.val_frac,
        seed=args.seed,
    )
    model, history = pipeline.train_with_holdout(cfg, tcfg, x, y)
    for record in history:
        print(json.dumps(record))
    if args.metrics is not None:
        _write_jsonl(history, args.metrics)
    nn.save_model(args.out, cfg, model.weights, standardizer)
    print(f"saved {args.cell}-{args.hidden} model ({nn.param_count(cfg)} params) to {args.out}")
    return 0


def cmd_eval(args) -> int:
    model = nn.load_model(args.model)
    data = _load_2ch(args.data)
    if args.raw_test:
        data = preprocess.apply_standardizer_dataset(data, model.standardizer)
    x, y = preprocess.dataset_to_matrix(data)
    report = pipeline.evaluate(model, x, y)
    out = report.to_dict()
    out["config"] = {"cell": model.config.cell.value, "hidden": model.config.hidden}
    out["n"] = int(len(y))
    print(json.dumps(out))
    if args.out is not None:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(out, fh)
    return 0


def _stratified_limit(x, y, limit: int, seed: int):
    if limit <= 0 or limit >= len(y):
        return x, y
    frac = limit / len(y)
    rng = np.random.default_rng(seed)
    picked: list[int] = []
    for cls in np.unique(y):
        idx = np.flatnonzero(y == cls)
        k = max(1, int(round(len(idx) * frac)))
        picked.extend(idx[rng.permutation(len(idx))[:k]].tolist())
    picked_arr = np.sort(np.asarray(picked, dtype=np.int64))
    return x[picked_arr], y[picked_arr]


def cmd_grid(args) -> int:
    data = _load_2ch(args.data)
    x, y = preprocess.dataset_to_matrix(data)
    if args.limit is not None:
        x, y = _stratified_limit(x, y, args.limit, args.seed)
        print(f"limited to {len(y)} sequences (stratified, seed {args.seed})")
    cells = [nn.CellType(c.strip()) for c in args.cells.split(",") if c.strip()]
    hiddens = [int(h) for h in args.hidden.split(",") if h.strip()]
    tcfg = pipeline.TrainConfig(epochs=args.epochs, batch_size=args.batch, seed=args.seed)
    base = nn.ModelConfig(cell=cells[0], hidden=hiddens[0], seed=args.seed)
    results = pipeline.grid_search(
        cells, hiddens, x, y, tcfg, k=args.k, base_cfg=base,
        progress=lambda row: print(f"done: {json.dumps(row.to_dict())}"),
    )
    print("ranked:")
    for rank, row in enumerate(results, start=1):
        print(json.dumps({"rank": rank, **row.to_dict()}))
    if args.out is not None:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump([r.to_dict() for r in results], fh)
    best = results[0]
    print(f"best: {best.cell.value}-{best.hidden} mean_accuracy={best.mean_accuracy:.4f}")
    return 0


def cmd_replay(args) -> int:
    model = nn.load_model(args.model)
    data = seqdata.load_dataset(args.data)
    cfg = stream.StreamConfig(stride=args.stride, warm_start=args.warm_start)
    _write_jsonl(stream.replay(model, data, cfg), args.out)
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .serve import create_app

    model = nn.load_model(args.model)
    host, _, port = args.bind.rpartition(":")
    app = create_app(
        model,
        default_warm_start=args.warm_start,
        idle_timeout_s=args.idle_timeout_s,
        static_dir=args.static,
    )
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port), log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="headgest", description="head-gesture recognition pipeline"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic gesture dataset")
    p.add_argument("--per-class", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--length-min", type=int, default=50)
    p.add_argument("--length-max", type=int, default=240)
    p.add_argument("--noise-std", type=float, default=0.02)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("split", help="filter short sequences and split train/test")
    p.add_argument("--in", required=True)
    p.add_argument("--train-out", required=True)
    p.add_argument("--test-out", required=True)
    p.add_argument("--test-frac", type=float, default=0.10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--min-len", type=int, default=50)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("augment", help="apply full and head/tail time warping")
    p.add_argument("--in", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--pelt-penalty", default="auto", help="'auto' or a number")
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("preprocess", help="fit standardizer on train, standardize both")
    p.add_argument("--train", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("train", help="train a recurrent classifier")
    p.add_argument("--data", required=True)
    p.add_argument("--cell", choices=["gru", "lstm"], default="gru")
    p.add_argument("--hidden", type=int, default=32)
    p.add_argument("--epochs", type=int, default=10)
    p.add_argument("--batch", type=int, default=80)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--val-frac", type=float, default=0.10)
    p.add_argument("--out", required=True)
    p.add_argument("--standardizer", default=None,
                   help="standardizer JSON; when given, --data is assumed standardized")
    p.add_argument("--metrics", default=None, help="write per-epoch JSONL here too")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="accuracy and confusion matrix on a dataset")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--raw-test", action="store_true",
                   help="data is raw; standardize with the model's parameters")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("grid", help="cross-validated grid search over cell/hidden")
    p.add_argument("--data", required=True)
    p.add_argument("--cells", default="gru,lstm")
    p.add_argument("--hidden", default="8,16,32")
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--epochs", type=int, default=10)
    p.add_argument("--batch", type=int, default=80)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--limit", type=int, default=None,
                   help="stratified subsample size to bound runtime")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_grid)

    p = sub.add_parser("replay", help="stream a dataset file through the predictor")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--stride", type=int, default=15)
    p.add_argument("--warm-start", action="store_true")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("serve", help="websocket prediction service")
    p.add_argument("--model", required=True)
    p.add_argument("--bind", default="127.0.0.1:8765")
    p.add_argument("--warm-start", action="store_true")
    p.add_argument("--idle-timeout-s", type=float, default=120.0)
    p.add_argument("--static", default=None, help="also serve this directory at /")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    _print_config(args.command, args)
    try:
        return args.func(args)
    except (OSError, ValueError, seqdata.DatasetError, nn.ModelFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
