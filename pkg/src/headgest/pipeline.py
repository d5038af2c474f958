"""Training loop, evaluation, k-fold cross-validation, and grid search."""
from __future__ import annotations

from contextlib import nullcontext
from dataclasses import dataclass, field

import numpy as np

try:  # the recurrence's per-step GEMMs are too small to benefit from threads
    from threadpoolctl import threadpool_limits as _blas_limit
except ImportError:  # pragma: no cover
    def _blas_limit(limits=None):
        return nullcontext()

from .nn import (
    CellType,
    Model,
    ModelConfig,
    OptimizerState,
    Weights,
    forward,
    init_weights,
    loss_and_grads,
    loss_sparse_ce,
    param_count,
    rmsprop_update,
)

EVAL_BATCH = 512


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 10
    batch_size: int = 80
    validation_frac: float = 0.10
    seed: int = 0
    shuffle: bool = True
    lr: float = 0.001

    def __post_init__(self) -> None:
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if not 0.0 <= self.validation_frac < 1.0:
            raise ValueError("validation_frac must be in [0, 1)")


@dataclass
class EvalReport:
    """Accuracy plus a class confusion matrix (rows actual, columns predicted)."""

    accuracy: float
    confusion: np.ndarray
    history: list[dict] | None = None

    def to_dict(self) -> dict:
        out = {"accuracy": self.accuracy, "confusion": self.confusion.tolist()}
        if self.history is not None:
            out["history"] = self.history
        return out


def _batch_probs(cfg: ModelConfig, w: Weights, x: np.ndarray) -> np.ndarray:
    parts = [
        forward(cfg, w, x[i : i + EVAL_BATCH]) for i in range(0, len(x), EVAL_BATCH)
    ]
    return np.concatenate(parts)


def _metrics(cfg, w, x, y) -> tuple[float, float]:
    probs = _batch_probs(cfg, w, x)
    loss = loss_sparse_ce(probs, y)
    acc = float((probs.argmax(axis=1) == y).mean())
    return loss, acc


def train(
    cfg: ModelConfig,
    tcfg: TrainConfig,
    x_train: np.ndarray,
    y_train: np.ndarray,
    x_val: np.ndarray | None = None,
    y_val: np.ndarray | None = None,
) -> tuple[Model, list[dict]]:
    """Minibatch RMSProp training; returns the model and per-epoch history.

    Reported train loss/accuracy are the example-weighted running means of
    the minibatch values seen during the epoch (pre-update, as encountered);
    validation metrics are computed on the full validation set after each
    epoch. Fully deterministic given the config seeds.
    """
    x_train = np.asarray(x_train, dtype=np.float64)
    y_train = np.asarray(y_train, dtype=np.int64)
    n = len(x_train)
    if n == 0:
        raise ValueError("empty training set")
    weights = init_weights(cfg)
    opt = OptimizerState.for_weights(weights, lr=tcfg.lr)
    rng = np.random.default_rng(tcfg.seed)
    history: list[dict] = []
    with _blas_limit(limits=1):
        for epoch in range(1, tcfg.epochs + 1):
            order = rng.permutation(n) if tcfg.shuffle else np.arange(n)
            loss_sum = 0.0
            hit_sum = 0
            for start in range(0, n, tcfg.batch_size):
                idx = order[start : start + tcfg.batch_size]
                loss, probs, grads = loss_and_grads(
                    cfg, weights, x_train[idx], y_train[idx]
                )
                rmsprop_update(weights, grads, opt)
                loss_sum += loss * len(idx)
                hit_sum += int((probs.argmax(axis=1) == y_train[idx]).sum())
            record = {
                "epoch": epoch,
                "train_loss": loss_sum / n,
                "train_acc": hit_sum / n,
                "val_loss": None,
                "val_acc": None,
            }
            if x_val is not None and len(x_val) > 0:
                record["val_loss"], record["val_acc"] = _metrics(
                    cfg, weights, x_val, y_val
                )
            history.append(record)
    return Model(config=cfg, weights=weights), history


def stratified_holdout(
    x: np.ndarray, y: np.ndarray, frac: float, seed: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Split (x, y) into (main, heldout) keeping per-class proportions."""
    rng = np.random.default_rng(seed)
    held: list[int] = []
    for cls in np.unique(y):
        idx = np.flatnonzero(y == cls)
        k = int(np.floor(len(idx) * frac + 0.5))
        held.extend(idx[rng.permutation(len(idx))[:k]].tolist())
    held_mask = np.zeros(len(y), dtype=bool)
    held_mask[held] = True
    return x[~held_mask], y[~held_mask], x[held_mask], y[held_mask]


def train_with_holdout(
    cfg: ModelConfig, tcfg: TrainConfig, x: np.ndarray, y: np.ndarray
) -> tuple[Model, list[dict]]:
    """Withhold ``validation_frac`` of the data as a validation set, then train."""
    if tcfg.validation_frac == 0.0:
        return train(cfg, tcfg, x, y)
    x_tr, y_tr, x_val, y_val = stratified_holdout(x, y, tcfg.validation_frac, tcfg.seed)
    return train(cfg, tcfg, x_tr, y_tr, x_val, y_val)


def evaluate(model: Model, x: np.ndarray, y: np.ndarray) -> EvalReport:
    if len(x) == 0:
        raise ValueError("empty evaluation set")
    y = np.asarray(y, dtype=np.int64)
    probs = _batch_probs(model.config, model.weights, np.asarray(x, dtype=np.float64))
    predicted = probs.argmax(axis=1)
    k = model.config.classes
    confusion = np.zeros((k, k), dtype=np.int64)
    np.add.at(confusion, (y, predicted), 1)
    return EvalReport(
        accuracy=float(np.trace(confusion) / confusion.sum()), confusion=confusion
    )


def stratified_folds(y: np.ndarray, k: int, seed: int) -> list[np.ndarray]:
    """Per-class shuffled indices chopped into k contiguous chunks; fold sizes
    within each class differ by at most one."""
    rng = np.random.default_rng(seed)
    folds: list[list[int]] = [[] for _ in range(k)]
    for cls in np.unique(y):
        idx = np.flatnonzero(y == cls)
        shuffled = idx[rng.permutation(len(idx))]
        for i, chunk in enumerate(np.array_split(shuffled, k)):
            folds[i].extend(chunk.tolist())
    return [np.asarray(f, dtype=np.int64) for f in folds]


@dataclass
class KFoldResult:
    fold_accuracies: list[float]
    mean_accuracy: float


def kfold_cv(
    cfg: ModelConfig, x: np.ndarray, y: np.ndarray, k: int, tcfg: TrainConfig
) -> KFoldResult:
    """Stratified k-fold cross-validation; each fold trains a fresh model."""
    if k < 2:
        raise ValueError("k must be >= 2")
    if len(x) < k:
        raise ValueError(f"need at least {k} examples for {k}-fold CV")
    folds = stratified_folds(np.asarray(y, dtype=np.int64), k, tcfg.seed)
    accs = []
    for i, val_idx in enumerate(folds):
        mask = np.ones(len(y), dtype=bool)
        mask[val_idx] = False
        model, _ = train(cfg, tcfg, x[mask], y[mask], x[val_idx], y[val_idx])
        accs.append(evaluate(model, x[val_idx], y[val_idx]).accuracy)
    return KFoldResult(fold_accuracies=accs, mean_accuracy=float(np.mean(accs)))


@dataclass
class GridResult:
    cell: CellType
    hidden: int
    params: int
    mean_accuracy: float
    fold_accuracies: list[float] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "cell": self.cell.value,
            "hidden": self.hidden,
            "params": self.params,
            "mean_accuracy": self.mean_accuracy,
            "fold_accuracies": self.fold_accuracies,
        }


def grid_search(
    cells: list[CellType],
    hiddens: list[int],
    x: np.ndarray,
    y: np.ndarray,
    tcfg: TrainConfig,
    k: int = 5,
    base_cfg: ModelConfig | None = None,
    progress=None,
) -> list[GridResult]:
    """Cross-validate every (cell, hidden) pair; rank by mean accuracy.

    Ties rank the configuration with fewer parameters first. All
    configurations share the same seeds, hence the same folds.
    """
    if not cells or not hiddens:
        raise ValueError("grid must be non-empty")
    results = []
    for cell in cells:
        for hidden in hiddens:
            cfg = ModelConfig(
                cell=cell,
                hidden=hidden,
                seed=base_cfg.seed if base_cfg is not None else 0,
            )
            res = kfold_cv(cfg, x, y, k, tcfg)
            row = GridResult(
                cell=cell,
                hidden=hidden,
                params=param_count(cfg),
                mean_accuracy=res.mean_accuracy,
                fold_accuracies=res.fold_accuracies,
            )
            results.append(row)
            if progress is not None:
                progress(row)
    results.sort(key=lambda r: (-r.mean_accuracy, r.params))
    return results
