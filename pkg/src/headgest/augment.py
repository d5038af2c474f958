"""Time-warp augmentation: full-sequence resampling and head/tail resampling.

Two operators multiply a dataset. The first resamples a whole sequence to a
ladder of lengths spaced ``delta_alpha`` apart. The second resamples only the
quiet head (before the active region) or tail (after it) in ``delta_beta``
steps, splicing the warped part back against the untouched remainder, so the
gesture itself keeps its original timing.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .changepoint import ChangePointBounds, PeltConfig, gesture_bounds
from .seqdata import Dataset, GestureSequence, MAX_SEQ_LEN


@dataclass(frozen=True)
class AugmentConfig:
    delta_alpha: int = 30
    delta_beta: int = 4
    max_len: int = MAX_SEQ_LEN
    min_len: int = 1

    def __post_init__(self) -> None:
        if min(self.delta_alpha, self.delta_beta, self.max_len, self.min_len) < 1:
            raise ValueError("all AugmentConfig fields must be positive")


def resample_linear(channel: np.ndarray, target_len: int) -> np.ndarray:
    """Endpoint-preserving linear resampling of a 1-D signal.

    Samples at positions ``i * (L-1) / (T-1)``; a target of 1 keeps the first
    element, and the native length returns an identical copy.
    """
    x = np.asarray(channel, dtype=np.float64)
    n = len(x)
    if n == 0:
        raise ValueError("cannot resample an empty channel")
    if target_len < 1:
        raise ValueError(f"target_len must be >= 1, got {target_len}")
    if target_len == n:
        return x.copy()
    if target_len == 1:
        return x[:1].copy()
    # linspace pins both endpoints exactly; interior points are i*(L-1)/(T-1)
    positions = np.linspace(0.0, n - 1, target_len)
    return np.interp(positions, np.arange(n), x)


def _resample_block(samples: np.ndarray, target_len: int) -> np.ndarray:
    out = np.empty((target_len, samples.shape[1]), dtype=np.float64)
    for c in range(samples.shape[1]):
        out[:, c] = resample_linear(samples[:, c], target_len)
    return out


def full_warp_targets(source_len: int, cfg: AugmentConfig) -> list[int]:
    """Lengths for whole-sequence warping: shrink first, then stretch.

    Shrink targets are L - k*delta_alpha while the result stays >= min_len,
    listed largest first; stretch targets are L + k*delta_alpha up to
    max_len, ascending. The native length is never included.
    """
    targets = []
    t = source_len - cfg.delta_alpha
    while t >= cfg.min_len:
        targets.append(t)
        t -= cfg.delta_alpha
    t = source_len + cfg.delta_alpha
    while t <= cfg.max_len:
        targets.append(t)
        t += cfg.delta_alpha
    return targets


def warp_full(seq: GestureSequence, target_len: int) -> GestureSequence:
    """Resample every channel of ``seq`` to ``target_len``; metadata unchanged."""
    if target_len < 1 or target_len > MAX_SEQ_LEN:
        raise ValueError(f"target length out of range: {target_len}")
    return replace(seq, samples=_resample_block(seq.samples, target_len))


def _warped_part_lengths(part_len: int, total_len: int, cfg: AugmentConfig) -> list[int]:
    """Resampled lengths for one head or tail part, down steps then up steps.

    Downsampling stops once the part would reach length zero or less;
    upsampling stops once the part would reach max_len or more, or the total
    sequence would exceed max_len.
    """
    lengths = []
    k = 1
    while part_len - k * cfg.delta_beta >= cfg.min_len:
        lengths.append(part_len - k * cfg.delta_beta)
        k += 1
    k = 1
    while (
        part_len + k * cfg.delta_beta < cfg.max_len
        and total_len + k * cfg.delta_beta <= cfg.max_len
    ):
        lengths.append(part_len + k * cfg.delta_beta)
        k += 1
    return lengths


def head_tail_variants(
    seq: GestureSequence, bounds: ChangePointBounds, cfg: AugmentConfig
) -> list[GestureSequence]:
    """All head-warped then tail-warped copies of ``seq``.

    The head part is ``samples[:c_i]`` and the tail part ``samples[c_f:]``;
    the remainder is spliced back untouched. An empty part yields no
    variants on that side.
    """
    total = len(seq)
    if not bounds.c_f <= total:
        raise ValueError(f"bounds {bounds} exceed sequence length {total}")
    variants = []
    head, rest_h = seq.samples[: bounds.c_i], seq.samples[bounds.c_i :]
    if len(head) > 0:
        for new_len in _warped_part_lengths(len(head), total, cfg):
            warped = np.concatenate([_resample_block(head, new_len), rest_h])
            variants.append(replace(seq, samples=warped))
    rest_t, tail = seq.samples[: bounds.c_f], seq.samples[bounds.c_f :]
    if len(tail) > 0:
        for new_len in _warped_part_lengths(len(tail), total, cfg):
            warped = np.concatenate([rest_t, _resample_block(tail, new_len)])
            variants.append(replace(seq, samples=warped))
    return variants


def augment_dataset(
    dataset: Dataset,
    cfg: AugmentConfig = AugmentConfig(),
    pelt_cfg: PeltConfig | None = None,
) -> Dataset:
    """Originals plus every full-warp and head/tail variant of each sequence.

    Sequences are expected pre-filtered to length >= 50. Output order is
    deterministic: each original followed by its full-warp variants (in
    target order) and its head/tail variants (head family first).
    """
    out: list[GestureSequence] = []
    for seq in dataset:
        out.append(seq)
        for target in full_warp_targets(len(seq), cfg):
            out.append(warp_full(seq, target))
        bounds = gesture_bounds(seq, pelt_cfg)
        out.extend(head_tail_variants(seq, bounds, cfg))
    return Dataset(out)
