"""Change-point detection used to locate a gesture's active region.

The detector is a penalized exact search for shifts in segment mean (sum of
squared errors about each segment's mean, plus a fixed penalty per change
point), solved by the pruned dynamic program. ``exhaustive_segment`` solves
the same objective by brute-force enumeration and exists purely as a test
oracle; both sides accumulate costs with the same arithmetic so their optima
can be compared exactly, and both break ties the same way: fewer change
points first, then lexicographically smallest index list.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .seqdata import GestureSequence, Label

ORACLE_MAX_LEN = 32


@dataclass(frozen=True)
class ChangePointBounds:
    """Half-open active region delimiters: first and last change point."""

    c_i: int
    c_f: int

    def __post_init__(self) -> None:
        if not 0 <= self.c_i <= self.c_f:
            raise ValueError(f"need 0 <= c_i <= c_f, got ({self.c_i}, {self.c_f})")


@dataclass(frozen=True)
class PeltConfig:
    penalty: float
    min_segment_len: int = 2

    def __post_init__(self) -> None:
        if self.penalty < 0:
            raise ValueError("penalty must be >= 0")
        if self.min_segment_len < 1:
            raise ValueError("min_segment_len must be >= 1")


def segment_cost(signal: np.ndarray, a: int, b: int) -> float:
    """Sum of squared deviations of ``signal[a:b]`` about its mean."""
    n = len(signal)
    if not 0 <= a < b <= n:
        raise ValueError(f"need 0 <= a < b <= {n}, got a={a}, b={b}")
    seg = np.asarray(signal, dtype=np.float64)[a:b]
    return float(((seg - seg.mean()) ** 2).sum())


class _CostCache:
    """Memoized segment costs for one signal; shared by both search routes."""

    def __init__(self, signal: np.ndarray):
        self.signal = np.asarray(signal, dtype=np.float64)
        self._memo: dict[tuple[int, int], float] = {}

    def __call__(self, a: int, b: int) -> float:
        key = (a, b)
        hit = self._memo.get(key)
        if hit is None:
            hit = self._memo[key] = segment_cost(self.signal, a, b)
        return hit


def objective(signal: np.ndarray, change_points: list[int], cfg: PeltConfig) -> float:
    """Total penalized cost of a segmentation given by its change points."""
    bounds = [0, *change_points, len(signal)]
    total = -cfg.penalty
    for a, b in zip(bounds[:-1], bounds[1:]):
        total = total + segment_cost(signal, a, b) + cfg.penalty
    return total


def pelt(signal: np.ndarray, cfg: PeltConfig) -> list[int]:
    """Exact penalized change-point search with candidate pruning.

    Returns the strictly increasing change-point indices minimizing
    ``sum(segment costs) + penalty * (#change points)``, each index starting
    a new segment of at least ``min_segment_len`` samples. A candidate tau is
    discarded once ``F(tau) + cost(tau, t) > F(t)``; with a minimum segment
    length m > 1 the removal takes effect only from time t + m onward, when
    a candidate starting at t is itself admissible. Removing earlier can
    lose solutions still reachable in the gap, breaking exactness.
    """
    x = np.asarray(signal, dtype=np.float64)
    n = len(x)
    if n == 0:
        raise ValueError("empty signal")
    m = cfg.min_segment_len
    beta = cfg.penalty
    if n < 2 * m:
        return []
    cost = _CostCache(x)

    # F[t]: best value over admissible segmentations of x[:t]; best[t] is the
    # (count, path) tie-break payload for that value.
    F = {0: -beta}
    best_path: dict[int, tuple[int, ...]] = {0: ()}
    active = [0]
    removal_at: dict[int, int] = {}
    never = n + m + 1

    for t in range(m, n + 1):
        active = [tau for tau in active if removal_at.get(tau, never) > t]
        candidates = [tau for tau in active if t - tau >= m]
        best_key: tuple[float, int, tuple[int, ...]] | None = None
        for tau in candidates:
            value = F[tau] + cost(tau, t) + beta
            path = best_path[tau] + (tau,) if tau > 0 else ()
            key = (value, len(path), path)
            if best_key is None or key < best_key:
                best_key = key
        assert best_key is not None  # tau=0 is always admissible for t >= m
        F[t] = best_key[0]
        best_path[t] = best_key[2]
        for tau in candidates:
            if F[tau] + cost(tau, t) > F[t] and tau not in removal_at:
                removal_at[tau] = t + m
        if t + m <= n:
            active.append(t)

    return list(best_path[n])


def exhaustive_segment(signal: np.ndarray, cfg: PeltConfig) -> list[int]:
    """Brute-force global minimizer over every admissible change-point set.

    Depth-first enumeration of all segmentations whose segments respect
    ``min_segment_len`` (the whole-signal segmentation is always admissible),
    accumulating the penalized cost exactly as the dynamic program does.
    Ties break toward fewer change points, then the lexicographically
    smallest index list. Only for short signals; this is exponential.
    """
    x = np.asarray(signal, dtype=np.float64)
    n = len(x)
    if n == 0:
        raise ValueError("empty signal")
    if n > ORACLE_MAX_LEN:
        raise ValueError(f"oracle limited to length <= {ORACLE_MAX_LEN}, got {n}")
    m = cfg.min_segment_len
    beta = cfg.penalty
    cost = _CostCache(x)

    best_key: list[tuple[float, int, tuple[int, ...]] | None] = [None]

    def consider(value: float, path: tuple[int, ...]) -> None:
        key = (value, len(path), path)
        if best_key[0] is None or key < best_key[0]:
            best_key[0] = key

    def recurse(start: int, acc: float, path: tuple[int, ...]) -> None:
        if n - start >= m:
            consider(acc + cost(start, n) + beta, path)
        for tau in range(start + m, n - m + 1):
            recurse(tau, acc + cost(start, tau) + beta, path + (tau,))

    # Whole-signal segmentation is admissible even when n < m.
    consider(-beta + cost(0, n) + beta, ())
    if n >= 2 * m:
        for tau in range(m, n - m + 1):
            recurse(tau, -beta + cost(0, tau) + beta, (tau,))

    assert best_key[0] is not None
    return list(best_key[0][2])


def detection_signal(seq: GestureSequence) -> np.ndarray:
    """Per-sample Euclidean norm of the mean-centered (pitch, second) pair."""
    arr = seq.samples[:, :2]
    centered = arr - arr.mean(axis=0)
    return np.sqrt((centered**2).sum(axis=1))


def auto_penalty(signal: np.ndarray) -> float:
    """Scale-adaptive default penalty: 2 * sigma^2 * ln(L).

    sigma is a robust noise estimate from the median absolute first
    difference of the signal (median |dx| = sqrt(2) * 0.6745 * sigma for
    Gaussian noise).
    """
    x = np.asarray(signal, dtype=np.float64)
    if len(x) < 2:
        return 0.0
    med = float(np.median(np.abs(np.diff(x))))
    sigma = med / (math.sqrt(2.0) * 0.6745)
    return 2.0 * sigma * sigma * math.log(len(x))


def gesture_bounds(
    seq: GestureSequence, pelt_cfg: PeltConfig | None = None
) -> ChangePointBounds:
    """Locate the active region of a gesture.

    Nod/shake: run the change-point search on the detection signal and take
    the first and last change points; fall back to the first/last-fifth rule
    when none are found. "Other" always uses the first/last-fifth rule.
    """
    length = len(seq)
    if length < 5:
        raise ValueError(f"sequence too short for bounds: {length} < 5")
    fifth = length // 5
    if seq.label is Label.OTHER:
        return ChangePointBounds(fifth, length - fifth)
    signal = detection_signal(seq)
    if pelt_cfg is None:
        pelt_cfg = PeltConfig(penalty=auto_penalty(signal))
    cps = pelt(signal, pelt_cfg)
    if not cps:
        return ChangePointBounds(fifth, length - fifth)
    return ChangePointBounds(cps[0], cps[-1])
