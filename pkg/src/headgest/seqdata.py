"""Gesture sequence datasets: types, JSON Lines I/O, filtering, splitting, synthesis.

A gesture is a short sequence of head-pose Euler angles sampled at 60 Hz.
Raw sequences carry three channels (pitch, second angle, third angle); the
downstream pipeline keeps only the first two. Sample data is stored as a
float64 array of shape ``(length, channels)`` rather than per-sample objects.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path
from typing import Iterator, NamedTuple

import numpy as np

RATE_HZ = 60.0
MAX_SEQ_LEN = 240
MIN_KEPT_LEN = 50


class Label(Enum):
    NOD = "nod"
    SHAKE = "shake"
    OTHER = "other"

    @property
    def index(self) -> int:
        return LABELS.index(self)


LABELS = (Label.NOD, Label.SHAKE, Label.OTHER)


class EulerSample(NamedTuple):
    """One head-pose reading, angles in radians."""

    pitch: float
    second_angle: float
    third_angle: float | None = None


class DatasetError(ValueError):
    """Raised for malformed dataset files or invalid sequence data."""


@dataclass(eq=False)
class GestureSequence:
    """A labeled, time-ordered run of Euler-angle samples.

    ``samples`` has shape ``(length, channels)`` with channels ordered
    (pitch, second_angle[, third_angle]).
    """

    label: Label
    samples: np.ndarray
    rate_hz: float = RATE_HZ
    user_id: str = ""

    def __post_init__(self) -> None:
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 2 or self.samples.shape[1] not in (2, 3):
            raise DatasetError(
                f"samples must have shape (length, 2|3), got {self.samples.shape}"
            )

    def __len__(self) -> int:
        return self.samples.shape[0]

    @property
    def channels(self) -> int:
        return self.samples.shape[1]

    def sample_at(self, i: int) -> EulerSample:
        row = self.samples[i]
        third = float(row[2]) if self.channels == 3 else None
        return EulerSample(float(row[0]), float(row[1]), third)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, GestureSequence):
            return NotImplemented
        return (
            self.label is other.label
            and self.rate_hz == other.rate_hz
            and self.user_id == other.user_id
            and self.samples.shape == other.samples.shape
            and np.array_equal(self.samples, other.samples)
        )


@dataclass(eq=False)
class Dataset:
    sequences: list[GestureSequence]

    def __len__(self) -> int:
        return len(self.sequences)

    def __iter__(self) -> Iterator[GestureSequence]:
        return iter(self.sequences)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        return self.sequences == other.sequences

    def counts(self) -> dict[Label, int]:
        out = {label: 0 for label in LABELS}
        for seq in self.sequences:
            out[seq.label] += 1
        return out


def _encode_rate(rate: float) -> float | int:
    return int(rate) if float(rate).is_integer() else float(rate)


def save_dataset(dataset: Dataset, path: str | Path) -> None:
    """Write one JSON object per line; floats keep full round-trip precision."""
    with open(path, "w", encoding="utf-8") as fh:
        for seq in dataset:
            obj = {
                "label": seq.label.value,
                "user": seq.user_id,
                "rate_hz": _encode_rate(seq.rate_hz),
                "samples": seq.samples.tolist(),
            }
            fh.write(json.dumps(obj) + "\n")


def load_dataset(path: str | Path) -> Dataset:
    """Parse a JSON Lines dataset file.

    Raises :class:`DatasetError` naming the offending line on parse failure,
    unknown label, non-finite angle, or ragged/mixed channel counts.
    """
    sequences: list[GestureSequence] = []
    file_channels: int | None = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetError(f"line {lineno}: invalid JSON: {exc}") from exc
            try:
                label = Label(obj["label"])
            except (KeyError, ValueError):
                raise DatasetError(
                    f"line {lineno}: unknown label {obj.get('label')!r}"
                ) from None
            raw = obj.get("samples", [])
            try:
                arr = np.asarray(raw, dtype=np.float64)
            except ValueError as exc:
                raise DatasetError(f"line {lineno}: bad samples array: {exc}") from exc
            if arr.size == 0:
                width = file_channels if file_channels is not None else 3
                arr = np.zeros((0, width), dtype=np.float64)
            if arr.ndim != 2 or arr.shape[1] not in (2, 3):
                raise DatasetError(
                    f"line {lineno}: samples must be rows of 2 or 3 angles"
                )
            if not np.isfinite(arr).all():
                raise DatasetError(f"line {lineno}: non-finite angle value")
            if file_channels is None and arr.shape[0] > 0:
                file_channels = arr.shape[1]
            elif arr.shape[0] > 0 and arr.shape[1] != file_channels:
                raise DatasetError(
                    f"line {lineno}: mixed channel counts within one file"
                )
            sequences.append(
                GestureSequence(
                    label=label,
                    samples=arr,
                    rate_hz=float(obj.get("rate_hz", RATE_HZ)),
                    user_id=str(obj.get("user", "")),
                )
            )
    return Dataset(sequences)


def filter_short(dataset: Dataset, min_len: int = MIN_KEPT_LEN) -> Dataset:
    """Drop sequences shorter than ``min_len`` samples, preserving order."""
    return Dataset([s for s in dataset if len(s) >= min_len])


def split(
    dataset: Dataset, test_frac: float = 0.10, seed: int = 0
) -> tuple[Dataset, Dataset]:
    """Stratified train/test partition.

    Per class, ``round(count * test_frac)`` sequences (half away from zero)
    go to test, chosen by a seeded shuffle. Outputs preserve the input order
    of their members; together they are a disjoint cover of the input.
    """
    if not 0.0 < test_frac < 1.0:
        raise ValueError(f"test_frac must be in (0, 1), got {test_frac}")
    rng = np.random.default_rng(seed)
    test_indices: set[int] = set()
    for label in LABELS:
        idx = [i for i, s in enumerate(dataset.sequences) if s.label is label]
        if not idx:
            continue
        n_test = int(math.floor(len(idx) * test_frac + 0.5))
        picked = rng.permutation(len(idx))[:n_test]
        test_indices.update(idx[int(j)] for j in picked)
    train = Dataset([s for i, s in enumerate(dataset.sequences) if i not in test_indices])
    test = Dataset([s for i, s in enumerate(dataset.sequences) if i in test_indices])
    return train, test


@dataclass(frozen=True)
class SynthConfig:
    """Knobs for the synthetic gesture generator.

    Nod/shake sequences carry a sinusoidal burst on one channel, confined to
    an interior active region with near-quiet head and tail; "other" is a
    low-amplitude random walk with no burst. ``noise_std`` is the per-sample
    Gaussian noise scale and also the step scale of the "other" walk.
    """

    per_class_count: int
    length_range: tuple[int, int] = (50, 240)
    nod_amplitude_range: tuple[float, float] = (0.2, 0.5)
    shake_amplitude_range: tuple[float, float] = (0.2, 0.5)
    gesture_freq_range: tuple[float, float] = (1.0, 3.0)
    noise_std: float = 0.02
    seed: int = 0

    def __post_init__(self) -> None:
        lo, hi = self.length_range
        if not (MIN_KEPT_LEN <= lo <= hi <= MAX_SEQ_LEN):
            raise ValueError(f"length_range must lie within [50, 240], got {self.length_range}")
        if self.per_class_count <= 0:
            raise ValueError("per_class_count must be positive")
        for name in ("nod_amplitude_range", "shake_amplitude_range", "gesture_freq_range"):
            a, b = getattr(self, name)
            if not (0 < a <= b):
                raise ValueError(f"{name} must be positive and ordered, got {(a, b)}")
        if self.noise_std < 0:
            raise ValueError("noise_std must be >= 0")


def synth_sequence(
    label: Label, length: int, cfg: SynthConfig, rng: np.random.Generator
) -> tuple[np.ndarray, tuple[int, int]]:
    """Generate one 3-channel sequence; returns (samples, active_region).

    The returned ``(start, end)`` half-open interval is the ground-truth
    placement of the burst (nod/shake) or the middle-three-fifths region
    (other); tests use it to validate change-point detection.
    """
    samples = rng.normal(0.0, cfg.noise_std, size=(length, 3))
    if label is Label.OTHER:
        # walk scale varies per sequence down to almost motionless: people
        # asked for "anything else" often just hold still
        walk_scale = cfg.noise_std * rng.uniform(0.05, 1.0)
        steps = rng.normal(0.0, walk_scale, size=(length, 2))
        samples[:, :2] += np.cumsum(steps, axis=0)
        active = (length // 5, length - length // 5)
    else:
        if label is Label.NOD:
            amp_lo, amp_hi = cfg.nod_amplitude_range
            channel = 0
        else:
            amp_lo, amp_hi = cfg.shake_amplitude_range
            channel = 1
        amplitude = rng.uniform(amp_lo, amp_hi)
        freq = rng.uniform(*cfg.gesture_freq_range)
        head = int(round(length * rng.uniform(0.15, 0.30)))
        tail = int(round(length * rng.uniform(0.15, 0.30)))
        start, end = head, length - tail
        t = np.arange(end - start) / RATE_HZ
        samples[start:end, channel] += amplitude * np.sin(2.0 * np.pi * freq * t)
        active = (start, end)
    np.clip(samples, -np.pi, np.pi, out=samples)
    return samples, active


def synth_dataset(cfg: SynthConfig) -> Dataset:
    """Deterministic synthetic dataset: ``per_class_count`` sequences per label."""
    rng = np.random.default_rng(cfg.seed)
    lo, hi = cfg.length_range
    sequences = []
    for label in LABELS:
        for i in range(cfg.per_class_count):
            length = int(rng.integers(lo, hi + 1))
            samples, _ = synth_sequence(label, length, cfg, rng)
            sequences.append(
                GestureSequence(label=label, samples=samples, user_id=f"synth-{i % 6}")
            )
    return Dataset(sequences)
