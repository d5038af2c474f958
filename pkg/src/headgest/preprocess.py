"""Channel dropping, standardization, zero padding, and interleaved flattening.

The model consumes length-480 vectors: a 2-channel sequence standardized with
training-set statistics, zero-padded at the end to 240 samples, and flattened
by interleaving the two channels position by position.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .seqdata import Dataset, GestureSequence, MAX_SEQ_LEN

INPUT_CHANNELS = 2
FLAT_LEN = MAX_SEQ_LEN * INPUT_CHANNELS


@dataclass(eq=False)
class Standardizer:
    """Per-channel affine transform to zero mean, unit variance.

    Fitted on training data only; the same instance is applied to test data
    and is embedded in exported model files.
    """

    mean: np.ndarray
    std: np.ndarray

    def __post_init__(self) -> None:
        self.mean = np.asarray(self.mean, dtype=np.float64)
        self.std = np.asarray(self.std, dtype=np.float64)
        if self.mean.shape != (INPUT_CHANNELS,) or self.std.shape != (INPUT_CHANNELS,):
            raise ValueError("mean/std must each have one entry per channel")
        if not (self.std > 0).all():
            raise ValueError("std must be positive per channel")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Standardizer):
            return NotImplemented
        return np.array_equal(self.mean, other.mean) and np.array_equal(
            self.std, other.std
        )

    def apply(self, samples: np.ndarray) -> np.ndarray:
        return (samples - self.mean) / self.std

    def inverse(self, samples: np.ndarray) -> np.ndarray:
        return samples * self.std + self.mean

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "std": self.std.tolist()}

    @classmethod
    def from_dict(cls, obj: dict) -> "Standardizer":
        return cls(mean=np.asarray(obj["mean"]), std=np.asarray(obj["std"]))


@dataclass(eq=False)
class ModelInput:
    """Flattened model input: interleaved values plus the pre-padding length."""

    values: np.ndarray
    true_len: int

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ModelInput):
            return NotImplemented
        return self.true_len == other.true_len and np.array_equal(
            self.values, other.values
        )


def drop_third_channel(seq: GestureSequence) -> GestureSequence:
    """Project a 3-channel sequence to (pitch, second_angle)."""
    if seq.channels != 3:
        raise ValueError(f"expected 3 channels, got {seq.channels}")
    return replace(seq, samples=seq.samples[:, :2].copy())


def drop_third_channel_dataset(dataset: Dataset) -> Dataset:
    return Dataset([drop_third_channel(s) for s in dataset])


def fit_standardizer(train: Dataset) -> Standardizer:
    """Per-channel mean and population std over all training samples."""
    blocks = [s.samples[:, :INPUT_CHANNELS] for s in train if len(s) > 0]
    if not blocks:
        raise ValueError("no samples to fit standardizer on")
    stacked = np.concatenate(blocks)
    if stacked.shape[0] < 2:
        raise ValueError("need at least 2 samples per channel")
    mean = stacked.mean(axis=0)
    std = stacked.std(axis=0)
    if not (std > 0).all():
        raise ValueError("zero-variance channel; cannot standardize")
    return Standardizer(mean=mean, std=std)


def apply_standardizer(seq: GestureSequence, s: Standardizer) -> GestureSequence:
    if seq.channels != INPUT_CHANNELS:
        raise ValueError(f"expected {INPUT_CHANNELS} channels, got {seq.channels}")
    return replace(seq, samples=s.apply(seq.samples))


def apply_standardizer_dataset(dataset: Dataset, s: Standardizer) -> Dataset:
    return Dataset([apply_standardizer(seq, s) for seq in dataset])


def flatten_block(samples: np.ndarray) -> ModelInput:
    """Zero-pad a (length, 2) block to 240 rows and interleave the channels.

    Output position 2i holds pitch_i and 2i+1 the second channel; every
    position at or beyond 2 * true_len is exactly zero.
    """
    n = samples.shape[0]
    if samples.ndim != 2 or samples.shape[1] != INPUT_CHANNELS:
        raise ValueError(f"expected shape (length, 2), got {samples.shape}")
    if n > MAX_SEQ_LEN:
        raise ValueError(f"sequence length {n} exceeds {MAX_SEQ_LEN}")
    frame = np.zeros((MAX_SEQ_LEN, INPUT_CHANNELS), dtype=np.float64)
    frame[:n] = samples
    return ModelInput(values=frame.reshape(FLAT_LEN), true_len=n)


def pad_and_flatten(seq: GestureSequence) -> ModelInput:
    return flatten_block(seq.samples)


def unflatten(values: np.ndarray) -> np.ndarray:
    """Inverse of the interleave: a (480,) vector back to (240, 2) channels."""
    flat = np.asarray(values, dtype=np.float64)
    if flat.shape != (FLAT_LEN,):
        raise ValueError(f"expected shape ({FLAT_LEN},), got {flat.shape}")
    return flat.reshape(MAX_SEQ_LEN, INPUT_CHANNELS)


def dataset_to_matrix(dataset: Dataset) -> tuple[np.ndarray, np.ndarray]:
    """Stack a standardized 2-channel dataset into (X, y) training arrays."""
    n = len(dataset)
    X = np.zeros((n, FLAT_LEN), dtype=np.float64)
    y = np.zeros(n, dtype=np.int64)
    for i, seq in enumerate(dataset):
        X[i] = flatten_block(seq.samples).values
        y[i] = seq.label.index
    return X, y
