"""Buffered real-time prediction over a live (pitch, second-angle) stream.

A 240-slot ring buffer collects samples; once full, the model is evaluated
on the buffer and re-evaluated every 15 samples. With warm start enabled,
evaluation instead begins at the first stride boundary: the partial buffer
is standardized and the unfilled remainder padded with zeros, exactly like
a short training sequence.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .nn import Model, Prediction, predict
from .preprocess import flatten_block
from .seqdata import Dataset, MAX_SEQ_LEN


@dataclass(frozen=True)
class StreamConfig:
    buffer_len: int = MAX_SEQ_LEN
    stride: int = 15
    warm_start: bool = False

    def __post_init__(self) -> None:
        if not 1 <= self.stride <= self.buffer_len:
            raise ValueError("need 1 <= stride <= buffer_len")


class StreamPredictor:
    """Single-writer streaming classifier around one loaded model.

    The buffer always holds the most recent ``min(samples_seen, buffer_len)``
    samples in arrival order. Standardization uses the model's stored
    parameters; it is never refitted online.
    """

    def __init__(self, model: Model, cfg: StreamConfig = StreamConfig()):
        if model.standardizer is None:
            raise ValueError("streaming requires a model with an embedded standardizer")
        if model.config.time_steps != cfg.buffer_len:
            raise ValueError("buffer_len must match the model's time steps")
        self.model = model
        self.cfg = cfg
        self.samples_seen = 0
        self._buf = np.zeros((cfg.buffer_len, 2), dtype=np.float64)
        self._ptr = 0

    def reset(self) -> None:
        self.samples_seen = 0
        self._ptr = 0
        self._buf[:] = 0.0

    def window(self) -> np.ndarray:
        """The buffered samples, oldest first."""
        if self.samples_seen < self.cfg.buffer_len:
            return self._buf[: self.samples_seen].copy()
        return np.concatenate([self._buf[self._ptr :], self._buf[: self._ptr]])

    def _due(self) -> bool:
        if self.cfg.warm_start:
            return self.samples_seen % self.cfg.stride == 0
        return (
            self.samples_seen >= self.cfg.buffer_len
            and (self.samples_seen - self.cfg.buffer_len) % self.cfg.stride == 0
        )

    def build_input(self):
        """Standardize the current window and flatten it for the model."""
        standardized = self.model.standardizer.apply(self.window())
        return flatten_block(standardized)

    def push_sample(self, pitch: float, second: float) -> Prediction | None:
        if not (math.isfinite(pitch) and math.isfinite(second)):
            raise ValueError("samples must be finite")
        self._buf[self._ptr] = (pitch, second)
        self._ptr = (self._ptr + 1) % self.cfg.buffer_len
        self.samples_seen += 1
        if not self._due():
            return None
        return predict(self.model, self.build_input())


def replay(
    model: Model, dataset: Dataset, cfg: StreamConfig = StreamConfig()
) -> Iterator[dict]:
    """Feed each sequence through a fresh stream, yielding prediction records.

    Only the first two channels are streamed. Each record carries the
    sequence index, the 1-based sample index of the emission, the class
    probabilities, and the predicted label.
    """
    predictor = StreamPredictor(model, cfg)
    for seq_index, seq in enumerate(dataset):
        predictor.reset()
        for row in seq.samples:
            result = predictor.push_sample(float(row[0]), float(row[1]))
            if result is not None:
                yield {
                    "seq": seq_index,
                    "sample_index": predictor.samples_seen,
                    "probs": {
                        "nod": float(result.probs[0]),
                        "shake": float(result.probs[1]),
                        "other": float(result.probs[2]),
                    },
                    "label": result.label.value,
                }
