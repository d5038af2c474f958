"""Minimal recurrent network engine for 3-class gesture sequences.

Architecture: reshape a length-480 interleaved vector into 240 (pitch,
second) pairs, run a single GRU or LSTM layer (tanh activations, hard
sigmoid on gates) over all 240 steps from a zero state, then a dense layer
to 3 logits and a softmax. Training uses exact backpropagation through time
in float64; weights serialize as little-endian float32.

Gate blocks are packed along the last axis in a fixed order:
GRU ``[update z | reset r | candidate h]``, LSTM ``[input i | forget f |
candidate c | output o]``. The GRU uses the reset-before convention: the
reset gate scales the previous hidden state inside the candidate's
recurrent term, ``h_tilde = tanh(W_h x + U_h (r*h) + b_h)``.

The scans keep activations in time-major ``(T, B, ...)`` buffers and update
them in place; the recurrence is the only sequential part, everything else
is batched into single BLAS calls.
"""
from __future__ import annotations

import json
import struct
import threading
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from .preprocess import FLAT_LEN, INPUT_CHANNELS, ModelInput, Standardizer
from .seqdata import LABELS, Label

MAGIC = b"GSTRNN01"
PROB_FLOOR = 1e-12
_TENSOR_ORDER = ("w_input", "w_recurrent", "b_gates", "w_dense", "b_dense")


class CellType(Enum):
    GRU = "gru"
    LSTM = "lstm"

    @property
    def gates(self) -> int:
        return 3 if self is CellType.GRU else 4


class NonFiniteError(FloatingPointError):
    """A forward pass produced NaN or infinity."""


class ModelFormatError(ValueError):
    """Model file is corrupt, truncated, or of an unknown version."""


@dataclass(frozen=True)
class ModelConfig:
    cell: CellType
    hidden: int
    input_channels: int = INPUT_CHANNELS
    time_steps: int = 240
    classes: int = 3
    seed: int = 0

    def __post_init__(self) -> None:
        if self.hidden < 1:
            raise ValueError("hidden must be a positive integer")


@dataclass
class Weights:
    """Full parameter set; gate blocks packed per the module convention."""

    w_input: np.ndarray  # (input_channels, gates * hidden)
    w_recurrent: np.ndarray  # (hidden, gates * hidden)
    b_gates: np.ndarray  # (gates * hidden,)
    w_dense: np.ndarray  # (hidden, classes)
    b_dense: np.ndarray  # (classes,)

    def tensors(self) -> list[tuple[str, np.ndarray]]:
        return [(name, getattr(self, name)) for name in _TENSOR_ORDER]

    def copy(self) -> "Weights":
        return Weights(*(t.copy() for _, t in self.tensors()))


@dataclass(eq=False)
class Prediction:
    probs: np.ndarray  # (3,) in (nod, shake, other) order
    label: Label


@dataclass
class Model:
    config: ModelConfig
    weights: Weights
    standardizer: Standardizer | None = None


def hard_sigmoid(x):
    """Piecewise-linear gate activation max(0, min(1, 0.2*x + 0.5))."""
    return np.minimum(1.0, np.maximum(0.0, 0.2 * np.asarray(x, dtype=np.float64) + 0.5))


def _hs_inplace(buf: np.ndarray) -> None:
    buf *= 0.2
    buf += 0.5
    np.clip(buf, 0.0, 1.0, out=buf)


def _hs_grad(activation: np.ndarray) -> np.ndarray:
    # Derivative is 0.2 strictly inside (0, 1) and 0 on the clipped flats.
    return 0.2 * ((activation > 0.0) & (activation < 1.0))


def _orthogonal(rng: np.random.Generator, n: int) -> np.ndarray:
    a = rng.standard_normal((n, n))
    q, r = np.linalg.qr(a)
    return q * np.sign(np.diag(r))


def init_weights(cfg: ModelConfig) -> Weights:
    """Glorot-uniform input/dense kernels, per-gate orthogonal recurrent
    kernels, zero biases (LSTM forget-gate bias 1). Deterministic per seed."""
    rng = np.random.default_rng(cfg.seed)
    g, n, i = cfg.cell.gates, cfg.hidden, cfg.input_channels
    limit_in = np.sqrt(6.0 / (i + g * n))
    w_input = rng.uniform(-limit_in, limit_in, size=(i, g * n))
    w_recurrent = np.concatenate([_orthogonal(rng, n) for _ in range(g)], axis=1)
    b_gates = np.zeros(g * n)
    if cfg.cell is CellType.LSTM:
        b_gates[n : 2 * n] = 1.0
    limit_d = np.sqrt(6.0 / (n + cfg.classes))
    w_dense = rng.uniform(-limit_d, limit_d, size=(n, cfg.classes))
    return Weights(w_input, w_recurrent, b_gates, w_dense, np.zeros(cfg.classes))


def cell_step(cell: CellType, x_t: np.ndarray, state, w: Weights):
    """One recurrence step for a single example.

    GRU state is ``h`` of shape (hidden,); LSTM state is the pair ``(h, c)``.
    """
    n = w.w_recurrent.shape[0]
    x_t = np.asarray(x_t, dtype=np.float64)
    if cell is CellType.GRU:
        h = np.asarray(state, dtype=np.float64)
        pre = x_t @ w.w_input + w.b_gates
        z = hard_sigmoid(pre[:n] + h @ w.w_recurrent[:, :n])
        r = hard_sigmoid(pre[n : 2 * n] + h @ w.w_recurrent[:, n : 2 * n])
        h_tilde = np.tanh(pre[2 * n :] + (r * h) @ w.w_recurrent[:, 2 * n :])
        return z * h + (1.0 - z) * h_tilde
    h, c = state
    gates = x_t @ w.w_input + np.asarray(h) @ w.w_recurrent + w.b_gates
    i = hard_sigmoid(gates[:n])
    f = hard_sigmoid(gates[n : 2 * n])
    c_tilde = np.tanh(gates[2 * n : 3 * n])
    o = hard_sigmoid(gates[3 * n :])
    c_new = f * np.asarray(c) + i * c_tilde
    return o * np.tanh(c_new), c_new


def _as_batch(inputs) -> tuple[np.ndarray, bool]:
    if isinstance(inputs, ModelInput):
        inputs = inputs.values
    x = np.asarray(inputs, dtype=np.float64)
    if x.ndim == 1:
        return x[None, :], True
    return x, False


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


# Scan and backward buffers are reused across calls (keyed by name and
# shape, one pool per thread) so steady-state training does not reallocate
# tens of megabytes per batch. Every buffer is fully overwritten before use
# except explicit zero-initialized slices.
_tls = threading.local()


def _ws(name: str, shape: tuple[int, ...]) -> np.ndarray:
    pool = getattr(_tls, "pool", None)
    if pool is None:
        pool = _tls.pool = {}
    key = (name, shape)
    arr = pool.get(key)
    if arr is None:
        arr = pool[key] = np.empty(shape)
    return arr


def _time_major(cfg: ModelConfig, x: np.ndarray) -> np.ndarray:
    b = x.shape[0]
    x_tm = _ws("x_tm", (cfg.time_steps, b, cfg.input_channels))
    x_tm[:] = x.reshape(b, cfg.time_steps, cfg.input_channels).transpose(1, 0, 2)
    return x_tm


def _gru_scan(cfg: ModelConfig, w: Weights, x: np.ndarray, keep: bool):
    b, t_steps, n = x.shape[0], cfg.time_steps, cfg.hidden
    x_tm = _time_major(cfg, x)
    u_zr = np.ascontiguousarray(w.w_recurrent[:, : 2 * n])
    u_h = np.ascontiguousarray(w.w_recurrent[:, 2 * n :])
    kept = t_steps if keep else 1
    zr_all = _ws("gru_zr", (kept, b, 2 * n))
    ht_all = _ws("gru_ht", (kept, b, n))
    h_all = _ws("gru_h", (t_steps + 1 if keep else 2, b, n))
    h_all[0] = 0.0
    xw = _ws("gru_xw", (b, 3 * n))
    scratch = _ws("gru_scr", (b, n))
    h_prev, h_spare = h_all[0], h_all[1]
    for t in range(t_steps):
        k = t if keep else 0
        np.dot(x_tm[t], w.w_input, out=xw)
        xw += w.b_gates
        zr = zr_all[k]
        np.dot(h_prev, u_zr, out=zr)
        zr += xw[:, : 2 * n]
        _hs_inplace(zr)
        z, r = zr[:, :n], zr[:, n:]
        h_tilde = ht_all[k]
        np.multiply(r, h_prev, out=scratch)
        np.dot(scratch, u_h, out=h_tilde)
        h_tilde += xw[:, 2 * n :]
        np.tanh(h_tilde, out=h_tilde)
        # h_new = z * h_prev + (1 - z) * h_tilde
        h_new = h_all[t + 1] if keep else h_spare
        np.subtract(1.0, z, out=scratch)
        scratch *= h_tilde
        np.multiply(z, h_prev, out=h_new)
        h_new += scratch
        if keep:
            h_prev = h_new
        else:
            h_prev, h_spare = h_new, h_prev
    cache = {"x_tm": x_tm, "zr": zr_all, "ht": ht_all, "h": h_all} if keep else None
    return h_prev, cache


def _lstm_scan(cfg: ModelConfig, w: Weights, x: np.ndarray, keep: bool):
    b, t_steps, n = x.shape[0], cfg.time_steps, cfg.hidden
    x_tm = _time_major(cfg, x)
    kept = t_steps if keep else 1
    g_all = _ws("lstm_g", (kept, b, 4 * n))
    c_all = _ws("lstm_c", (t_steps + 1 if keep else 2, b, n))
    h_all = _ws("lstm_h", (t_steps + 1 if keep else 2, b, n))
    c_all[0] = 0.0
    h_all[0] = 0.0
    tc_all = _ws("lstm_tc", (kept, b, n))
    xw = _ws("lstm_xw", (b, 4 * n))
    scratch = _ws("lstm_scr", (b, n))
    h_prev, h_spare = h_all[0], h_all[1]
    c_prev, c_spare = c_all[0], c_all[1]
    for t in range(t_steps):
        k = t if keep else 0
        np.dot(x_tm[t], w.w_input, out=xw)
        xw += w.b_gates
        gates = g_all[k]
        np.dot(h_prev, w.w_recurrent, out=gates)
        gates += xw
        _hs_inplace(gates[:, : 2 * n])
        np.tanh(gates[:, 2 * n : 3 * n], out=gates[:, 2 * n : 3 * n])
        _hs_inplace(gates[:, 3 * n :])
        i, f = gates[:, :n], gates[:, n : 2 * n]
        c_tilde, o = gates[:, 2 * n : 3 * n], gates[:, 3 * n :]
        c_new = c_all[t + 1] if keep else c_spare
        np.multiply(f, c_prev, out=c_new)
        np.multiply(i, c_tilde, out=scratch)
        c_new += scratch
        tanh_c = tc_all[k]
        np.tanh(c_new, out=tanh_c)
        h_new = h_all[t + 1] if keep else h_spare
        np.multiply(o, tanh_c, out=h_new)
        if keep:
            h_prev, c_prev = h_new, c_new
        else:
            h_prev, h_spare = h_new, h_prev
            c_prev, c_spare = c_new, c_prev
    cache = (
        {"x_tm": x_tm, "g": g_all, "c": c_all, "h": h_all, "tc": tc_all}
        if keep
        else None
    )
    return h_prev, cache


def _forward_full(cfg: ModelConfig, w: Weights, x: np.ndarray, keep: bool):
    if x.ndim != 2 or x.shape[1] != cfg.time_steps * cfg.input_channels:
        raise ValueError(
            f"expected inputs of shape (batch, {cfg.time_steps * cfg.input_channels})"
        )
    scan = _gru_scan if cfg.cell is CellType.GRU else _lstm_scan
    h_final, cache = scan(cfg, w, x, keep)
    logits = h_final @ w.w_dense + w.b_dense
    if not np.isfinite(logits).all():
        raise NonFiniteError("non-finite logits in forward pass")
    probs = _softmax(logits)
    return probs, h_final, cache


def forward(cfg: ModelConfig, w: Weights, inputs) -> np.ndarray:
    """Class probabilities for one flattened input or a batch of them.

    Accepts a :class:`ModelInput`, a (480,) vector, or a (batch, 480) array;
    returns probabilities of matching leading shape, rows summing to 1.
    """
    x, single = _as_batch(inputs)
    probs, _, _ = _forward_full(cfg, w, x, keep=False)
    return probs[0] if single else probs


def predict(model: Model, inputs) -> Prediction:
    probs = forward(model.config, model.weights, inputs)
    return Prediction(probs=probs, label=LABELS[int(np.argmax(probs))])


def loss_sparse_ce(probs: np.ndarray, labels: np.ndarray) -> float:
    """Mean negative log probability of the true class, floored at 1e-12."""
    p = np.asarray(probs, dtype=np.float64)
    if p.ndim == 1:
        p = p[None, :]
    y = np.atleast_1d(np.asarray(labels, dtype=np.int64))
    picked = np.maximum(p[np.arange(len(y)), y], PROB_FLOOR)
    return float(-np.log(picked).mean())


def _gru_backward(cfg, w, cache, dh):
    t_steps, n = cfg.time_steps, cfg.hidden
    b = dh.shape[0]
    u_zr_t = np.ascontiguousarray(w.w_recurrent[:, : 2 * n].T)
    u_h_t = np.ascontiguousarray(w.w_recurrent[:, 2 * n :].T)
    zr_all, ht_all, h_all = cache["zr"], cache["ht"], cache["h"]
    d_zr = _ws("gru_dzr", (t_steps, b, 2 * n))
    d_ah = _ws("gru_dah", (t_steps, b, n))
    s1 = _ws("gru_bs1", (b, n))
    s2 = _ws("gru_bs2", (b, n))
    for t in range(t_steps - 1, -1, -1):
        zr = zr_all[t]
        z, r = zr[:, :n], zr[:, n:]
        h_prev, h_tilde = h_all[t], ht_all[t]
        da_z, da_r = d_zr[t, :, :n], d_zr[t, :, n:]
        # d update gate: dh * (h_prev - h_tilde) * hs'
        np.subtract(h_prev, h_tilde, out=s1)
        s1 *= dh
        np.multiply(s1, _hs_grad(z), out=da_z)
        # d candidate preactivation: dh * (1 - z) * (1 - h_tilde^2)
        da_h = d_ah[t]
        np.subtract(1.0, z, out=s1)
        s1 *= dh
        np.multiply(h_tilde, h_tilde, out=s2)
        np.subtract(1.0, s2, out=s2)
        s2 *= s1
        da_h[:] = s2
        # d(r * h_prev), then d reset gate
        np.dot(da_h, u_h_t, out=s2)
        np.multiply(s2, h_prev, out=da_r)
        da_r *= _hs_grad(r)
        # carry to previous step: dh*z + d_rh*r + [da_z, da_r] @ U_zr^T
        np.dot(d_zr[t], u_zr_t, out=s1)
        dh *= z
        s2 *= r
        dh += s2
        dh += s1
    d_zr_flat = d_zr.reshape(t_steps * b, 2 * n)
    d_ah_flat = d_ah.reshape(t_steps * b, n)
    h_prev_flat = h_all[:t_steps].reshape(t_steps * b, n)
    rh = _ws("gru_rh", (t_steps, b, n))
    np.multiply(zr_all[:, :, n:], h_all[:t_steps], out=rh)
    rh_flat = rh.reshape(t_steps * b, n)
    d_w_rec = np.concatenate(
        [h_prev_flat.T @ d_zr_flat, rh_flat.T @ d_ah_flat], axis=1
    )
    x_flat = cache["x_tm"].reshape(t_steps * b, -1)
    d_w_in = np.concatenate([x_flat.T @ d_zr_flat, x_flat.T @ d_ah_flat], axis=1)
    d_b = np.concatenate([d_zr_flat.sum(axis=0), d_ah_flat.sum(axis=0)])
    return d_w_in, d_w_rec, d_b


def _lstm_backward(cfg, w, cache, dh):
    t_steps, n = cfg.time_steps, cfg.hidden
    b = dh.shape[0]
    u_t = np.ascontiguousarray(w.w_recurrent.T)
    g_all, c_all, h_all, tc_all = cache["g"], cache["c"], cache["h"], cache["tc"]
    d_g = _ws("lstm_dg", (t_steps, b, 4 * n))
    dc = _ws("lstm_dc", (b, n))
    dc[:] = 0.0
    s1 = _ws("lstm_bs1", (b, n))
    for t in range(t_steps - 1, -1, -1):
        gates = g_all[t]
        i, f = gates[:, :n], gates[:, n : 2 * n]
        c_tilde, o = gates[:, 2 * n : 3 * n], gates[:, 3 * n :]
        da_i, da_f = d_g[t, :, :n], d_g[t, :, n : 2 * n]
        da_c, da_o = d_g[t, :, 2 * n : 3 * n], d_g[t, :, 3 * n :]
        tc = tc_all[t]
        # output gate, then accumulate into the cell-state gradient
        np.multiply(dh, tc, out=s1)
        np.multiply(s1, _hs_grad(o), out=da_o)
        dh *= o
        np.multiply(tc, tc, out=s1)
        np.subtract(1.0, s1, out=s1)
        dh *= s1
        dc += dh
        np.multiply(dc, c_all[t], out=s1)
        np.multiply(s1, _hs_grad(f), out=da_f)
        np.multiply(dc, c_tilde, out=s1)
        np.multiply(s1, _hs_grad(i), out=da_i)
        np.multiply(c_tilde, c_tilde, out=s1)
        np.subtract(1.0, s1, out=s1)
        s1 *= dc
        s1 *= i
        da_c[:] = s1
        dh = np.dot(d_g[t], u_t)
        dc *= f
    d_g_flat = d_g.reshape(t_steps * b, 4 * n)
    x_flat = cache["x_tm"].reshape(t_steps * b, -1)
    d_w_in = x_flat.T @ d_g_flat
    d_w_rec = h_all[:t_steps].reshape(t_steps * b, n).T @ d_g_flat
    return d_w_in, d_w_rec, d_g_flat.sum(axis=0)


def loss_and_grads(
    cfg: ModelConfig, w: Weights, x: np.ndarray, y: np.ndarray
) -> tuple[float, np.ndarray, Weights]:
    """Mean batch loss, probabilities, and exact BPTT gradients.

    Gradients are of the mean sparse cross-entropy over the batch with
    respect to every weight, unrolled over all time steps. The hard-sigmoid
    derivative is 0.2 strictly inside its linear region and 0 on the flats.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if x.ndim != 2 or x.shape[0] == 0:
        raise ValueError("batch must be a non-empty (batch, 480) array")
    b = x.shape[0]
    probs, h_final, cache = _forward_full(cfg, w, x, keep=True)
    loss = loss_sparse_ce(probs, y)

    d_logits = probs.copy()
    d_logits[np.arange(b), y] -= 1.0
    d_logits /= b
    d_w_dense = h_final.T @ d_logits
    d_b_dense = d_logits.sum(axis=0)
    dh = d_logits @ w.w_dense.T

    backward_fn = _gru_backward if cfg.cell is CellType.GRU else _lstm_backward
    d_w_in, d_w_rec, d_b = backward_fn(cfg, w, cache, dh)
    grads = Weights(
        w_input=d_w_in,
        w_recurrent=d_w_rec,
        b_gates=d_b,
        w_dense=d_w_dense,
        b_dense=d_b_dense,
    )
    return loss, probs, grads


def backward(cfg: ModelConfig, w: Weights, x: np.ndarray, y: np.ndarray) -> Weights:
    """Gradients of the mean batch loss; see :func:`loss_and_grads`."""
    _, _, grads = loss_and_grads(cfg, w, x, y)
    return grads


@dataclass
class OptimizerState:
    """RMSProp per-parameter squared-gradient accumulators."""

    acc: Weights
    lr: float = 0.001
    rho: float = 0.9
    eps: float = 1e-7

    @classmethod
    def for_weights(
        cls, w: Weights, lr: float = 0.001, rho: float = 0.9, eps: float = 1e-7
    ) -> "OptimizerState":
        zeros = Weights(*(np.zeros_like(t) for _, t in w.tensors()))
        return cls(acc=zeros, lr=lr, rho=rho, eps=eps)


def rmsprop_update(
    w: Weights, grads: Weights, st: OptimizerState
) -> tuple[Weights, OptimizerState]:
    """One RMSProp step, updating weights and accumulators in place:
    acc <- rho*acc + (1-rho)*g^2; theta <- theta - lr*g/(sqrt(acc) + eps)."""
    for (_, theta), (_, g), (_, acc) in zip(w.tensors(), grads.tensors(), st.acc.tensors()):
        acc *= st.rho
        acc += (1.0 - st.rho) * g * g
        theta -= st.lr * g / (np.sqrt(acc) + st.eps)
    return w, st


def param_count(cfg: ModelConfig) -> int:
    g, n, i = cfg.cell.gates, cfg.hidden, cfg.input_channels
    return g * (i * n + n * n + n) + n * cfg.classes + cfg.classes


def serialized_bytes(cfg: ModelConfig) -> int:
    """Size of the raw float32 tensor payload in a saved model file."""
    return 4 * param_count(cfg)


def save_model(
    path: str | Path, cfg: ModelConfig, w: Weights, standardizer: Standardizer
) -> None:
    """Write magic, a length-prefixed JSON header, then float32 tensor data."""
    tensors = [(name, t.astype("<f4")) for name, t in w.tensors()]
    manifest = []
    offset = 0
    for name, t in tensors:
        manifest.append({"name": name, "shape": list(t.shape), "offset": offset})
        offset += t.nbytes
    header = {
        "cell": cfg.cell.value,
        "hidden": cfg.hidden,
        "input_channels": cfg.input_channels,
        "time_steps": cfg.time_steps,
        "classes": cfg.classes,
        "standardizer": standardizer.to_dict(),
        "tensors": manifest,
    }
    header_bytes = json.dumps(header).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(header_bytes)))
        fh.write(header_bytes)
        for _, t in tensors:
            fh.write(t.tobytes())


def load_model(path: str | Path) -> Model:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < len(MAGIC) + 4 or blob[: len(MAGIC)] != MAGIC:
        raise ModelFormatError(f"bad magic; not a {MAGIC.decode()} model file")
    (header_len,) = struct.unpack_from("<I", blob, len(MAGIC))
    header_start = len(MAGIC) + 4
    data_start = header_start + header_len
    if len(blob) < data_start:
        raise ModelFormatError("truncated header")
    try:
        header = json.loads(blob[header_start:data_start].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ModelFormatError(f"unreadable header: {exc}") from exc
    cfg = ModelConfig(
        cell=CellType(header["cell"]),
        hidden=int(header["hidden"]),
        input_channels=int(header["input_channels"]),
        time_steps=int(header["time_steps"]),
        classes=int(header["classes"]),
    )
    fields = {}
    for entry in header["tensors"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        start = data_start + entry["offset"]
        end = start + 4 * count
        if end > len(blob):
            raise ModelFormatError(f"truncated tensor data for {entry['name']}")
        arr = np.frombuffer(blob[start:end], dtype="<f4").reshape(shape)
        fields[entry["name"]] = arr.astype(np.float64)
    try:
        weights = Weights(**{name: fields[name] for name in _TENSOR_ORDER})
    except KeyError as exc:
        raise ModelFormatError(f"missing tensor {exc}") from exc
    standardizer = Standardizer.from_dict(header["standardizer"])
    return Model(config=cfg, weights=weights, standardizer=standardizer)
