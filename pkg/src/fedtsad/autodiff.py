"""Tape-based reverse-mode autodiff over float64 numpy arrays.

The primitive set is deliberately small: dense, 1-D valid convolution,
max-pooling, LSTM gates, elementwise arithmetic, and mean-squared error.
Every forward op records a node on an explicit :class:`Tape`; the reverse
sweep visits nodes in exact reverse execution order and accumulates
gradients additively at fan-out points. There is no broadcasting beyond
bias addition, which keeps every recorded node auditable.

Each worker owns its tape; nothing here holds shared mutable state.
"""

from __future__ import annotations

from typing import Callable, Mapping

import numpy as np

from .errors import ShapeError


class Tensor:
    """A float64 array participating in taped computation.

    Tensors are value holders only; graph structure lives on the Tape.
    """

    __slots__ = ("data",)

    def __init__(self, data):
        self.data = np.asarray(data, dtype=np.float64)
        if not np.all(np.isfinite(self.data)):
            raise ValueError("tensor values must be finite")

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    def __repr__(self):
        return f"Tensor(shape={self.data.shape})"


# One recorded primitive: the output tensor plus, per input, a
# vector-Jacobian product mapping the output gradient to that input.
_Node = tuple[Tensor, tuple[tuple[Tensor, Callable[[np.ndarray], np.ndarray]], ...]]


class Tape:
    """Ordered record of primitive operations for one forward pass."""

    __slots__ = ("_nodes",)

    def __init__(self):
        self._nodes: list[_Node] = []

    def record(self, out: Tensor, pulls) -> Tensor:
        self._nodes.append((out, tuple(pulls)))
        return out

    def __len__(self):
        return len(self._nodes)


def backward(tape: Tape, loss: Tensor) -> dict[Tensor, np.ndarray]:
    """Reverse sweep from a scalar loss node.

    Returns a mapping from every tensor reached by the sweep to its
    gradient. Tensors the loss does not depend on are absent; callers
    should treat a missing entry as an exact zero.
    """
    if loss.data.shape != ():
        raise ShapeError(f"loss must be scalar, got shape {loss.data.shape}")
    grads: dict[Tensor, np.ndarray] = {loss: np.ones((), dtype=np.float64)}
    for out, pulls in reversed(tape._nodes):
        g = grads.get(out)
        if g is None:
            continue
        for parent, pull in pulls:
            contrib = pull(g)
            acc = grads.get(parent)
            if acc is None:
                grads[parent] = contrib
            else:
                grads[parent] = acc + contrib
    return grads


def _require(cond: bool, msg: str):
    if not cond:
        raise ShapeError(msg)


# ---------------------------------------------------------------------------
# elementwise / structural primitives


def add(tape: Tape, a: Tensor, b: Tensor) -> Tensor:
    _require(a.shape == b.shape, f"add: {a.shape} vs {b.shape}")
    out = Tensor(a.data + b.data)
    return tape.record(out, [(a, lambda g: g), (b, lambda g: g)])


def sub(tape: Tape, a: Tensor, b: Tensor) -> Tensor:
    _require(a.shape == b.shape, f"sub: {a.shape} vs {b.shape}")
    out = Tensor(a.data - b.data)
    return tape.record(out, [(a, lambda g: g), (b, lambda g: -g)])


def mul(tape: Tape, a: Tensor, b: Tensor) -> Tensor:
    _require(a.shape == b.shape, f"mul: {a.shape} vs {b.shape}")
    out = Tensor(a.data * b.data)
    ad, bd = a.data, b.data
    return tape.record(out, [(a, lambda g: g * bd), (b, lambda g: g * ad)])


def scale(tape: Tape, a: Tensor, c: float) -> Tensor:
    c = float(c)
    out = Tensor(a.data * c)
    return tape.record(out, [(a, lambda g: g * c)])


def reshape(tape: Tape, a: Tensor, shape: tuple[int, ...]) -> Tensor:
    new = np.reshape(a.data, shape)
    old_shape = a.data.shape
    out = Tensor(new)
    return tape.record(out, [(a, lambda g: np.reshape(g, old_shape))])


def matmul(tape: Tape, a: Tensor, b: Tensor) -> Tensor:
    _require(a.data.ndim == 2 and b.data.ndim == 2, "matmul expects 2-D operands")
    _require(a.shape[1] == b.shape[0], f"matmul: {a.shape} vs {b.shape}")
    out = Tensor(a.data @ b.data)
    ad, bd = a.data, b.data
    return tape.record(out, [(a, lambda g: g @ bd.T), (b, lambda g: ad.T @ g)])


# ---------------------------------------------------------------------------
# activations


def relu(tape: Tape, a: Tensor) -> Tensor:
    mask = a.data > 0.0
    out = Tensor(np.where(mask, a.data, 0.0))
    return tape.record(out, [(a, lambda g: g * mask)])


def sigmoid(tape: Tape, a: Tensor) -> Tensor:
    s = 1.0 / (1.0 + np.exp(-a.data))
    out = Tensor(s)
    return tape.record(out, [(a, lambda g: g * s * (1.0 - s))])


def tanh(tape: Tape, a: Tensor) -> Tensor:
    t = np.tanh(a.data)
    out = Tensor(t)
    return tape.record(out, [(a, lambda g: g * (1.0 - t * t))])


# ---------------------------------------------------------------------------
# layers


def dense(tape: Tape, x: Tensor, w: Tensor, b: Tensor) -> Tensor:
    """Affine map: out[i, j] = sum_k x[i, k] w[k, j] + b[j]."""
    _require(x.data.ndim == 2 and w.data.ndim == 2 and b.data.ndim == 1,
             "dense expects x (b,n), w (n,p), b (p,)")
    _require(x.shape[1] == w.shape[0] and w.shape[1] == b.shape[0],
             f"dense: {x.shape} @ {w.shape} + {b.shape}")
    out = Tensor(x.data @ w.data + b.data)
    xd, wd = x.data, w.data
    return tape.record(out, [
        (x, lambda g: g @ wd.T),
        (w, lambda g: xd.T @ g),
        (b, lambda g: g.sum(axis=0)),
    ])


def conv1d(tape: Tape, x: Tensor, kernels: Tensor, bias: Tensor) -> Tensor:
    """Valid (unpadded) 1-D convolution, stride 1.

    x: (b, m, d), kernels: (c, k, d), bias: (c,) -> (b, m-k+1, c) with
    out[i, t, c] = sum_{j<k, v<d} x[i, t+j, v] * kernels[c, j, v] + bias[c].
    """
    _require(x.data.ndim == 3 and kernels.data.ndim == 3 and bias.data.ndim == 1,
             "conv1d expects x (b,m,d), kernels (c,k,d), bias (c,)")
    b_, m, d = x.shape
    c, k, dk = kernels.shape
    _require(dk == d, f"conv1d: input has {d} channels, kernels expect {dk}")
    _require(bias.shape[0] == c, "conv1d: bias length must equal kernel count")
    if k > m:
        raise ShapeError(f"conv1d: kernel size {k} exceeds sequence length {m}")
    # windows: (b, m-k+1, d, k) with the tap index last
    win = np.lib.stride_tricks.sliding_window_view(x.data, k, axis=1)
    out = Tensor(np.einsum("btvj,cjv->btc", win, kernels.data) + bias.data)
    xd, kd = x.data, kernels.data
    L = m - k + 1

    def pull_x(g):
        dx = np.zeros_like(xd)
        for j in range(k):
            dx[:, j:j + L, :] += np.einsum("btc,cv->btv", g, kd[:, j, :])
        return dx

    return tape.record(out, [
        (x, pull_x),
        (kernels, lambda g: np.einsum("btc,btvj->cjv", g, win)),
        (bias, lambda g: g.sum(axis=(0, 1))),
    ])


def maxpool1d(tape: Tape, x: Tensor, width: int = 2) -> Tensor:
    """Non-overlapping max pool along the time axis; trailing remainder dropped."""
    _require(x.data.ndim == 3, "maxpool1d expects (b, m, c)")
    b_, m, c = x.shape
    n = m // width
    if n < 1:
        raise ShapeError(f"maxpool1d: length {m} shorter than pool width {width}")
    blocks = x.data[:, :n * width, :].reshape(b_, n, width, c)
    arg = blocks.argmax(axis=2)
    out = Tensor(np.take_along_axis(blocks, arg[:, :, None, :], axis=2)[:, :, 0, :])

    def pull(g):
        dx = np.zeros_like(x.data)
        db = dx[:, :n * width, :].reshape(b_, n, width, c)
        np.put_along_axis(db, arg[:, :, None, :], g[:, :, None, :], axis=2)
        return dx

    return tape.record(out, [(x, pull)])


def lstm_step(tape: Tape, x: Tensor, h: Tensor, c: Tensor,
              cell: Mapping[str, tuple[Tensor, Tensor, Tensor]]) -> tuple[Tensor, Tensor]:
    """One LSTM cell step from primitive ops.

    ``cell`` maps each gate name in ('i', 'f', 'g', 'o') to its
    (input weight (d,z), recurrent weight (z,z), bias (z,)) triple.
    Standard cell: i, f, o sigmoid gates, g tanh candidate,
    c' = f*c + i*g, h' = o*tanh(c').
    """
    for name in ("i", "f", "g", "o"):
        _require(name in cell, f"lstm_step: missing gate group '{name}'")

    def gate(name):
        wx, wh, b = cell[name]
        return add(tape, dense(tape, x, wx, b), matmul(tape, h, wh))

    i = sigmoid(tape, gate("i"))
    f = sigmoid(tape, gate("f"))
    g = tanh(tape, gate("g"))
    o = sigmoid(tape, gate("o"))
    c_new = add(tape, mul(tape, f, c), mul(tape, i, g))
    h_new = mul(tape, o, tanh(tape, c_new))
    return h_new, c_new


def total(tape: Tape, a: Tensor) -> Tensor:
    """Sum of all elements, as a scalar node."""
    shape = a.data.shape
    out = Tensor(np.float64(a.data.sum()))
    return tape.record(out, [(a, lambda g: np.broadcast_to(g, shape).copy())])


def mse(tape: Tape, pred: Tensor, target: Tensor) -> Tensor:
    """Mean over all elements of the squared difference."""
    _require(pred.shape == target.shape, f"mse: {pred.shape} vs {target.shape}")
    diff = pred.data - target.data
    n = diff.size
    out = Tensor(np.float64((diff * diff).sum() / n))
    return tape.record(out, [
        (pred, lambda g: g * (2.0 / n) * diff),
        (target, lambda g: g * (-2.0 / n) * diff),
    ])


# ---------------------------------------------------------------------------
# finite-difference oracle


def finite_difference_gradient(f: Callable[..., float], arrays: list[np.ndarray],
                               h: float = 1e-6) -> list[np.ndarray]:
    """Central finite differences of a scalar function of several arrays.

    Used as the independent oracle for gradient checks; it only ever
    invokes the forward computation.
    """
    grads = []
    for idx, a in enumerate(arrays):
        g = np.zeros_like(a, dtype=np.float64)
        flat = a.reshape(-1)
        gflat = g.reshape(-1)
        for j in range(flat.size):
            orig = flat[j]
            flat[j] = orig + h
            fp = f(*arrays)
            flat[j] = orig - h
            fm = f(*arrays)
            flat[j] = orig
            gflat[j] = (fp - fm) / (2.0 * h)
        grads.append(g)
    return grads


def gradient_mismatch(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """Scale-aware relative error between two gradient arrays."""
    denom = max(float(np.max(np.abs(numeric))), 1e-6)
    return float(np.max(np.abs(analytic - numeric))) / denom
