"""Dense 2-D arrays with reverse-mode differentiation.

Every value is a 64-bit-float matrix node; ops record their inputs and a
backward closure, and backward() walks the graph in reverse topological
order.  No broadcasting beyond add_bias_row: shape mismatches raise.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np


class ShapeMismatch(Exception):
    pass


class NotScalar(Exception):
    pass


def _check(cond: bool, msg: str):
    if not cond:
        raise ShapeMismatch(msg)


class Array2D:
    __slots__ = ("data", "grad", "_parents", "_backward")

    def __init__(self, data, parents: tuple = (), backward: Callable | None = None):
        arr = np.asarray(data, dtype=np.float64)
        if arr.ndim != 2:
            raise ShapeMismatch(f"Array2D needs a 2-D array, got shape {arr.shape}")
        self.data = arr
        self.grad: np.ndarray | None = None
        self._parents = parents
        self._backward = backward

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    def item(self) -> float:
        if self.shape != (1, 1):
            raise NotScalar(f"item() needs a 1x1 array, got {self.shape}")
        return float(self.data[0, 0])

    def __repr__(self):
        return f"Array2D(shape={self.shape})"


def constant(data) -> Array2D:
    return Array2D(data)


def zeros(rows: int, cols: int) -> Array2D:
    return Array2D(np.zeros((rows, cols)))


@dataclass
class Param:
    """A trainable leaf; grad is (re)populated by each backward pass."""

    value: Array2D
    name: str = ""

    @property
    def grad(self) -> np.ndarray:
        if self.value.grad is None:
            return np.zeros_like(self.value.data)
        return self.value.grad

    @property
    def shape(self) -> tuple[int, int]:
        return self.value.shape


def _topo(root: Array2D) -> list[Array2D]:
    order: list[Array2D] = []
    seen: set[int] = set()
    stack: list[tuple[Array2D, bool]] = [(root, False)]
    while stack:
        node, processed = stack.pop()
        if processed:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            stack.append((p, False))
    return order


def backward(loss: Array2D) -> None:
    """Populate grads of everything reachable from a 1x1 loss node."""
    if loss.shape != (1, 1):
        raise NotScalar(f"loss must be 1x1, got {loss.shape}")
    order = _topo(loss)
    for node in order:
        node.grad = np.zeros_like(node.data)
    loss.grad = np.ones((1, 1))
    for node in reversed(order):
        if node._backward is not None:
            node._backward(node.grad)


def _accum(node: Array2D, g: np.ndarray):
    if node.grad is None:
        node.grad = np.zeros_like(node.data)
    node.grad += g


# --- arithmetic -----------------------------------------------------------

def matmul(a: Array2D, b: Array2D) -> Array2D:
    _check(a.cols == b.rows, f"matmul: {a.shape} x {b.shape}")
    out = Array2D(a.data @ b.data, (a, b))
    out._backward = lambda g: (_accum(a, g @ b.data.T), _accum(b, a.data.T @ g))
    return out


def add(a: Array2D, b: Array2D) -> Array2D:
    _check(a.shape == b.shape, f"add: {a.shape} vs {b.shape}")
    out = Array2D(a.data + b.data, (a, b))
    out._backward = lambda g: (_accum(a, g), _accum(b, g))
    return out


def sub(a: Array2D, b: Array2D) -> Array2D:
    return add(a, scale(b, -1.0))


def add_bias_row(a: Array2D, bias: Array2D) -> Array2D:
    """Add a 1xC bias row to every row of a RxC matrix; the only
    broadcasting this engine allows."""
    _check(bias.rows == 1 and bias.cols == a.cols,
           f"add_bias_row: {a.shape} vs bias {bias.shape}")
    out = Array2D(a.data + bias.data, (a, bias))
    out._backward = lambda g: (_accum(a, g), _accum(bias, g.sum(axis=0, keepdims=True)))
    return out


def mul(a: Array2D, b: Array2D) -> Array2D:
    _check(a.shape == b.shape, f"mul: {a.shape} vs {b.shape}")
    out = Array2D(a.data * b.data, (a, b))
    out._backward = lambda g: (_accum(a, g * b.data), _accum(b, g * a.data))
    return out


def div(a: Array2D, b: Array2D) -> Array2D:
    _check(a.shape == b.shape, f"div: {a.shape} vs {b.shape}")
    out = Array2D(a.data / b.data, (a, b))
    out._backward = lambda g: (
        _accum(a, g / b.data),
        _accum(b, -g * a.data / (b.data * b.data)),
    )
    return out


def scale_rows(a: Array2D, s: Array2D) -> Array2D:
    """Multiply each row of a RxC matrix by the matching entry of an Rx1
    column."""
    _check(s.cols == 1 and s.rows == a.rows, f"scale_rows: {a.shape} vs {s.shape}")
    out = Array2D(a.data * s.data, (a, s))
    out._backward = lambda g: (
        _accum(a, g * s.data),
        _accum(s, (g * a.data).sum(axis=1, keepdims=True)),
    )
    return out


def scale(a: Array2D, s: float) -> Array2D:
    out = Array2D(a.data * s, (a,))
    out._backward = lambda g: _accum(a, g * s)
    return out


def transpose(a: Array2D) -> Array2D:
    out = Array2D(a.data.T, (a,))
    out._backward = lambda g: _accum(a, g.T)
    return out


def maximum(a: Array2D, b: Array2D) -> Array2D:
    _check(a.shape == b.shape, f"maximum: {a.shape} vs {b.shape}")
    mask = a.data >= b.data
    out = Array2D(np.where(mask, a.data, b.data), (a, b))
    out._backward = lambda g: (_accum(a, g * mask), _accum(b, g * ~mask))
    return out


def clip(a: Array2D, lo: float, hi: float) -> Array2D:
    inside = (a.data >= lo) & (a.data <= hi)
    out = Array2D(np.clip(a.data, lo, hi), (a,))
    out._backward = lambda g: _accum(a, g * inside)
    return out


# --- structure ------------------------------------------------------------

def concat_cols(parts: Sequence[Array2D]) -> Array2D:
    parts = list(parts)
    _check(len(parts) >= 1, "concat_cols: empty input")
    rows = parts[0].rows
    for p in parts:
        _check(p.rows == rows, f"concat_cols: {p.shape} vs {rows} rows")
    out = Array2D(np.concatenate([p.data for p in parts], axis=1), tuple(parts))

    def back(g):
        start = 0
        for p in parts:
            _accum(p, g[:, start : start + p.cols])
            start += p.cols

    out._backward = back
    return out


def concat_rows(parts: Sequence[Array2D]) -> Array2D:
    parts = list(parts)
    _check(len(parts) >= 1, "concat_rows: empty input")
    cols = parts[0].cols
    for p in parts:
        _check(p.cols == cols, f"concat_rows: {p.shape} vs {cols} cols")
    out = Array2D(np.concatenate([p.data for p in parts], axis=0), tuple(parts))

    def back(g):
        start = 0
        for p in parts:
            _accum(p, g[start : start + p.rows, :])
            start += p.rows

    out._backward = back
    return out


def slice_cols(a: Array2D, start: int, stop: int) -> Array2D:
    _check(0 <= start < stop <= a.cols, f"slice_cols: [{start}:{stop}] of {a.shape}")
    out = Array2D(a.data[:, start:stop], (a,))

    def back(g):
        full = np.zeros_like(a.data)
        full[:, start:stop] = g
        _accum(a, full)

    out._backward = back
    return out


def slice_rows(a: Array2D, start: int, stop: int) -> Array2D:
    _check(0 <= start < stop <= a.rows, f"slice_rows: [{start}:{stop}] of {a.shape}")
    out = Array2D(a.data[start:stop, :], (a,))

    def back(g):
        full = np.zeros_like(a.data)
        full[start:stop, :] = g
        _accum(a, full)

    out._backward = back
    return out


def take_rows(table: Array2D, indices: Sequence[int]) -> Array2D:
    idx = np.asarray(indices, dtype=np.int64)
    _check(idx.ndim == 1 and len(idx) >= 1, "take_rows: need a 1-D nonempty index list")
    _check(bool((idx >= 0).all() and (idx < table.rows).all()),
           f"take_rows: index out of range for {table.shape}")
    out = Array2D(table.data[idx], (table,))

    def back(g):
        full = np.zeros_like(table.data)
        np.add.at(full, idx, g)
        _accum(table, full)

    out._backward = back
    return out


# --- nonlinearities -------------------------------------------------------

def relu(a: Array2D) -> Array2D:
    mask = a.data > 0
    out = Array2D(a.data * mask, (a,))
    out._backward = lambda g: _accum(a, g * mask)
    return out


def leaky_relu(a: Array2D, slope: float = 0.2) -> Array2D:
    mask = a.data > 0
    out = Array2D(np.where(mask, a.data, slope * a.data), (a,))
    out._backward = lambda g: _accum(a, g * np.where(mask, 1.0, slope))
    return out


def sigmoid(a: Array2D) -> Array2D:
    s = 1.0 / (1.0 + np.exp(-a.data))
    out = Array2D(s, (a,))
    out._backward = lambda g: _accum(a, g * s * (1.0 - s))
    return out


def exp(a: Array2D) -> Array2D:
    e = np.exp(a.data)
    out = Array2D(e, (a,))
    out._backward = lambda g: _accum(a, g * e)
    return out


def log(a: Array2D) -> Array2D:
    out = Array2D(np.log(a.data), (a,))
    out._backward = lambda g: _accum(a, g / a.data)
    return out


def tanh(a: Array2D) -> Array2D:
    t = np.tanh(a.data)
    out = Array2D(t, (a,))
    out._backward = lambda g: _accum(a, g * (1.0 - t * t))
    return out


def row_softmax(a: Array2D) -> Array2D:
    """Shift-invariant softmax along each row."""
    shifted = a.data - a.data.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    s = e / e.sum(axis=1, keepdims=True)
    out = Array2D(s, (a,))

    def back(g):
        dot = (g * s).sum(axis=1, keepdims=True)
        _accum(a, s * (g - dot))

    out._backward = back
    return out


# --- reductions -----------------------------------------------------------

def sum_all(a: Array2D) -> Array2D:
    out = Array2D([[a.data.sum()]], (a,))
    out._backward = lambda g: _accum(a, np.full_like(a.data, g[0, 0]))
    return out


def row_mean(a: Array2D) -> Array2D:
    out = Array2D(a.data.mean(axis=1, keepdims=True), (a,))
    out._backward = lambda g: _accum(a, np.repeat(g, a.cols, axis=1) / a.cols)
    return out


def row_max(a: Array2D) -> Array2D:
    idx = a.data.argmax(axis=1)
    out = Array2D(a.data.max(axis=1, keepdims=True), (a,))

    def back(g):
        full = np.zeros_like(a.data)
        full[np.arange(a.rows), idx] = g[:, 0]
        _accum(a, full)

    out._backward = back
    return out


def col_mean(a: Array2D) -> Array2D:
    out = Array2D(a.data.mean(axis=0, keepdims=True), (a,))
    out._backward = lambda g: _accum(a, np.repeat(g, a.rows, axis=0) / a.rows)
    return out


def col_max(a: Array2D) -> Array2D:
    idx = a.data.argmax(axis=0)
    out = Array2D(a.data.max(axis=0, keepdims=True), (a,))

    def back(g):
        full = np.zeros_like(a.data)
        full[idx, np.arange(a.cols)] = g[0, :]
        _accum(a, full)

    out._backward = back
    return out


def layer_norm(a: Array2D, eps: float = 1e-5) -> Array2D:
    """Normalize each row to zero mean / unit variance."""
    mu = a.data.mean(axis=1, keepdims=True)
    var = a.data.var(axis=1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = (a.data - mu) * inv
    out = Array2D(xhat, (a,))

    def back(g):
        gm = g.mean(axis=1, keepdims=True)
        gxm = (g * xhat).mean(axis=1, keepdims=True)
        _accum(a, inv * (g - gm - xhat * gxm))

    out._backward = back
    return out


# --- segment ops (for graph attention) ------------------------------------

def segment_softmax(scores: Array2D, segments: Sequence[int], num_segments: int) -> Array2D:
    """Softmax of an Ex1 score column within groups given by segments."""
    seg = np.asarray(segments, dtype=np.int64)
    _check(scores.cols == 1 and len(seg) == scores.rows,
           f"segment_softmax: scores {scores.shape} vs {len(seg)} segments")
    x = scores.data[:, 0]
    seg_max = np.full(num_segments, -np.inf)
    np.maximum.at(seg_max, seg, x)
    e = np.exp(x - seg_max[seg])
    seg_sum = np.zeros(num_segments)
    np.add.at(seg_sum, seg, e)
    s = e / seg_sum[seg]
    out = Array2D(s[:, None], (scores,))

    def back(g):
        gv = g[:, 0]
        dot = np.zeros(num_segments)
        np.add.at(dot, seg, gv * s)
        _accum(scores, (s * (gv - dot[seg]))[:, None])

    out._backward = back
    return out


def segment_sum(values: Array2D, segments: Sequence[int], num_segments: int) -> Array2D:
    """Sum ExD rows into their segments, producing num_segments x D."""
    seg = np.asarray(segments, dtype=np.int64)
    _check(len(seg) == values.rows,
           f"segment_sum: values {values.shape} vs {len(seg)} segments")
    acc = np.zeros((num_segments, values.cols))
    np.add.at(acc, seg, values.data)
    out = Array2D(acc, (values,))
    out._backward = lambda g: _accum(values, g[seg])
    return out


# --- gradient checking ----------------------------------------------------

@dataclass
class GradCheckEntry:
    param: str
    coord: tuple[int, int]
    analytic: float
    numeric: float
    rel_error: float


@dataclass
class GradCheckReport:
    entries: list[GradCheckEntry] = field(default_factory=list)
    tol: float = 1e-4

    @property
    def worst(self) -> GradCheckEntry | None:
        return max(self.entries, key=lambda e: e.rel_error, default=None)

    @property
    def passed(self) -> bool:
        return all(e.rel_error <= self.tol for e in self.entries)


def grad_check(
    builder: Callable[[], Array2D],
    params: Sequence[Param],
    eps: float = 1e-5,
    tol: float = 1e-4,
    max_coords: int = 6,
    rng: np.random.Generator | None = None,
) -> GradCheckReport:
    """Compare analytic grads with central finite differences on sampled
    coordinates.  Callers must keep inputs away from kinks (relu at 0,
    max ties) for the comparison to be meaningful."""
    if not 1e-7 <= eps <= 1e-3:
        raise ValueError("eps must lie in [1e-7, 1e-3]")
    rng = rng or np.random.default_rng(0)
    report = GradCheckReport(tol=tol)

    loss = builder()
    backward(loss)
    grads = [p.grad.copy() for p in params]

    for p, g in zip(params, grads):
        r, c = p.shape
        total = r * c
        flat = rng.choice(total, size=min(max_coords, total), replace=False)
        for k in flat:
            i, j = divmod(int(k), c)
            orig = p.value.data[i, j]
            p.value.data[i, j] = orig + eps
            f_plus = builder().item()
            p.value.data[i, j] = orig - eps
            f_minus = builder().item()
            p.value.data[i, j] = orig
            numeric = (f_plus - f_minus) / (2 * eps)
            analytic = g[i, j]
            rel = abs(analytic - numeric) / max(1.0, abs(analytic))
            report.entries.append(GradCheckEntry(p.name, (i, j), analytic, numeric, rel))
    return report
