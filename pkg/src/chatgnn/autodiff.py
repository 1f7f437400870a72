"""Minimal reverse-mode automatic differentiation on 2-D arrays.

Define-by-run: every operation computes its result eagerly with numpy
and, when a Tape is active and an input requires gradients, records a
backward rule. Tape.backward replays the rules in exact reverse
recording order, which is a valid topological order by construction.

Gradients accumulate into leaf tensors across backward calls until
zero_grad is called. Intermediate gradients are transient and reset at
the start of every replay. There is no higher-order differentiation:
backward rules work on raw numpy arrays and record nothing.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import ChatGnnError, GraphIndexError, ShapeError


class UsageError(ChatGnnError):
    """The autodiff API was called outside its contract."""


class Tensor:
    """A 2-D array with optional gradient storage.

    data is always a C-contiguous float array of shape (rows, cols).
    grad is either None or an array of the same shape and dtype.
    """

    __slots__ = ("data", "grad", "requires_grad", "_tape")

    def __init__(self, data, requires_grad: bool = False, dtype=None):
        arr = np.array(data, dtype=dtype if dtype is not None else np.float64, order="C")
        if arr.ndim != 2:
            raise ShapeError("Tensor", arr.shape, "(rows, cols)")
        if not np.isfinite(arr).all():
            raise ValueError("Tensor data must be finite")
        self.data = arr
        self.grad = None
        self.requires_grad = bool(requires_grad)
        self._tape = None

    @classmethod
    def _make(cls, arr: np.ndarray, requires_grad: bool) -> "Tensor":
        # Internal fast path: trusts arr to be a fresh 2-D float array.
        t = cls.__new__(cls)
        t.data = np.ascontiguousarray(arr)
        t.grad = None
        t.requires_grad = requires_grad
        t._tape = None
        return t

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
        if self.data.size != 1:
            raise ShapeError("item", self.shape, "(1, 1)")
        return float(self.data[0, 0])

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self) -> str:
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}{flag})"


# --- tape machinery -------------------------------------------------------

_TAPE_STACK: list = []


def _active_tape():
    return _TAPE_STACK[-1] if _TAPE_STACK else None


class Tape:
    """Ordered record of operations for one forward pass."""

    def __init__(self):
        self._nodes: list[tuple[Tensor, Callable[[np.ndarray], None]]] = []

    def __enter__(self) -> "Tape":
        _TAPE_STACK.append(self)
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        _TAPE_STACK.pop()

    def __len__(self) -> int:
        return len(self._nodes)

    def _record(self, out: Tensor, bwd: Callable[[np.ndarray], None]) -> None:
        out._tape = self
        self._nodes.append((out, bwd))

    def backward(self, loss: Tensor) -> None:
        """Seed d(loss)/d(loss) = 1 and replay in reverse recording order."""
        if loss._tape is not self:
            raise UsageError("loss was not produced on this tape")
        if loss.shape != (1, 1):
            raise ShapeError("backward", loss.shape, "(1, 1)")
        # Intermediate grads are transient; only leaves persist across calls.
        for out, _ in self._nodes:
            out.grad = None
        loss.grad = np.ones((1, 1), dtype=loss.data.dtype)
        for out, bwd in reversed(self._nodes):
            if out.grad is not None:
                bwd(out.grad)


class no_grad:
    """Context manager that disables recording for its body."""

    def __enter__(self):
        _TAPE_STACK.append(None)
        return self

    def __exit__(self, exc_type, exc, tb):
        _TAPE_STACK.pop()


def backward(loss: Tensor) -> None:
    """Run reverse-mode on the tape that produced loss."""
    if loss._tape is None:
        raise UsageError("loss was not produced under a recording tape")
    loss._tape.backward(loss)


def zero_grads(tensors: Sequence[Tensor]) -> None:
    for t in tensors:
        t.grad = None


def _accum(t: Tensor, delta: np.ndarray) -> None:
    if t.grad is None:
        t.grad = np.zeros_like(t.data)
    t.grad += delta


def _result(arr: np.ndarray, inputs: tuple[Tensor, ...], bwd_factory) -> Tensor:
    """Wrap arr; record a backward rule if recording is on and needed."""
    tape = _active_tape()
    requires = tape is not None and any(t.requires_grad for t in inputs)
    out = Tensor._make(arr, requires)
    if requires:
        tape._record(out, bwd_factory(out))
    return out


# --- operations -----------------------------------------------------------


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """(m, k) @ (k, n) -> (m, n)."""
    if a.cols != b.rows:
        raise ShapeError("matmul", a.shape, b.shape)

    def factory(out):
        def bwd(g):
            if a.requires_grad:
                _accum(a, g @ b.data.T)
            if b.requires_grad:
                _accum(b, a.data.T @ g)
        return bwd

    return _result(a.data @ b.data, (a, b), factory)


def linear(x: Tensor, w: Tensor) -> Tensor:
    """x @ w.T for a weight stored as (out_features, in_features)."""
    if x.cols != w.cols:
        raise ShapeError("linear", x.shape, w.shape)

    def factory(out):
        def bwd(g):
            if x.requires_grad:
                _accum(x, g @ w.data)
            if w.requires_grad:
                _accum(w, g.T @ x.data)
        return bwd

    return _result(x.data @ w.data.T, (x, w), factory)


def add(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise sum; b may be a (1, d) bias row broadcast over a's rows."""
    bias_row = b.shape == (1, a.cols) and a.rows != 1
    if not bias_row and a.shape != b.shape:
        raise ShapeError("add", a.shape, b.shape)

    def factory(out):
        def bwd(g):
            if a.requires_grad:
                _accum(a, g)
            if b.requires_grad:
                _accum(b, g.sum(axis=0, keepdims=True) if bias_row else g)
        return bwd

    return _result(a.data + b.data, (a, b), factory)


def hadamard(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise product of same-shape tensors."""
    if a.shape != b.shape:
        raise ShapeError("hadamard", a.shape, b.shape)

    def factory(out):
        def bwd(g):
            if a.requires_grad:
                _accum(a, g * b.data)
            if b.requires_grad:
                _accum(b, g * a.data)
        return bwd

    return _result(a.data * b.data, (a, b), factory)


def scale(a: Tensor, c: float) -> Tensor:
    """Multiply by a python scalar constant."""
    c = float(c)

    def factory(out):
        def bwd(g):
            if a.requires_grad:
                _accum(a, g * c)
        return bwd

    return _result(a.data * c, (a,), factory)


def scale_rows(a: Tensor, s: Tensor) -> Tensor:
    """Row-wise scaling: out[i, :] = a[i, :] * s[i, 0]."""
    if s.shape != (a.rows, 1):
        raise ShapeError("scale_rows", a.shape, s.shape)

    def factory(out):
        def bwd(g):
            if a.requires_grad:
                _accum(a, g * s.data)
            if s.requires_grad:
                _accum(s, (g * a.data).sum(axis=1, keepdims=True))
        return bwd

    return _result(a.data * s.data, (a, s), factory)


def tanh(a: Tensor) -> Tensor:
    y = np.tanh(a.data)

    def factory(out):
        def bwd(g):
            if a.requires_grad:
                _accum(a, g * (1.0 - out.data * out.data))
        return bwd

    return _result(y, (a,), factory)


def relu(a: Tensor) -> Tensor:
    """max(x, 0); the derivative at exactly 0 is taken as 0."""

    def factory(out):
        def bwd(g):
            if a.requires_grad:
                _accum(a, g * (a.data > 0))
        return bwd

    return _result(np.maximum(a.data, 0.0), (a,), factory)


def leaky_relu(a: Tensor, slope: float = 0.2) -> Tensor:
    slope = float(slope)
    pos = a.data > 0

    def factory(out):
        def bwd(g):
            if a.requires_grad:
                _accum(a, g * np.where(pos, 1.0, slope))
        return bwd

    return _result(np.where(pos, a.data, slope * a.data), (a,), factory)


def layer_norm(x: Tensor, gamma: Tensor, beta: Tensor, eps: float = 1e-5) -> Tensor:
    """Per-row normalization with biased variance, then affine gamma/beta."""
    if gamma.shape != (1, x.cols) or beta.shape != (1, x.cols):
        raise ShapeError("layer_norm", x.shape, gamma.shape, beta.shape)
    if not eps > 0:
        raise ValueError(f"layer_norm eps must be > 0, got {eps}")
    mu = x.data.mean(axis=1, keepdims=True)
    var = ((x.data - mu) ** 2).mean(axis=1, keepdims=True)
    inv_sigma = 1.0 / np.sqrt(var + eps)
    xhat = (x.data - mu) * inv_sigma

    def factory(out):
        def bwd(g):
            if gamma.requires_grad:
                _accum(gamma, (g * xhat).sum(axis=0, keepdims=True))
            if beta.requires_grad:
                _accum(beta, g.sum(axis=0, keepdims=True))
            if x.requires_grad:
                dxhat = g * gamma.data
                m1 = dxhat.mean(axis=1, keepdims=True)
                m2 = (dxhat * xhat).mean(axis=1, keepdims=True)
                _accum(x, (dxhat - m1 - xhat * m2) * inv_sigma)
        return bwd

    return _result(xhat * gamma.data + beta.data, (x, gamma, beta), factory)


def _check_indices(idx: np.ndarray, bound: int, op: str) -> np.ndarray:
    idx = np.asarray(idx)
    if idx.ndim != 1 or not np.issubdtype(idx.dtype, np.integer):
        raise ShapeError(op, idx.shape, "1-D integer index array")
    if idx.size and (idx.min() < 0 or idx.max() >= bound):
        raise GraphIndexError(f"{op}: index out of range [0, {bound})")
    return idx


def gather_rows(a: Tensor, idx) -> Tensor:
    """Select rows a[idx]; duplicate indices are allowed."""
    idx = _check_indices(idx, a.rows, "gather_rows")

    def factory(out):
        def bwd(g):
            if a.requires_grad:
                da = np.zeros_like(a.data)
                np.add.at(da, idx, g)
                _accum(a, da)
        return bwd

    return _result(a.data[idx], (a,), factory)


def scatter_add_rows(src: Tensor, idx, num_rows: int) -> Tensor:
    """Accumulate src rows into a (num_rows, d) zero tensor at positions idx."""
    idx = _check_indices(idx, num_rows, "scatter_add_rows")
    if idx.shape[0] != src.rows:
        raise ShapeError("scatter_add_rows", src.shape, idx.shape)
    acc = np.zeros((num_rows, src.cols), dtype=src.data.dtype)
    np.add.at(acc, idx, src.data)

    def factory(out):
        def bwd(g):
            if src.requires_grad:
                _accum(src, g[idx])
        return bwd

    return _result(acc, (src,), factory)


def segment_softmax(scores: Tensor, segments, num_segments: int) -> Tensor:
    """Softmax of a (n, 1) score column within groups sharing a segment id.

    Scores are shifted by their segment maximum before exponentiation,
    so arbitrarily large inputs stay stable.
    """
    if scores.cols != 1:
        raise ShapeError("segment_softmax", scores.shape, "(n, 1)")
    seg = _check_indices(segments, num_segments, "segment_softmax")
    if seg.shape[0] != scores.rows:
        raise ShapeError("segment_softmax", scores.shape, seg.shape)
    col = scores.data[:, 0]
    seg_max = np.full(num_segments, -np.inf, dtype=col.dtype)
    np.maximum.at(seg_max, seg, col)
    z = np.exp(col - seg_max[seg])
    denom = np.zeros(num_segments, dtype=col.dtype)
    np.add.at(denom, seg, z)
    alpha = (z / denom[seg])[:, None]

    def factory(out):
        def bwd(g):
            if scores.requires_grad:
                prod = out.data * g
                seg_dot = np.zeros(num_segments, dtype=col.dtype)
                np.add.at(seg_dot, seg, prod[:, 0])
                _accum(scores, prod - out.data * seg_dot[seg][:, None])
        return bwd

    return _result(alpha, (scores,), factory)


def softmax_cross_entropy(logits: Tensor, labels, mask) -> Tensor:
    """Mean cross-entropy of row-max-stabilized softmax over the masked rows.

    labels: integer class per row (only masked entries are read).
    mask: boolean array over rows, or an array of row indices.
    Returns a (1, 1) tensor.
    """
    labels = np.asarray(labels)
    mask = np.asarray(mask)
    rows = np.flatnonzero(mask) if mask.dtype == bool else _check_indices(
        mask, logits.rows, "softmax_cross_entropy")
    if rows.size == 0:
        raise ValueError("softmax_cross_entropy: empty mask")
    if labels.shape[0] != logits.rows:
        raise ShapeError("softmax_cross_entropy", logits.shape, labels.shape)
    y = labels[rows]
    if y.min() < 0 or y.max() >= logits.cols:
        raise ValueError(f"labels must lie in [0, {logits.cols})")
    z = logits.data[rows]
    z = z - z.max(axis=1, keepdims=True)
    lse = np.log(np.exp(z).sum(axis=1, keepdims=True))
    losses = lse[:, 0] - z[np.arange(rows.size), y]
    mean_loss = np.array([[losses.mean()]], dtype=logits.data.dtype)

    def factory(out):
        def bwd(g):
            if logits.requires_grad:
                p = np.exp(z - lse)
                p[np.arange(rows.size), y] -= 1.0
                dl = np.zeros_like(logits.data)
                dl[rows] = p * (g[0, 0] / rows.size)
                _accum(logits, dl)
        return bwd

    return _result(mean_loss, (logits,), factory)


def sum_all(a: Tensor) -> Tensor:
    """Sum of all entries as a (1, 1) tensor."""

    def factory(out):
        def bwd(g):
            if a.requires_grad:
                _accum(a, np.full_like(a.data, g[0, 0]))
        return bwd

    return _result(np.array([[a.data.sum()]], dtype=a.data.dtype), (a,), factory)


# --- gradient checking ----------------------------------------------------


@dataclass
class GradCheckResult:
    passed: bool
    max_rel_err: float
    tol: float


def _rel_err(analytic: np.ndarray, numeric: np.ndarray) -> float:
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), 1e-3)
    return float((np.abs(analytic - numeric) / denom).max())


def grad_check(f: Callable[[Tensor], Tensor], at: Tensor, tol: float,
               h: float = 1e-5) -> GradCheckResult:
    """Compare reverse-mode gradients of f at `at` against central differences.

    f must map `at` to a (1, 1) tensor and must not mutate its input.
    `at.data` is perturbed in place during probing and restored afterwards.
    Non-finite analytic or numeric values fail the check outright.
    """
    if not at.requires_grad:
        raise UsageError("grad_check target must have requires_grad=True")
    at.grad = None
    with Tape() as tape:
        out = f(at)
        if out.shape != (1, 1):
            raise ShapeError("grad_check", out.shape, "(1, 1)")
    tape.backward(out)
    analytic = np.zeros_like(at.data) if at.grad is None else at.grad.copy()

    numeric = np.zeros_like(at.data)
    flat = at.data.reshape(-1)
    num_flat = numeric.reshape(-1)
    with no_grad():
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            fp = f(at).item()
            flat[i] = orig - h
            fm = f(at).item()
            flat[i] = orig
            num_flat[i] = (fp - fm) / (2.0 * h)

    if not (np.isfinite(analytic).all() and np.isfinite(numeric).all()):
        return GradCheckResult(False, float("inf"), tol)
    err = _rel_err(analytic, numeric)
    return GradCheckResult(err <= tol, err, tol)
