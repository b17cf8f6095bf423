"""Dense float64 tensors with reverse-mode automatic differentiation.

A :class:`Tape` records every differentiable operation in execution order
(define-by-run).  Calling :meth:`Tape.backward` on a scalar result replays
the recorded nodes in exact reverse order, accumulating gradients into
every tensor with ``requires_grad=True``.  When no tape is active the same
operations run as plain numpy computations, which is how inference-mode
code paths stay identical to training paths.

All data is 64-bit; evaluation order is fixed and single-threaded, so
repeating a forward+backward on identical inputs is bit-identical.

Thread-safety: a Tape and the tensors created under it belong to one
worker.  Parameter tensors may be shared read-only across workers while no
optimizer step is running.
"""

from __future__ import annotations

import numpy as np


class ShapeError(ValueError):
    """Operand shapes do not conform for the requested operation."""


class Tensor:
    """A dense float64 array plus an optional gradient buffer."""

    __slots__ = ("data", "requires_grad", "grad")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = requires_grad
        self.grad: np.ndarray | None = None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    def item(self) -> float:
        return float(self.data)

    def zero_grad(self) -> None:
        self.grad = None

    def accumulate_grad(self, g: np.ndarray) -> None:
        if self.grad is None:
            self.grad = np.array(g, dtype=np.float64, copy=True)
        else:
            self.grad += g

    def __add__(self, other: "Tensor") -> "Tensor":
        return add(self, other)

    def __mul__(self, other: "Tensor") -> "Tensor":
        return mul(self, other)

    def __repr__(self) -> str:
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.data.shape}{flag})"


def parameter(data) -> Tensor:
    """A leaf tensor that receives gradients."""
    return Tensor(data, requires_grad=True)


class Node:
    """One recorded operation: output, inputs, and its backward rule."""

    __slots__ = ("op", "out", "inputs", "backward_fn")

    def __init__(self, op: str, out: Tensor, inputs: tuple, backward_fn):
        self.op = op
        self.out = out
        self.inputs = inputs
        self.backward_fn = backward_fn


class Tape:
    """Append-only record of operations for one forward pass.

    Usage::

        with Tape() as tape:
            loss = ...        # ops executed here are recorded
        tape.backward(loss)   # gradients land in leaf .grad buffers
    """

    _active: "Tape | None" = None

    def __init__(self):
        self.nodes: list[Node] = []

    def __enter__(self) -> "Tape":
        if Tape._active is not None:
            raise RuntimeError("a Tape is already active; tapes do not nest")
        Tape._active = self
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        Tape._active = None

    @staticmethod
    def current() -> "Tape | None":
        return Tape._active

    def backward(self, root: Tensor) -> None:
        """Propagate d(root)/d(leaf) into every recorded tensor's grad.

        ``root`` must be a scalar.  Nodes are visited in exact reverse
        append order, each exactly once; nodes whose output received no
        gradient (no path to root) are skipped.
        """
        if root.data.shape != ():
            raise ShapeError(f"backward root must be scalar, got shape {root.data.shape}")
        root.accumulate_grad(np.ones((), dtype=np.float64))
        for node in reversed(self.nodes):
            if node.out.grad is not None:
                node.backward_fn(node.out.grad)


def _record(op: str, out: Tensor, inputs: tuple, backward_fn) -> Tensor:
    tape = Tape._active
    if tape is not None and any(t.requires_grad for t in inputs):
        out.requires_grad = True
        tape.nodes.append(Node(op, out, inputs, backward_fn))
    return out


# ---------------------------------------------------------------------------
# elementwise and arithmetic ops


def add(a: Tensor, b: Tensor) -> Tensor:
    if a.data.shape != b.data.shape:
        raise ShapeError(f"add: shapes {a.data.shape} and {b.data.shape} differ")
    out = Tensor(a.data + b.data)

    def backward(g):
        if a.requires_grad:
            a.accumulate_grad(g)
        if b.requires_grad:
            b.accumulate_grad(g)

    return _record("add", out, (a, b), backward)


def add_row(m: Tensor, r: Tensor) -> Tensor:
    """Add a length-k row vector to every row of an [n, k] matrix."""
    if m.data.ndim != 2 or r.data.ndim != 1 or m.data.shape[1] != r.data.shape[0]:
        raise ShapeError(f"add_row: shapes {m.data.shape} and {r.data.shape} do not conform")
    out = Tensor(m.data + r.data)

    def backward(g):
        if m.requires_grad:
            m.accumulate_grad(g)
        if r.requires_grad:
            r.accumulate_grad(g.sum(axis=0))

    return _record("add_row", out, (m, r), backward)


def mul(a: Tensor, b: Tensor) -> Tensor:
    if a.data.shape != b.data.shape:
        raise ShapeError(f"mul: shapes {a.data.shape} and {b.data.shape} differ")
    out = Tensor(a.data * b.data)

    def backward(g):
        if a.requires_grad:
            a.accumulate_grad(g * b.data)
        if b.requires_grad:
            b.accumulate_grad(g * a.data)

    return _record("mul", out, (a, b), backward)


def scale(a: Tensor, s: float) -> Tensor:
    out = Tensor(a.data * s)

    def backward(g):
        if a.requires_grad:
            a.accumulate_grad(g * s)

    return _record("scale", out, (a,), backward)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """a @ b where a is [n, k] or [k] and b is [k, m]."""
    if b.data.ndim != 2 or a.data.ndim not in (1, 2) or a.data.shape[-1] != b.data.shape[0]:
        raise ShapeError(f"matmul: shapes {a.data.shape} and {b.data.shape} do not conform")
    out = Tensor(a.data @ b.data)

    def backward(g):
        if a.requires_grad:
            a.accumulate_grad(g @ b.data.T)
        if b.requires_grad:
            if a.data.ndim == 1:
                b.accumulate_grad(np.outer(a.data, g))
            else:
                b.accumulate_grad(a.data.T @ g)

    return _record("matmul", out, (a, b), backward)


def affine(x: Tensor, w: Tensor, b: Tensor) -> Tensor:
    """x @ w + b for x of shape [n, in] or [in]; w [in, out]; b [out]."""
    if (
        w.data.ndim != 2
        or b.data.ndim != 1
        or x.data.ndim not in (1, 2)
        or x.data.shape[-1] != w.data.shape[0]
        or w.data.shape[1] != b.data.shape[0]
    ):
        raise ShapeError(
            f"affine: shapes x={x.data.shape} w={w.data.shape} b={b.data.shape} do not conform"
        )
    out = Tensor(x.data @ w.data + b.data)

    def backward(g):
        if x.requires_grad:
            x.accumulate_grad(g @ w.data.T)
        if w.requires_grad:
            if x.data.ndim == 1:
                w.accumulate_grad(np.outer(x.data, g))
            else:
                w.accumulate_grad(x.data.T @ g)
        if b.requires_grad:
            b.accumulate_grad(g if g.ndim == 1 else g.sum(axis=0))

    return _record("affine", out, (x, w, b), backward)


def sigmoid(x: Tensor) -> Tensor:
    # split by sign so exp never overflows
    d = x.data
    s = np.empty_like(d)
    pos = d >= 0
    s[pos] = 1.0 / (1.0 + np.exp(-d[pos]))
    e = np.exp(d[~pos])
    s[~pos] = e / (1.0 + e)
    out = Tensor(s)

    def backward(g):
        if x.requires_grad:
            x.accumulate_grad(g * s * (1.0 - s))

    return _record("sigmoid", out, (x,), backward)


def tanh(x: Tensor) -> Tensor:
    t = np.tanh(x.data)
    out = Tensor(t)

    def backward(g):
        if x.requires_grad:
            x.accumulate_grad(g * (1.0 - t * t))

    return _record("tanh", out, (x,), backward)


# ---------------------------------------------------------------------------
# reductions and normalizers


def log_sum_exp(v: Tensor) -> Tensor:
    """max(v) + log sum exp(v - max(v)) over a 1-D tensor; scalar out."""
    if v.data.ndim != 1 or v.data.shape[0] < 1:
        raise ShapeError(f"log_sum_exp: need a non-empty 1-D tensor, got shape {v.data.shape}")
    m = np.max(v.data)
    shifted = np.exp(v.data - m)
    total = shifted.sum()
    out = Tensor(m + np.log(total))
    weights = shifted / total  # softmax(v), saved for backward

    def backward(g):
        if v.requires_grad:
            v.accumulate_grad(g * weights)

    return _record("log_sum_exp", out, (v,), backward)


def log_softmax(x: Tensor) -> Tensor:
    """log softmax over the last axis of a 1-D or 2-D tensor."""
    if x.data.ndim not in (1, 2) or x.data.shape[-1] < 1:
        raise ShapeError(f"log_softmax: need 1-D or 2-D non-empty input, got shape {x.data.shape}")
    m = x.data.max(axis=-1, keepdims=True)
    shifted = x.data - m
    lse = np.log(np.exp(shifted).sum(axis=-1, keepdims=True))
    out_data = shifted - lse
    out = Tensor(out_data)
    probs = np.exp(out_data)

    def backward(g):
        if x.requires_grad:
            x.accumulate_grad(g - probs * g.sum(axis=-1, keepdims=True))

    return _record("log_softmax", out, (x,), backward)


def sum_all(x: Tensor) -> Tensor:
    out = Tensor(x.data.sum())

    def backward(g):
        if x.requires_grad:
            x.accumulate_grad(np.full_like(x.data, g))

    return _record("sum_all", out, (x,), backward)


def sum_rows(m: Tensor) -> Tensor:
    """Row sums of an [n, k] matrix -> [n]."""
    if m.data.ndim != 2:
        raise ShapeError(f"sum_rows: need 2-D input, got shape {m.data.shape}")
    out = Tensor(m.data.sum(axis=1))

    def backward(g):
        if m.requires_grad:
            m.accumulate_grad(np.repeat(g[:, None], m.data.shape[1], axis=1))

    return _record("sum_rows", out, (m,), backward)


def mean_rows(m: Tensor) -> Tensor:
    """Mean over the rows of an [n, k] matrix -> [k]."""
    if m.data.ndim != 2 or m.data.shape[0] < 1:
        raise ShapeError(f"mean_rows: need non-empty 2-D input, got shape {m.data.shape}")
    n = m.data.shape[0]
    out = Tensor(m.data.mean(axis=0))

    def backward(g):
        if m.requires_grad:
            m.accumulate_grad(np.repeat(g[None, :] / n, n, axis=0))

    return _record("mean_rows", out, (m,), backward)


# ---------------------------------------------------------------------------
# indexing and restructuring


def row(m: Tensor, i: int) -> Tensor:
    """Row i of an [n, k] matrix as a 1-D tensor (copy, not view)."""
    if m.data.ndim != 2:
        raise ShapeError(f"row: need 2-D input, got shape {m.data.shape}")
    out = Tensor(m.data[i].copy())

    def backward(g):
        if m.requires_grad:
            if m.grad is None:
                m.grad = np.zeros_like(m.data)
            m.grad[i] += g

    return _record("row", out, (m,), backward)


def rows(m: Tensor, idx) -> Tensor:
    """Gather rows m[idx] -> [len(idx), k]; duplicate indices allowed."""
    if m.data.ndim != 2:
        raise ShapeError(f"rows: need 2-D input, got shape {m.data.shape}")
    idx = np.asarray(idx, dtype=np.intp)
    out = Tensor(m.data[idx])

    def backward(g):
        if m.requires_grad:
            if m.grad is None:
                m.grad = np.zeros_like(m.data)
            np.add.at(m.grad, idx, g)

    return _record("rows", out, (m,), backward)


def pick(m: Tensor, cols) -> Tensor:
    """m[i, cols[i]] for each row i -> 1-D tensor of length n."""
    if m.data.ndim != 2:
        raise ShapeError(f"pick: need 2-D input, got shape {m.data.shape}")
    cols = np.asarray(cols, dtype=np.intp)
    if cols.shape != (m.data.shape[0],):
        raise ShapeError(f"pick: need one column per row, got {cols.shape} for {m.data.shape}")
    ar = np.arange(m.data.shape[0])
    out = Tensor(m.data[ar, cols])

    def backward(g):
        if m.requires_grad:
            if m.grad is None:
                m.grad = np.zeros_like(m.data)
            np.add.at(m.grad, (ar, cols), g)

    return _record("pick", out, (m,), backward)


def element(v: Tensor, i: int) -> Tensor:
    """v[i] of a 1-D tensor as a scalar."""
    if v.data.ndim != 1 or not (0 <= i < v.data.shape[0]):
        raise ShapeError(f"element: bad index {i} for shape {v.data.shape}")
    out = Tensor(v.data[i])

    def backward(g):
        if v.requires_grad:
            if v.grad is None:
                v.grad = np.zeros_like(v.data)
            v.grad[i] += g

    return _record("element", out, (v,), backward)


def stack_rows(parts: list[Tensor]) -> Tensor:
    """Stack n same-shape scalars or 1-D tensors along a new first axis."""
    if not parts:
        raise ShapeError("stack_rows: need at least one row")
    k = parts[0].data.shape
    if any(p.data.shape != k for p in parts) or parts[0].data.ndim > 1:
        raise ShapeError(f"stack_rows: rows must share one shape, got {[p.data.shape for p in parts]}")
    out = Tensor(np.stack([p.data for p in parts]))

    def backward(g):
        for i, p in enumerate(parts):
            if p.requires_grad:
                p.accumulate_grad(g[i])

    return _record("stack_rows", out, tuple(parts), backward)


def slice1d(v: Tensor, lo: int, hi: int) -> Tensor:
    """v[lo:hi] of a 1-D tensor (copy, not view)."""
    if v.data.ndim != 1 or not (0 <= lo <= hi <= v.data.shape[0]):
        raise ShapeError(f"slice1d: bad range [{lo}:{hi}] for shape {v.data.shape}")
    out = Tensor(v.data[lo:hi].copy())

    def backward(g):
        if v.requires_grad:
            if v.grad is None:
                v.grad = np.zeros_like(v.data)
            v.grad[lo:hi] += g

    return _record("slice1d", out, (v,), backward)
