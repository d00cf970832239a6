"""Minimal reverse-mode differentiation over real float64 arrays.

A :class:`Var` wraps an ndarray value and remembers how it was produced;
calling :func:`backward` on a scalar output walks the recording in reverse
and accumulates exact vector-Jacobian products into every reachable leaf.
The op set is deliberately small: elementwise arithmetic, a few transcendental
maps, affine layers, structural reshapes, reductions with subgradient rules,
and one fused op for squared channel-precoder inner products (the only place
complex numbers appear; they never enter the tape itself).

Conventions
-----------
* Values are float64 ndarrays (0-d counts as scalar). Python scalars are
  promoted to constants.
* Ties in a hard ``min`` route the full subgradient to the lowest index,
  matching ``numpy.argmin``.
* A fresh recording is built for every evaluation; nothing is retained
  between calls, so there is no ``zero_grad`` to forget.
"""
from __future__ import annotations

import numpy as np

__all__ = [
    "Var", "constant", "backward", "grad_of",
    "log1p_v", "sqrt_v", "square_v", "relu_v",
    "affine", "csq_project",
    "vsum", "vmean", "min_over", "softmin_over",
    "take_last", "index_pairs", "slice_strided", "reshape_v", "transpose2d",
]


def _unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum a gradient down to the shape of the operand it belongs to."""
    g = np.asarray(g, dtype=float)
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g.reshape(shape)


class Var:
    """A recorded array value. ``grad`` is filled by :func:`backward`."""

    __slots__ = ("value", "grad", "_parents", "_vjp")

    def __init__(self, value, parents=(), vjp=None):
        self.value = np.asarray(value, dtype=float)
        self.grad = None
        self._parents = tuple(parents)
        self._vjp = vjp

    @property
    def shape(self):
        return self.value.shape

    # -- elementwise arithmetic ---------------------------------------

    def __add__(self, other):
        other = constant(other) if not isinstance(other, Var) else other
        a, b = self, other
        return Var(a.value + b.value, (a, b),
                   lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)))

    __radd__ = __add__

    def __sub__(self, other):
        other = constant(other) if not isinstance(other, Var) else other
        a, b = self, other
        return Var(a.value - b.value, (a, b),
                   lambda g: (_unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)))

    def __rsub__(self, other):
        return constant(other).__sub__(self)

    def __mul__(self, other):
        other = constant(other) if not isinstance(other, Var) else other
        a, b = self, other
        return Var(a.value * b.value, (a, b),
                   lambda g: (_unbroadcast(g * b.value, a.shape),
                              _unbroadcast(g * a.value, b.shape)))

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = constant(other) if not isinstance(other, Var) else other
        a, b = self, other
        return Var(a.value / b.value, (a, b),
                   lambda g: (_unbroadcast(g / b.value, a.shape),
                              _unbroadcast(-g * a.value / (b.value * b.value),
                                           b.shape)))

    def __rtruediv__(self, other):
        return constant(other).__truediv__(self)

    def __neg__(self):
        a = self
        return Var(-a.value, (a,), lambda g: (-g,))


def constant(value) -> Var:
    """Wrap a value with no parents; gradients stop here."""
    return Var(value)


# -- transcendental and piecewise maps --------------------------------

def log1p_v(x: Var) -> Var:
    return Var(np.log1p(x.value), (x,), lambda g: (g / (1.0 + x.value),))


def sqrt_v(x: Var) -> Var:
    out = np.sqrt(x.value)
    return Var(out, (x,), lambda g: (g / (2.0 * out),))


def square_v(x: Var) -> Var:
    return Var(x.value * x.value, (x,), lambda g: (2.0 * g * x.value,))


def relu_v(x: Var) -> Var:
    mask = x.value > 0
    return Var(np.where(mask, x.value, 0.0), (x,), lambda g: (g * mask,))


# -- dense layers and the complex power bridge ------------------------

def affine(w: Var, x: Var, b: Var) -> Var:
    """w @ x + b for a 2-d weight, 1-d input, 1-d bias."""
    out = w.value @ x.value + b.value
    return Var(out, (w, x, b),
               lambda g: (np.outer(g, x.value), w.value.T @ g, np.asarray(g)))


def csq_project(pre: Var, pim: Var, h: np.ndarray) -> Var:
    """Squared magnitudes of channel-precoder inner products.

    ``h`` is a constant complex (n_draws, n_tx, n_users) stack; ``pre`` and
    ``pim`` carry the real and imaginary parts of the (n_tx, n_streams)
    precoder. Returns |h_k^(m)H p_s|^2 shaped (n_draws, n_users, n_streams).
    The complex arithmetic is fused here so the tape stays real.
    """
    p = pre.value + 1j * pim.value
    z = np.einsum("mik,is->mks", np.conj(h), p)
    val = z.real ** 2 + z.imag ** 2

    def vjp(g):
        v = np.einsum("mik,mks->is", h, (2.0 * g) * z)
        return v.real, v.imag

    return Var(val, (pre, pim), vjp)


# -- reductions -------------------------------------------------------

def vsum(x: Var, axis=None) -> Var:
    out = np.sum(x.value, axis=axis)

    def vjp(g):
        if axis is None:
            return (np.broadcast_to(g, x.shape).copy(),)
        return (np.broadcast_to(np.expand_dims(g, axis), x.shape).copy(),)

    return Var(out, (x,), vjp)


def vmean(x: Var, axis=None) -> Var:
    n = x.value.size if axis is None else x.value.shape[axis]
    out = np.mean(x.value, axis=axis)

    def vjp(g):
        if axis is None:
            return (np.broadcast_to(g / n, x.shape).copy(),)
        return (np.broadcast_to(np.expand_dims(g / n, axis), x.shape).copy(),)

    return Var(out, (x,), vjp)


def min_over(x: Var, axis: int = 0) -> Var:
    """Hard minimum along one axis; ties feed the lowest index."""
    idx = np.argmin(x.value, axis=axis)
    out = np.min(x.value, axis=axis)

    def vjp(g):
        gx = np.zeros_like(x.value)
        grid = np.indices(out.shape) if out.shape else None
        if grid is None:
            gx[(idx,) if x.value.ndim == 1 else np.unravel_index(
                np.argmin(x.value), x.shape)] = g
        else:
            sel = list(grid)
            sel.insert(axis, idx)
            gx[tuple(sel)] = g
        return (gx,)

    return Var(out, (x,), vjp)


def softmin_over(x: Var, axis: int = 0, temperature: float = 0.1) -> Var:
    """Smooth minimum: -T log sum exp(-x / T), shift-stabilized."""
    if temperature <= 0:
        raise ValueError(f"temperature must be positive, got {temperature}")
    t = float(temperature)
    m0 = np.min(x.value, axis=axis, keepdims=True)
    e = np.exp(-(x.value - m0) / t)
    s = np.sum(e, axis=axis)
    out = np.squeeze(m0, axis=axis) - t * np.log(s)
    w = e / np.expand_dims(s, axis)

    def vjp(g):
        return (np.expand_dims(g, axis) * w,)

    return Var(out, (x,), vjp)


# -- structural ops ---------------------------------------------------

def take_last(x: Var, indices) -> Var:
    """Gather along the last axis; duplicate indices accumulate on backward."""
    idx = np.asarray(indices, dtype=int)
    out = x.value[..., idx]

    def vjp(g):
        gx = np.zeros_like(x.value)
        np.add.at(gx, (..., idx), g)
        return (gx,)

    return Var(out, (x,), vjp)


def index_pairs(x: Var, rows, cols) -> Var:
    """x[..., rows, cols] for paired index arrays on the last two axes."""
    r = np.asarray(rows, dtype=int)
    c = np.asarray(cols, dtype=int)
    out = x.value[..., r, c]

    def vjp(g):
        gx = np.zeros_like(x.value)
        np.add.at(gx, (..., r, c), g)
        return (gx,)

    return Var(out, (x,), vjp)


def slice_strided(x: Var, start: int, step: int) -> Var:
    """1-d strided slice x[start::step]."""
    out = x.value[start::step]

    def vjp(g):
        gx = np.zeros_like(x.value)
        gx[start::step] = g
        return (gx,)

    return Var(out, (x,), vjp)


def reshape_v(x: Var, shape) -> Var:
    shape = tuple(shape)
    return Var(x.value.reshape(shape), (x,),
               lambda g: (np.asarray(g).reshape(x.shape),))


def transpose2d(x: Var) -> Var:
    return Var(x.value.T.copy(), (x,), lambda g: (np.asarray(g).T.copy(),))


# -- reverse pass -----------------------------------------------------

def _topo_order(out: Var):
    order, seen, stack = [], set(), [(out, False)]
    while stack:
        node, done = stack.pop()
        if done:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            stack.append((p, False))
    return order  # parents before children


def backward(out: Var) -> None:
    """Accumulate d(out)/d(leaf) into ``grad`` for every node in the tape."""
    if out.value.size != 1:
        raise ValueError(f"backward needs a scalar output, got shape {out.shape}")
    order = _topo_order(out)
    for node in order:
        node.grad = None
    out.grad = np.ones_like(out.value)
    for node in reversed(order):
        if node.grad is None or node._vjp is None:
            continue
        parent_grads = node._vjp(node.grad)
        for parent, pg in zip(node._parents, parent_grads):
            pg = np.asarray(pg, dtype=float)
            if parent.grad is None:
                parent.grad = pg.copy()
            else:
                parent.grad = parent.grad + pg


def grad_of(out: Var, wrt) -> list:
    """Run backward and return gradients for the requested leaves."""
    backward(out)
    outs = []
    for v in wrt:
        outs.append(np.zeros_like(v.value) if v.grad is None else v.grad)
    return outs
