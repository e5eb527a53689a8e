"""Second-order forward-mode differentiation for scalar and matrix fields.

A :class:`Jet` carries a value together with its gradient and (optionally)
its Hessian with respect to a fixed set of seed variables.  Field closures are
written once against ordinary arithmetic and the elementary functions in this
module (:func:`sin`, :func:`cos`, ...); evaluating them on jets yields exact
derivatives.

Example
-------
>>> f = ScalarField(2, lambda x: sin(x[0]) + x[1] ** 3)
>>> value, grad, hess = evaluate_jet(f, [0.0, 2.0])
>>> value, grad.tolist()
(8.0, [1.0, 12.0])
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Callable, Sequence

import numpy as np


class ShapeError(ValueError):
    """Input vector does not match the arity of a field."""


class Jet:
    """Truncated Taylor expansion ``value + grad.ds + 1/2 ds.hess.ds``.

    ``hess`` is ``None`` for first-order jets; mixing a first-order jet into an
    expression drops the Hessian of the result.
    """

    __slots__ = ("val", "grad", "hess")
    __array_priority__ = 1000

    def __init__(self, val: float, grad: np.ndarray, hess: np.ndarray | None = None):
        self.val = float(val)
        self.grad = grad
        self.hess = hess

    # construction helpers
    @classmethod
    def seeds(cls, x: Sequence[float], order: int = 2) -> np.ndarray:
        """Independent variables for ``x``, returned as an object array."""
        x = np.asarray(x, dtype=float)
        n = x.size
        eye = np.eye(n)
        out = np.empty(n, dtype=object)
        for i in range(n):
            out[i] = cls(x[i], eye[i].copy(), np.zeros((n, n)) if order == 2 else None)
        return out

    def _const(self, c: float) -> "Jet":
        return Jet(c, np.zeros_like(self.grad),
                   None if self.hess is None else np.zeros_like(self.hess))

    def _chain(self, g0: float, g1: float, g2: float) -> "Jet":
        grad = g1 * self.grad
        if self.hess is None:
            return Jet(g0, grad)
        return Jet(g0, grad, g1 * self.hess + g2 * np.outer(self.grad, self.grad))

    # arithmetic
    def __neg__(self):
        return Jet(-self.val, -self.grad, None if self.hess is None else -self.hess)

    def __pos__(self):
        return self

    def __add__(self, other):
        if isinstance(other, Jet):
            hess = None if self.hess is None or other.hess is None else self.hess + other.hess
            return Jet(self.val + other.val, self.grad + other.grad, hess)
        return Jet(self.val + other, self.grad, self.hess)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Jet):
            hess = None if self.hess is None or other.hess is None else self.hess - other.hess
            return Jet(self.val - other.val, self.grad - other.grad, hess)
        return Jet(self.val - other, self.grad, self.hess)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Jet):
            a, b = self, other
            grad = a.val * b.grad + b.val * a.grad
            if a.hess is None or b.hess is None:
                return Jet(a.val * b.val, grad)
            cross = np.outer(a.grad, b.grad)
            return Jet(a.val * b.val, grad, a.val * b.hess + b.val * a.hess + cross + cross.T)
        other = float(other)
        return Jet(self.val * other, self.grad * other,
                   None if self.hess is None else self.hess * other)

    __rmul__ = __mul__

    def reciprocal(self) -> "Jet":
        if self.val == 0.0:
            raise ZeroDivisionError("jet division by zero value")
        r = 1.0 / self.val
        return self._chain(r, -r * r, 2.0 * r * r * r)

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * other.reciprocal()
        return self * (1.0 / float(other))

    def __rtruediv__(self, other):
        return self.reciprocal() * float(other)

    def __pow__(self, c):
        if isinstance(c, Jet):
            return exp(c * log(self))
        c = float(c)
        if c == 0.0:
            return self._const(1.0)
        if c == 1.0:
            return self
        if c.is_integer():
            k = int(c)
            x = self.val
            g1 = k * x ** (k - 1) if (k - 1 >= 0 or x != 0.0) else math.inf
            g2 = k * (k - 1) * x ** (k - 2) if (k - 2 >= 0 or x != 0.0) else math.inf
            return self._chain(x ** k, g1, g2)
        x = self.val
        return self._chain(x ** c, c * x ** (c - 1), c * (c - 1) * x ** (c - 2))

    def __rpow__(self, base):
        return exp(self * math.log(float(base)))

    # elementary functions; numpy object arrays dispatch to these
    def sin(self):
        s, c = math.sin(self.val), math.cos(self.val)
        return self._chain(s, c, -s)

    def cos(self):
        s, c = math.sin(self.val), math.cos(self.val)
        return self._chain(c, -s, -c)

    def tan(self):
        t = math.tan(self.val)
        sec2 = 1.0 + t * t
        return self._chain(t, sec2, 2.0 * t * sec2)

    def exp(self):
        e = math.exp(self.val)
        return self._chain(e, e, e)

    def log(self):
        x = self.val
        return self._chain(math.log(x), 1.0 / x, -1.0 / (x * x))

    def sqrt(self):
        r = math.sqrt(self.val)
        return self._chain(r, 0.5 / r, -0.25 / (r * self.val))

    def tanh(self):
        t = math.tanh(self.val)
        d = 1.0 - t * t
        return self._chain(t, d, -2.0 * t * d)

    def arctan(self):
        x = self.val
        d = 1.0 / (1.0 + x * x)
        return self._chain(math.atan(x), d, -2.0 * x * d * d)

    def __float__(self):
        return self.val

    def __repr__(self) -> str:
        return f"Jet({self.val!r}, grad={self.grad!r})"


def _lift(name: str, fallback: Callable[[float], float]):
    def fn(x):
        if isinstance(x, Jet):
            return getattr(x, name)()
        if isinstance(x, np.ndarray):
            if x.dtype == object:
                return np.array([fn(v) for v in x.ravel()], dtype=object).reshape(x.shape)
            return getattr(np, name)(x)
        return fallback(x)

    fn.__name__ = name
    fn.__doc__ = f"Jet-aware ``{name}``."
    return fn


sin = _lift("sin", math.sin)
cos = _lift("cos", math.cos)
tan = _lift("tan", math.tan)
exp = _lift("exp", math.exp)
log = _lift("log", math.log)
sqrt = _lift("sqrt", math.sqrt)
tanh = _lift("tanh", math.tanh)
arctan = _lift("arctan", math.atan)


def value_of(a: Any) -> float:
    return a.val if isinstance(a, Jet) else float(a)


def _as_point(x, arity: int) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.ndim != 1 or x.size != arity:
        raise ShapeError(f"expected a vector of length {arity}, got shape {np.shape(x)}")
    return x


@dataclass(frozen=True)
class ScalarField:
    """Smooth real function of ``arity`` real variables.

    ``func`` receives a 1-D sequence (floats or jets) and must use only
    arithmetic and the elementary functions of this module.
    """

    arity: int
    func: Callable[[Any], Any]
    name: str = ""

    def __call__(self, x) -> float:
        return self.value(x)

    def value(self, x) -> float:
        return value_of(self.func(_as_point(x, self.arity)))

    def jet(self, x) -> tuple[float, np.ndarray, np.ndarray]:
        x = _as_point(x, self.arity)
        out = self.func(Jet.seeds(x, order=2))
        if not isinstance(out, Jet):
            return float(out), np.zeros(self.arity), np.zeros((self.arity, self.arity))
        hess = 0.5 * (out.hess + out.hess.T)
        return out.val, out.grad.copy(), hess

    def gradient(self, x) -> np.ndarray:
        x = _as_point(x, self.arity)
        out = self.func(Jet.seeds(x, order=1))
        if not isinstance(out, Jet):
            return np.zeros(self.arity)
        return out.grad.copy()

    def on(self, args):
        """Evaluate on already-built jets (for composition)."""
        return self.func(args)


def evaluate_jet(f: ScalarField, x) -> tuple[float, np.ndarray, np.ndarray]:
    """Value, gradient and symmetric Hessian of ``f`` at ``x``."""
    return f.jet(x)


def fd_gradient(f: ScalarField, x, h: float) -> np.ndarray:
    """Central finite-difference gradient (cross-check only)."""
    x = _as_point(x, f.arity)
    g = np.empty(f.arity)
    for i in range(f.arity):
        e = np.zeros(f.arity)
        e[i] = h
        g[i] = (f.value(x + e) - f.value(x - e)) / (2.0 * h)
    return g


def fd_residual(f: ScalarField, x, h: float) -> float:
    """Infinity-norm gap between the exact and central-difference gradients."""
    if h <= 0:
        raise ValueError("step h must be positive")
    exact = f.gradient(x)
    if f.arity == 0:
        return 0.0
    return float(np.max(np.abs(exact - fd_gradient(f, x, h))))


def _to_object_matrix(raw, shape) -> np.ndarray:
    out = np.empty(shape, dtype=object)
    rows, cols = shape
    if rows == 0 or cols == 0:
        return out
    for r in range(rows):
        row = raw[r]
        for c in range(cols):
            out[r, c] = row[c]
    return out


@dataclass(frozen=True)
class MatrixField:
    """Smooth matrix-valued function of a base point.

    Either ``func`` (a jet-transparent closure returning a nested sequence of
    shape ``shape``) or ``provider`` (a float-only map returning the value and
    its entrywise Jacobian, shape ``shape + (n,)``) must be given.  Provider
    fields only support first-order jets.
    """

    shape: tuple[int, int]
    n: int
    func: Callable[[Any], Any] | None = None
    provider: Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]] | None = None
    name: str = ""

    def __post_init__(self):
        if (self.func is None) == (self.provider is None):
            raise ValueError("give exactly one of func or provider")

    @classmethod
    def constant(cls, value, n: int, name: str = "") -> "MatrixField":
        value = np.array(value, dtype=float)
        value.setflags(write=False)
        rows = value.tolist()
        return cls(value.shape, n, func=lambda x: rows, name=name)

    def evaluate(self, args) -> np.ndarray:
        """Evaluate on floats or jets; returns an object array when jets are involved."""
        if self.func is not None:
            raw = self.func(args)
            return _to_object_matrix(raw, self.shape)
        if len(args) and isinstance(args[0], Jet):
            if any(a.hess is not None for a in args):
                raise NotImplementedError(f"{self.name or 'field'} supports first-order jets only")
            x = np.array([a.val for a in args])
            dx = np.array([a.grad for a in args])  # (n, nseed)
            val, jac = self.provider(x)
            out = np.empty(self.shape, dtype=object)
            g = np.asarray(jac) @ dx
            for idx in np.ndindex(*self.shape):
                out[idx] = Jet(val[idx], g[idx])
            return out
        val, _ = self.provider(np.asarray(args, dtype=float))
        return np.asarray(val, dtype=object)

    def value(self, x) -> np.ndarray:
        x = _as_point(x, self.n)
        if self.provider is not None:
            return np.array(self.provider(x)[0], dtype=float).reshape(self.shape)
        raw = _to_object_matrix(self.func(x), self.shape)
        return raw.astype(float)

    def jacobian(self, x) -> np.ndarray:
        """Entrywise gradients, shape ``shape + (n,)``."""
        x = _as_point(x, self.n)
        if self.provider is not None:
            return np.array(self.provider(x)[1], dtype=float).reshape(self.shape + (self.n,))
        return self.derivatives(x, order=1)[1]

    def value_and_jacobian(self, x) -> tuple[np.ndarray, np.ndarray]:
        x = _as_point(x, self.n)
        if self.provider is not None:
            val, jac = self.provider(x)
            return (np.array(val, dtype=float).reshape(self.shape),
                    np.array(jac, dtype=float).reshape(self.shape + (self.n,)))
        val, jac, _ = self.derivatives(x, order=1)
        return val, jac

    def hessians(self, x) -> np.ndarray:
        """Entrywise Hessians, shape ``shape + (n, n)``; closure fields only."""
        if self.func is None:
            raise NotImplementedError("provider fields carry first derivatives only")
        return self.derivatives(x, order=2)[2]

    def derivatives(self, x, order: int = 2):
        """``(value, jacobian, hessians)``; hessians is None for ``order=1``."""
        if self.func is None:
            if order != 1:
                raise NotImplementedError("provider fields carry first derivatives only")
            val, jac = self.value_and_jacobian(x)
            return val, jac, None
        x = _as_point(x, self.n)
        n = self.n
        raw = _to_object_matrix(self.func(Jet.seeds(x, order=order)), self.shape)
        val = np.zeros(self.shape)
        jac = np.zeros(self.shape + (n,))
        hes = np.zeros(self.shape + (n, n)) if order == 2 else None
        for idx in np.ndindex(*self.shape):
            e = raw[idx]
            if isinstance(e, Jet):
                val[idx] = e.val
                jac[idx] = e.grad
                if order == 2 and e.hess is not None:
                    hes[idx] = 0.5 * (e.hess + e.hess.T)
            else:
                val[idx] = float(e)
        return val, jac, hes


def fd_jacobian(F: MatrixField, x, h: float = 1e-5) -> np.ndarray:
    """Central finite-difference entrywise Jacobian (cross-check only)."""
    x = _as_point(x, F.n)
    out = np.zeros(F.shape + (F.n,))
    for i in range(F.n):
        e = np.zeros(F.n)
        e[i] = h
        out[..., i] = (F.value(x + e) - F.value(x - e)) / (2.0 * h)
    return out
