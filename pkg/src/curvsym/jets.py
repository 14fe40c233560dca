"""Second-order truncated Taylor scalars for exact metric derivatives.

A :class:`Jet` carries a value, its gradient with respect to the chart
coordinates and (optionally) its Hessian.  Arithmetic propagates all three
exactly, so evaluating a metric expression on seeded coordinate jets yields
``g``, ``dg`` and ``d2g`` without truncation error.

The elementary functions in this module accept either plain floats or jets,
which lets one compiled expression serve both evaluation modes.
"""

from __future__ import annotations

import math

import numpy as np


class EvaluationDomainError(ValueError):
    """An elementary function was evaluated outside its domain."""


class Jet:
    """Value, gradient and Hessian of a scalar (Hessian may be ``None``)."""

    __slots__ = ("v", "g", "h")

    def __init__(self, v, g, h=None):
        self.v = float(v)
        self.g = g
        self.h = h

    @classmethod
    def variable(cls, value: float, index: int, n: int, order: int = 2) -> "Jet":
        g = np.zeros(n)
        g[index] = 1.0
        return cls(value, g, np.zeros((n, n)) if order >= 2 else None)

    def __repr__(self):
        return f"Jet({self.v!r}, g={self.g!r})"

    # -- arithmetic -------------------------------------------------------

    def __neg__(self):
        return Jet(-self.v, -self.g, None if self.h is None else -self.h)

    def __pos__(self):
        return self

    def __add__(self, other):
        if isinstance(other, Jet):
            h = None if self.h is None else self.h + other.h
            return Jet(self.v + other.v, self.g + other.g, h)
        return Jet(self.v + other, self.g, self.h)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Jet):
            h = None if self.h is None else self.h - other.h
            return Jet(self.v - other.v, self.g - other.g, h)
        return Jet(self.v - other, self.g, self.h)

    def __rsub__(self, other):
        return Jet(other - self.v, -self.g, None if self.h is None else -self.h)

    def __mul__(self, other):
        if isinstance(other, Jet):
            a, b = self, other
            g = a.v * b.g + b.v * a.g
            h = None
            if a.h is not None:
                cross = np.outer(a.g, b.g)
                h = a.v * b.h + b.v * a.h + cross + cross.T
            return Jet(a.v * b.v, g, h)
        return Jet(self.v * other, self.g * other, None if self.h is None else self.h * other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * reciprocal(other)
        return self * (1.0 / other)

    def __rtruediv__(self, other):
        return reciprocal(self) * other

    def __pow__(self, k):
        if isinstance(k, Jet) or int(k) != k:
            raise TypeError("jets support integer powers only")
        k = int(k)
        if k == 0:
            return 1.0
        if k == 1:
            return self
        x = self.v
        if k < 0 and x == 0.0:
            raise EvaluationDomainError("negative power of zero")
        f0 = x**k
        f1 = k * x ** (k - 1)
        f2 = k * (k - 1) * x ** (k - 2)
        return _chain(self, f0, f1, f2)


def _chain(x: Jet, f0: float, f1: float, f2: float) -> Jet:
    h = None
    if x.h is not None:
        h = f1 * x.h + f2 * np.outer(x.g, x.g)
    return Jet(f0, f1 * x.g, h)


def reciprocal(x):
    if not isinstance(x, Jet):
        return 1.0 / x
    if x.v == 0.0:
        raise EvaluationDomainError("division by zero")
    r = 1.0 / x.v
    return _chain(x, r, -r * r, 2.0 * r * r * r)


def power(x, k: int):
    if isinstance(x, Jet):
        return x**k
    if k < 0 and x == 0.0:
        raise EvaluationDomainError("negative power of zero")
    return float(x) ** k


def exp(x):
    if isinstance(x, Jet):
        e = math.exp(x.v)
        return _chain(x, e, e, e)
    return math.exp(x)


def log(x):
    v = x.v if isinstance(x, Jet) else x
    if v <= 0.0:
        raise EvaluationDomainError(f"log of non-positive value {v!r}")
    if isinstance(x, Jet):
        return _chain(x, math.log(v), 1.0 / v, -1.0 / (v * v))
    return math.log(v)


def sqrt(x):
    v = x.v if isinstance(x, Jet) else x
    if v < 0.0 or (isinstance(x, Jet) and v == 0.0):
        raise EvaluationDomainError(f"sqrt of {v!r}")
    if isinstance(x, Jet):
        s = math.sqrt(v)
        return _chain(x, s, 0.5 / s, -0.25 / (s * v))
    return math.sqrt(v)


def sin(x):
    if isinstance(x, Jet):
        s, c = math.sin(x.v), math.cos(x.v)
        return _chain(x, s, c, -s)
    return math.sin(x)


def cos(x):
    if isinstance(x, Jet):
        s, c = math.sin(x.v), math.cos(x.v)
        return _chain(x, c, -s, -c)
    return math.cos(x)


def sinh(x):
    if isinstance(x, Jet):
        s, c = math.sinh(x.v), math.cosh(x.v)
        return _chain(x, s, c, s)
    return math.sinh(x)


def cosh(x):
    if isinstance(x, Jet):
        s, c = math.sinh(x.v), math.cosh(x.v)
        return _chain(x, c, s, c)
    return math.cosh(x)


FUNCTIONS = {
    "exp": exp,
    "log": log,
    "sqrt": sqrt,
    "sin": sin,
    "cos": cos,
    "sinh": sinh,
    "cosh": cosh,
}
