"""Pointwise multilinear algebra on a single tangent space.

Conventions used throughout the package:

* a (0,4) tensor ``T[h, i, j, k]`` is ``T(X_h, X_i, X_j, X_k)``;
* a (0,6) tensor ``T[a, b, c, d, e, f]`` is ``T(X_a, X_b, X_c, X_d; X_e, X_f)``;
* an endomorphism is a matrix ``E[i, j]`` = component ``i`` of ``E(X_j)``;
* the Kulkarni-Nomizu product is normalised so that ``G = (g ^ g) / 2``
  satisfies ``G(v, w, w, v) = g(v, v) g(w, w) - g(v, w)**2``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = [
    "DegeneratePlaneError",
    "Plane",
    "metric_endomorphism",
    "metric_endomorphisms",
    "kulkarni_nomizu",
    "big_g",
    "act_on_04",
    "act_on_02",
    "tensor06_from_operator",
    "frobenius_inner",
    "contract",
    "relative_residual",
    "curvature_like_residuals",
    "tensor06_residuals",
]


class DegeneratePlaneError(ValueError):
    """The two spanning vectors are (numerically) linearly dependent."""


@dataclass(frozen=True, eq=False)
class Plane:
    """Ordered pair of tangent vectors spanning a 2-plane at one point."""

    v: np.ndarray
    w: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.v, dtype=float)
        w = np.asarray(self.w, dtype=float)
        if v.shape != w.shape or v.ndim != 1:
            raise ValueError("plane vectors must be 1-d arrays of equal length")
        if not (np.all(np.isfinite(v)) and np.all(np.isfinite(w))):
            raise ValueError("plane vectors must be finite")
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "w", w)

    def area2(self, g) -> float:
        """``G(v, w, w, v)``, the squared g-area of the spanned parallelogram."""
        g = np.asarray(g, dtype=float)
        gvv, gww, gvw = self.v @ g @ self.v, self.w @ g @ self.w, self.v @ g @ self.w
        return float(gvv * gww - gvw * gvw)

    def check(self, g, rtol: float = 1e-14) -> None:
        g = np.asarray(g, dtype=float)
        scale = (self.v @ g @ self.v) * (self.w @ g @ self.w)
        if not scale > 0 or self.area2(g) <= rtol * scale:
            raise DegeneratePlaneError("plane vectors are linearly dependent")

    def orthonormal(self, g) -> "Plane":
        """g-orthonormal basis of the same oriented plane (Gram-Schmidt)."""
        self.check(g)
        g = np.asarray(g, dtype=float)
        e1 = self.v / np.sqrt(self.v @ g @ self.v)
        w = self.w - (e1 @ g @ self.w) * e1
        e2 = w / np.sqrt(w @ g @ w)
        return Plane(e1, e2)


def _check_square(*arrays):
    n = arrays[0].shape[-1]
    for a in arrays:
        if any(s != n for s in a.shape):
            raise ValueError(f"dimension mismatch: shapes {[x.shape for x in arrays]}")
    return n


def metric_endomorphism(g, x, y) -> np.ndarray:
    """Matrix of ``Z -> g(y, Z) x - g(x, Z) y``."""
    g = np.asarray(g, dtype=float)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    _check_square(g, x, y)
    return np.outer(x, g @ y) - np.outer(y, g @ x)


def metric_endomorphisms(g) -> np.ndarray:
    """``M[e, f]`` = matrix of ``X_e ^_g X_f`` for all coordinate pairs."""
    g = np.asarray(g, dtype=float)
    n = g.shape[0]
    eye = np.eye(n)
    # M[e, f, i, c] = delta_ie g_fc - delta_if g_ec
    return np.einsum("ie,fc->efic", eye, g) - np.einsum("if,ec->efic", eye, g)


def kulkarni_nomizu(a, b) -> np.ndarray:
    """``(A ^ B)_hijk = A_hk B_ij + A_ij B_hk - A_hj B_ik - A_ik B_hj``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    _check_square(a, b)
    return (
        np.einsum("hk,ij->hijk", a, b)
        + np.einsum("ij,hk->hijk", a, b)
        - np.einsum("hj,ik->hijk", a, b)
        - np.einsum("ik,hj->hijk", a, b)
    )


def big_g(g) -> np.ndarray:
    return 0.5 * kulkarni_nomizu(g, g)


def act_on_04(e, t, g=None) -> np.ndarray:
    """Derivation action ``(E . T)(X1..X4) = -sum_slots T(.., E X_s, ..)``.

    ``g`` is accepted for signature symmetry with the callers and unused:
    the action needs no metric once ``E`` is given as a matrix.
    """
    e = np.asarray(e, dtype=float)
    t = np.asarray(t, dtype=float)
    if t.ndim != 4 or e.shape != (t.shape[0],) * 2:
        raise ValueError("dimension mismatch between endomorphism and (0,4) tensor")
    _check_square(t)
    return -(
        np.einsum("ia,ibcd->abcd", e, t)
        + np.einsum("ib,aicd->abcd", e, t)
        + np.einsum("ic,abid->abcd", e, t)
        + np.einsum("id,abci->abcd", e, t)
    )


def act_on_02(e, s) -> np.ndarray:
    """``(E . S)(X1, X2) = -S(E X1, X2) - S(X1, E X2)``."""
    e = np.asarray(e, dtype=float)
    s = np.asarray(s, dtype=float)
    _check_square(e, s)
    return -(e.T @ s + s @ e)


def _stack_operator(op, n):
    if callable(op):
        eye = np.eye(n)
        return np.array([[np.asarray(op(eye[a], eye[b]), dtype=float) for b in range(n)] for a in range(n)])
    m = np.asarray(op, dtype=float)
    if m.shape != (n,) * 4:
        raise ValueError(f"operator stack must have shape {(n,) * 4}, got {m.shape}")
    return m


def tensor06_from_operator(op: Callable | np.ndarray, t, g=None) -> np.ndarray:
    """(0,6) tensor ``[a, b, c, d, e, f] = (op(X_e, X_f) . T)(X_a, X_b, X_c, X_d)``.

    ``op`` is either a callable returning the endomorphism matrix for two
    vectors, or a precomputed stack ``M[e, f, i, j]``.
    """
    t = np.asarray(t, dtype=float)
    n = t.shape[0]
    m = _stack_operator(op, n)
    return -(
        np.einsum("efia,ibcd->abcdef", m, t)
        + np.einsum("efib,aicd->abcdef", m, t)
        + np.einsum("efic,abid->abcdef", m, t)
        + np.einsum("efid,abci->abcdef", m, t)
    )


def tensor02_from_operator(op, s) -> np.ndarray:
    """``[a, b, e, f] = (op(X_e, X_f) . S)(X_a, X_b)`` for a (0,2) tensor ``S``."""
    s = np.asarray(s, dtype=float)
    m = _stack_operator(op, s.shape[0])
    return -(np.einsum("efia,ib->abef", m, s) + np.einsum("efib,ai->abef", m, s))


def frobenius_inner(t1, t2) -> float:
    t1 = np.asarray(t1, dtype=float)
    t2 = np.asarray(t2, dtype=float)
    if t1.shape != t2.shape:
        raise ValueError(f"shape mismatch {t1.shape} vs {t2.shape}")
    return float(np.vdot(t1, t2))


def contract(t, *vectors) -> float:
    """Evaluate a covariant tensor on vectors, one per slot."""
    t = np.asarray(t, dtype=float)
    if len(vectors) != t.ndim:
        raise ValueError(f"tensor has {t.ndim} slots, got {len(vectors)} vectors")
    out = t
    for v in reversed(vectors):
        out = out @ np.asarray(v, dtype=float)
    return float(out)


def relative_residual(violation, reference) -> float:
    """``max|violation| / (1 + max|reference|)``."""
    v = np.max(np.abs(violation)) if np.size(violation) else 0.0
    r = np.max(np.abs(reference)) if np.size(reference) else 0.0
    return float(v / (1.0 + r))


def curvature_like_residuals(t) -> dict[str, float]:
    """Relative violations of the algebraic curvature-tensor identities."""
    t = np.asarray(t, dtype=float)
    return {
        "antisym_12": relative_residual(t + t.transpose(1, 0, 2, 3), t),
        "antisym_34": relative_residual(t + t.transpose(0, 1, 3, 2), t),
        "pair_sym": relative_residual(t - t.transpose(2, 3, 0, 1), t),
        # T(h,i,j,k) + T(h,j,k,i) + T(h,k,i,j)
        "bianchi": relative_residual(t + t.transpose(0, 2, 3, 1) + t.transpose(0, 3, 1, 2), t),
    }


def tensor06_residuals(t) -> dict[str, float]:
    """Relative violations of properties a)-d) for an ``R.R``-type tensor."""
    t = np.asarray(t, dtype=float)
    # index order a b c d ; e f  <->  X1 X2 X3 X4 ; X Y
    return {
        "a_antisym_12": relative_residual(t + t.transpose(1, 0, 2, 3, 4, 5), t),
        "a_pair_sym": relative_residual(t - t.transpose(2, 3, 0, 1, 4, 5), t),
        # T(1,2,3,4) + T(1,3,4,2) + T(1,4,2,3)
        "b_bianchi": relative_residual(
            t + t.transpose(0, 2, 3, 1, 4, 5) + t.transpose(0, 3, 1, 2, 4, 5), t
        ),
        "c_antisym_last": relative_residual(t + t.transpose(0, 1, 2, 3, 5, 4), t),
        # T(1,2,3,4;5,6) + T(3,4,5,6;1,2) + T(5,6,1,2;3,4)
        "d_cyclic_pairs": relative_residual(
            t + t.transpose(4, 5, 0, 1, 2, 3) + t.transpose(2, 3, 4, 5, 0, 1), t
        ),
    }
