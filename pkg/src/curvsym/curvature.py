"""Metric jets and the pointwise curvature bundle.

Index conventions (see also :mod:`curvsym.tensorlab`):

* ``gamma[i, j, k]`` is the Christoffel symbol with upper index ``i``;
* ``r13[a, b, c, i]`` is component ``i`` of ``R(X_a, X_b) X_c`` where
  ``R(X, Y) = [nabla_X, nabla_Y] - nabla_[X, Y]``;
* ``r04[a, b, c, d] = g(R(X_a, X_b) X_c, X_d)``, positive on ``R(v, w, w, v)``
  for the round sphere;
* ``ricci[b, c] = sum_a r13[a, b, c, a]``, giving ``S = (n - 1) g`` on the
  unit sphere.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import tensorlab as tl
from .jets import EvaluationDomainError, Jet
from .metricspace import MetricField

__all__ = [
    "Jet2",
    "Tolerances",
    "TOLERANCE_PROFILES",
    "DiffConfig",
    "CurvatureBundle",
    "jet2_at",
    "christoffel",
    "christoffel_derivative",
    "metric_compatibility_residual",
    "weyl_tensor",
    "curvature_bundle",
    "bundle_from_jet",
    "algebraic_bundle",
]


@dataclass(frozen=True)
class Jet2:
    """Metric value with first and second coordinate derivatives.

    ``dg[a, i, j] = d_a g_ij`` and ``d2g[a, b, i, j] = d_a d_b g_ij``.
    """

    g: np.ndarray
    dg: np.ndarray
    d2g: np.ndarray

    @property
    def dim(self) -> int:
        return self.g.shape[0]


@dataclass(frozen=True)
class Tolerances:
    zero: float
    proportional: float
    cluster: float
    constant: float


TOLERANCE_PROFILES = {
    "strict": Tolerances(zero=1e-8, proportional=1e-7, cluster=1e-6, constant=1e-6),
    "fd": Tolerances(zero=1e-4, proportional=1e-3, cluster=1e-3, constant=1e-3),
}


@dataclass(frozen=True)
class DiffConfig:
    mode: str = "jet"
    fd_step: float = 1e-4
    tol: str = "strict"

    def __post_init__(self):
        if self.mode not in ("jet", "fd"):
            raise ValueError(f"mode must be 'jet' or 'fd', got {self.mode!r}")
        if not 1e-8 <= self.fd_step <= 1e-1:
            raise ValueError("fd_step must lie in [1e-8, 1e-1]")
        if self.tol not in TOLERANCE_PROFILES:
            raise ValueError(f"unknown tolerance profile {self.tol!r}")

    @property
    def tolerances(self) -> Tolerances:
        return TOLERANCE_PROFILES[self.tol]


def _jet_mode(field_: MetricField, p) -> Jet2:
    n = field_.dim
    g = np.zeros((n, n))
    dg = np.zeros((n, n, n))
    d2g = np.zeros((n, n, n, n))
    for i, row in enumerate(field_.evaluate_jets(p, order=2)):
        for j, e in enumerate(row):
            if isinstance(e, Jet):
                g[i, j] = e.v
                dg[:, i, j] = e.g
                d2g[:, :, i, j] = e.h
            else:
                g[i, j] = e
    return Jet2(g, dg, d2g)


def _fd_derivatives(f, p, steps):
    n = len(p)
    f0 = f(p)
    dg = np.zeros((n,) + f0.shape)
    d2g = np.zeros((n, n) + f0.shape)
    eye = np.eye(n)
    for a in range(n):
        ea = eye[a] * steps[a]
        fp, fm = f(p + ea), f(p - ea)
        dg[a] = (fp - fm) / (2 * steps[a])
        d2g[a, a] = (fp - 2 * f0 + fm) / steps[a] ** 2
        for b in range(a):
            eb = eye[b] * steps[b]
            mixed = f(p + ea + eb) - f(p + ea - eb) - f(p - ea + eb) + f(p - ea - eb)
            d2g[a, b] = d2g[b, a] = mixed / (4 * steps[a] * steps[b])
    return f0, dg, d2g


def _fd_mode(field_: MetricField, p, step) -> Jet2:
    h = step * np.maximum(1.0, np.abs(p))
    g, dg1, d2g1 = _fd_derivatives(field_.evaluate, p, h)
    _, dg2, d2g2 = _fd_derivatives(field_.evaluate, p, h / 2)
    # Richardson: central differences carry an O(h^2) error
    return Jet2(g, (4 * dg2 - dg1) / 3, (4 * d2g2 - d2g1) / 3)


def jet2_at(field_: MetricField, p, cfg: DiffConfig | None = None) -> Jet2:
    cfg = cfg or DiffConfig()
    p = np.asarray(p, dtype=float)
    if p.shape != (field_.dim,) or not np.all(np.isfinite(p)):
        raise ValueError(f"point must be {field_.dim} finite coordinates")
    if not field_.contains(p):
        raise EvaluationDomainError(f"point {p.tolist()} lies outside the domain box of {field_.name}")
    try:
        jet = _jet_mode(field_, p) if cfg.mode == "jet" else _fd_mode(field_, p, cfg.fd_step)
    except (ZeroDivisionError, OverflowError) as err:
        raise EvaluationDomainError(str(err)) from err
    for arr in (jet.g, jet.dg, jet.d2g):
        if not np.all(np.isfinite(arr)):
            raise EvaluationDomainError(f"non-finite metric derivative at {p.tolist()}")
    return jet


def _lowered_christoffel(dg):
    # Gamma_{l jk} = 1/2 (d_j g_lk + d_k g_jl - d_l g_jk)
    return 0.5 * (np.einsum("jlk->ljk", dg) + np.einsum("kjl->ljk", dg) - dg)


def christoffel(j: Jet2) -> np.ndarray:
    try:
        ginv = np.linalg.inv(j.g)
    except np.linalg.LinAlgError as err:
        raise np.linalg.LinAlgError("singular metric matrix") from err
    return np.einsum("il,ljk->ijk", ginv, _lowered_christoffel(j.dg))


def christoffel_derivative(j: Jet2, ginv=None) -> np.ndarray:
    """``dgamma[m, i, j, k] = d_m Gamma^i_jk``."""
    ginv = np.linalg.inv(j.g) if ginv is None else ginv
    low = _lowered_christoffel(j.dg)
    d2 = j.d2g
    dlow = 0.5 * (
        np.einsum("mjlk->mljk", d2) + np.einsum("mkjl->mljk", d2) - d2
    )
    dginv = -np.einsum("ia,mab,bl->mil", ginv, j.dg, ginv)
    return np.einsum("mil,ljk->mijk", dginv, low) + np.einsum("il,mljk->mijk", ginv, dlow)


def metric_compatibility_residual(j: Jet2, gamma=None) -> float:
    """``max |d_a g_ij - Gamma^l_ai g_lj - Gamma^l_aj g_il|``."""
    gamma = christoffel(j) if gamma is None else gamma
    res = j.dg - np.einsum("lai,lj->aij", gamma, j.g) - np.einsum("laj,il->aij", gamma, j.g)
    return float(np.max(np.abs(res)))


def weyl_tensor(r04, ricci, tau, g, n=None) -> np.ndarray:
    """``C = R - (g ^ S)/(n - 2) + tau (g ^ g) / (2 (n - 1)(n - 2))``."""
    g = np.asarray(g, dtype=float)
    n = g.shape[0] if n is None else n
    if n < 3:
        raise ValueError("the Weyl tensor needs n >= 3")
    return (
        np.asarray(r04, dtype=float)
        - tl.kulkarni_nomizu(g, ricci) / (n - 2)
        + tau * tl.kulkarni_nomizu(g, g) / (2 * (n - 1) * (n - 2))
    )


@dataclass(frozen=True, eq=False)
class CurvatureBundle:
    """All pointwise curvature tensors at one chart point."""

    point: np.ndarray
    g: np.ndarray
    ginv: np.ndarray
    gamma: np.ndarray | None
    r13: np.ndarray
    r04: np.ndarray
    ricci: np.ndarray
    scalar: float
    weyl: np.ndarray
    big_g: np.ndarray
    rr: np.ndarray
    tach_r: np.ndarray
    cc: np.ndarray
    tach_c: np.ndarray
    rs: np.ndarray
    tach_s: np.ndarray
    extra: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.g.shape[0]

    def curvature_operator(self, x, y) -> np.ndarray:
        """Matrix of ``R(x, y)``."""
        return np.einsum("abci,a,b->ic", self.r13, np.asarray(x, float), np.asarray(y, float))


def _assemble(point, g, r13, gamma=None) -> CurvatureBundle:
    n = g.shape[0]
    ginv = np.linalg.inv(g)
    r04 = np.einsum("abci,id->abcd", r13, g)
    ricci = np.einsum("abca->bc", r13)
    tau = float(np.einsum("bc,bc->", ginv, ricci))
    if n >= 3:
        weyl = weyl_tensor(r04, ricci, tau, g, n)
    else:
        weyl = np.zeros_like(r04)
    bigg = tl.big_g(g)
    wedge = tl.metric_endomorphisms(g)
    r_ops = np.einsum("efci->efic", r13)
    c13 = np.einsum("efcd,id->efci", weyl, ginv)
    c_ops = np.einsum("efci->efic", c13)
    return CurvatureBundle(
        point=np.asarray(point, dtype=float),
        g=g,
        ginv=ginv,
        gamma=gamma,
        r13=r13,
        r04=r04,
        ricci=ricci,
        scalar=tau,
        weyl=weyl,
        big_g=bigg,
        rr=tl.tensor06_from_operator(r_ops, r04),
        tach_r=tl.tensor06_from_operator(wedge, r04),
        cc=tl.tensor06_from_operator(c_ops, weyl),
        tach_c=tl.tensor06_from_operator(wedge, weyl),
        rs=tl.tensor02_from_operator(r_ops, ricci),
        tach_s=tl.tensor02_from_operator(wedge, ricci),
        extra={"weyl13": c13},
    )


def bundle_from_jet(j: Jet2, point) -> CurvatureBundle:
    if j.dim < 2:
        raise ValueError("curvature needs a chart of dimension >= 2")
    ginv = np.linalg.inv(j.g)
    gam = np.einsum("il,ljk->ijk", ginv, _lowered_christoffel(j.dg))
    dgam = christoffel_derivative(j, ginv)
    # R^i_{c a b} = d_a Gamma^i_bc - d_b Gamma^i_ac + Gamma^i_am Gamma^m_bc - Gamma^i_bm Gamma^m_ac
    r13 = (
        np.einsum("aibc->abci", dgam)
        - np.einsum("biac->abci", dgam)
        + np.einsum("iam,mbc->abci", gam, gam)
        - np.einsum("ibm,mac->abci", gam, gam)
    )
    return _assemble(point, j.g, r13, gam)


def curvature_bundle(field_: MetricField, p, cfg: DiffConfig | None = None) -> CurvatureBundle:
    """Curvature bundle of ``field_`` at chart point ``p``."""
    return bundle_from_jet(jet2_at(field_, p, cfg), p)


def algebraic_bundle(r04, g=None, point=None) -> CurvatureBundle:
    """Bundle for a curvature tensor given directly at a point (no metric field).

    Used for frame-algebraic curvature tensors such as those produced by the
    Gauss equation; ``g`` defaults to the identity (orthonormal frame).
    """
    r04 = np.asarray(r04, dtype=float)
    n = r04.shape[0]
    g = np.eye(n) if g is None else np.asarray(g, dtype=float)
    r13 = np.einsum("abcd,di->abci", r04, np.linalg.inv(g))
    return _assemble(np.zeros(n) if point is None else point, g, r13)
