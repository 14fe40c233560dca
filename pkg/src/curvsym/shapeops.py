"""Frame-algebraic submanifold curvature from shape operators.

All tensors live on an orthonormal tangent frame ``E_1..E_n`` with an
orthonormal normal frame ``xi_1..xi_m``; no embedding is ever built.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import tensorlab as tl

__all__ = [
    "AmbiguousSpectrumError",
    "ShapeOperatorSet",
    "WintgenQuantities",
    "PrincipalCase",
    "classify_principal_curvatures",
    "gauss_curvature_tensor",
    "normal_curvature",
    "wintgen_quantities",
    "wintgen_ideal_frames",
    "hypersurface_from_spectrum",
    "random_shape_operator_set",
    "load_shape_operators",
    "dump_shape_operators",
]


class AmbiguousSpectrumError(ValueError):
    """The spectrum sits too close to a clustering boundary to classify."""


@dataclass(frozen=True, eq=False)
class ShapeOperatorSet:
    """Shape operators ``A_1..A_m`` (symmetric ``n x n``) and ambient curvature."""

    ops: tuple[np.ndarray, ...]
    ambient_c: float = 0.0

    def __post_init__(self):
        ops = tuple(np.asarray(a, dtype=float) for a in self.ops)
        if not ops:
            raise ValueError("need at least one shape operator (m >= 1)")
        n = ops[0].shape[0] if ops[0].ndim == 2 else 0
        if n < 2:
            raise ValueError("shape operators must be n x n with n >= 2")
        for a in ops:
            if a.shape != (n, n):
                raise ValueError(f"all shape operators must be {n} x {n}")
            if not np.all(np.isfinite(a)):
                raise ValueError("shape operators must be finite")
        if not math.isfinite(self.ambient_c):
            raise ValueError("ambient curvature must be finite")
        object.__setattr__(self, "ops", tuple(0.5 * (a + a.T) for a in ops))
        object.__setattr__(self, "ambient_c", float(self.ambient_c))

    @property
    def n(self) -> int:
        return self.ops[0].shape[0]

    @property
    def m(self) -> int:
        return len(self.ops)

    def to_dict(self) -> dict:
        return {"ambient_c": self.ambient_c, "ops": [a.tolist() for a in self.ops]}


@dataclass(frozen=True)
class WintgenQuantities:
    rho: float
    rho_perp: float
    h2: float
    ambient_c: float

    @property
    def slack(self) -> float:
        """``H^2 - rho_perp + c - rho``; non-negative by the inequality."""
        return self.h2 - self.rho_perp + self.ambient_c - self.rho

    def to_dict(self) -> dict:
        return {
            "rho": self.rho,
            "rho_perp": self.rho_perp,
            "h2": self.h2,
            "ambient_c": self.ambient_c,
            "slack": self.slack,
        }


@dataclass(frozen=True)
class PrincipalCase:
    """Outcome of the hypersurface case table (``case`` is ``None`` off-table)."""

    case: int | None
    flags: dict[str, bool]
    lam: float | None = None
    mu: float | None = None
    L: float | None = None
    diagnostics: tuple[str, ...] = field(default=())

    def to_dict(self) -> dict:
        return {
            "case": self.case,
            "flags": dict(self.flags),
            "lambda": self.lam,
            "mu": self.mu,
            "L": self.L,
            "diagnostics": list(self.diagnostics),
        }


CASE_LABELS = {
    1: "totally geodesic",
    2: "totally umbilical",
    3: "cylindrical",
    4: "semi-symmetric, one repeated non-zero principal curvature",
    5: "semi-symmetric, two simple non-zero principal curvatures",
    6: "conformally flat, quasi-umbilical",
    7: "pseudo-symmetric, two repeated non-zero principal curvatures",
}


def _cluster(values: np.ndarray, tol: float):
    groups: list[list[float]] = [[values[0]]]
    for x in values[1:]:
        if x - groups[-1][-1] <= tol:
            groups[-1].append(x)
        else:
            groups.append([x])
    return groups


def classify_principal_curvatures(spectrum, tol: float = 1e-9, strict: bool = False) -> PrincipalCase:
    """Match a principal-curvature spectrum against the seven hypersurface cases.

    Values within ``tol`` are merged and values within ``tol`` of zero count
    as zero.  Spectra with a gap or a near-zero value inside ``(tol, 10 tol]``
    could flip pattern under a small perturbation; they are classified but
    carry a diagnostic, or raise :class:`AmbiguousSpectrumError` when
    ``strict``.
    """
    vals = np.sort(np.asarray(spectrum, dtype=float))
    n = vals.size
    if n < 3:
        raise ValueError("the case table needs n >= 3 principal curvatures")
    if not np.all(np.isfinite(vals)):
        raise ValueError("principal curvatures must be finite")
    diagnostics = []
    groups = _cluster(vals, tol)
    centres = [float(np.mean(g)) for g in groups]
    for a, b in zip(centres, centres[1:]):
        if b - a <= 10 * tol:
            diagnostics.append(f"principal curvatures {a!r} and {b!r} are close to merging")
    for c in centres:
        if tol < abs(c) <= 10 * tol:
            diagnostics.append(f"principal curvature {c!r} is close to zero")
    if strict and diagnostics:
        raise AmbiguousSpectrumError("; ".join(diagnostics))

    zero_mult = sum(len(g) for g, c in zip(groups, centres) if abs(c) <= tol)
    nonzero = [(c, len(g)) for g, c in zip(groups, centres) if abs(c) > tol]
    case = None
    lam = mu = None
    if not nonzero:
        case = 1
    elif len(nonzero) == 1:
        lam, k = nonzero[0]
        case = 2 if zero_mult == 0 else (3 if k == 1 else 4)
    elif len(nonzero) == 2:
        (a, ka), (b, kb) = nonzero
        if zero_mult == 0:
            if min(ka, kb) == 1:
                case = 6
                # lambda is the simple one, mu the repeated one
                (lam, _), (mu, _) = sorted(nonzero, key=lambda t: t[1])
            else:
                case, lam, mu = 7, a, b
        elif ka == kb == 1:
            case, lam, mu = 5, a, b

    mults = [len(g) for g in groups]
    flags = {
        "flat": case in (1, 3),
        "constant_curvature": case in (1, 2, 3),
        "semi_symmetric": case in (1, 2, 3, 4, 5),
        "pseudo_symmetric": case is not None,
        # n = 3 always; n > 3 exactly for quasi-umbilical spectra
        "conformally_flat": n == 3 or max(mults) >= n - 1,
    }
    if case in (6, 7):
        L = lam * mu
    elif case in (4, 5):
        L = 0.0
    else:
        L = None
    return PrincipalCase(case, flags, lam, mu, L, tuple(diagnostics))


def gauss_curvature_tensor(s: ShapeOperatorSet) -> np.ndarray:
    """``R = c G_0 + sum_a [A_a(X1, X4) A_a(X2, X3) - A_a(X1, X3) A_a(X2, X4)]``."""
    r = s.ambient_c * tl.big_g(np.eye(s.n))
    for a in s.ops:
        r = r + np.einsum("hk,ij->hijk", a, a) - np.einsum("hj,ik->hijk", a, a)
    return r


def normal_curvature(s: ShapeOperatorSet) -> np.ndarray:
    """``Rperp[i, j, a, b] = ([A_a, A_b])_ij``."""
    ops = np.array(s.ops)
    prod = np.einsum("aik,bkj->ijab", ops, ops)
    return prod - prod.transpose(0, 1, 3, 2)


def wintgen_quantities(s: ShapeOperatorSet) -> WintgenQuantities:
    n = s.n
    norm = 2.0 / (n * (n - 1))
    r = gauss_curvature_tensor(s)
    iu, ju = np.triu_indices(n, k=1)
    rho = norm * float(np.sum(r[iu, ju, ju, iu]))
    rp = normal_curvature(s)
    ia, ib = np.triu_indices(s.m, k=1)
    sq = float(np.sum(rp[iu, ju][:, ia, ib] ** 2)) if s.m > 1 else 0.0
    rho_perp = norm * math.sqrt(sq)
    mean = np.array([np.trace(a) for a in s.ops]) / n
    return WintgenQuantities(rho, rho_perp, float(mean @ mean), s.ambient_c)


def wintgen_ideal_frames(n: int, m: int, lam: float, mu: float, theta: float, ambient_c: float = 0.0) -> ShapeOperatorSet:
    """The equality-case shape operators ``A_1, A_2, A_3`` (others zero)."""
    if n < 2:
        raise ValueError("need n >= 2")
    if m < 3:
        raise ValueError("the ideal form needs m >= 3 normal directions")
    a1 = lam * np.eye(n)
    a1[0, 0] += mu * math.cos(theta)
    a1[1, 1] -= mu * math.cos(theta)
    a2 = np.zeros((n, n))
    a2[0, 0] = mu * math.sin(theta)
    a2[1, 1] = -mu * math.sin(theta)
    a3 = np.zeros((n, n))
    a3[0, 1] = a3[1, 0] = mu
    ops = [a1, a2, a3] + [np.zeros((n, n))] * (m - 3)
    return ShapeOperatorSet(tuple(ops), ambient_c)


def hypersurface_from_spectrum(spectrum, ambient_c: float = 0.0) -> ShapeOperatorSet:
    """Single diagonal shape operator with the given principal curvatures."""
    return ShapeOperatorSet((np.diag(np.asarray(spectrum, dtype=float)),), ambient_c)


def random_shape_operator_set(rng: np.random.Generator, n: int, m: int, ambient_c: float = 0.0) -> ShapeOperatorSet:
    """Entries uniform in ``[-1, 1]``, then symmetrised."""
    ops = []
    for _ in range(m):
        a = rng.uniform(-1.0, 1.0, size=(n, n))
        ops.append(np.triu(a) + np.triu(a, 1).T)
    return ShapeOperatorSet(tuple(ops), ambient_c)


def load_shape_operators(doc) -> ShapeOperatorSet:
    """Parse ``{"ambient_c": c, "ops": [matrix, ...]}`` from a dict or JSON text."""
    if isinstance(doc, (str, bytes)):
        doc = json.loads(doc)
    if not isinstance(doc, dict) or "ops" not in doc:
        raise ValueError('shape-operator document needs an "ops" list')
    return ShapeOperatorSet(tuple(np.asarray(a, dtype=float) for a in doc["ops"]), float(doc.get("ambient_c", 0.0)))


def dump_shape_operators(s: ShapeOperatorSet) -> str:
    return json.dumps(s.to_dict())
