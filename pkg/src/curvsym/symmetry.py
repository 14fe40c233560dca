"""Sectional curvatures, pseudo-symmetry fits and the symmetry ladder.

The ladder decided here is

    flat -> constant curvature -> semi-symmetric -> pseudo-symmetric

together with the Ricci-side notions (Einstein, quasi-Einstein) and the
Weyl analogue of pseudo-symmetry.  All decisions are threshold based; the
thresholds come from the :class:`curvsym.curvature.Tolerances` profile.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg

from . import tensorlab as tl
from .curvature import CurvatureBundle, DiffConfig, Tolerances, curvature_bundle
from .metricspace import MetricField
from .tensorlab import DegeneratePlaneError, Plane

__all__ = [
    "CURVATURE_INDEPENDENT",
    "PseudoFit",
    "RicciSpectrum",
    "PointRecord",
    "ClassificationReport",
    "sectional_K",
    "deszcz_L",
    "fit_pseudo_coefficient",
    "ricci_spectrum",
    "nullity_index",
    "random_plane",
    "classify_bundle",
    "classify_bundles",
    "classify",
]

# returned by deszcz_L when the plane pair is curvature independent
CURVATURE_INDEPENDENT = None

PROPORTIONAL = "proportional"
ZERO_ZERO = "zero_denominator_zero_numerator"
ZERO_NONZERO = "zero_denominator_nonzero_numerator"
NOT_PROPORTIONAL = "not_proportional"

GUARD = 1e-10
BORDERLINE_BAND = (1e-2, 1e2)


def _norm(t) -> float:
    return float(np.max(np.abs(t))) if np.size(t) else 0.0


def sectional_K(b: CurvatureBundle, plane: Plane) -> float:
    """``R(v, w, w, v) / G(v, w, w, v)``."""
    plane.check(b.g)
    v, w = plane.v, plane.w
    return tl.contract(b.r04, v, w, w, v) / plane.area2(b.g)


def deszcz_L(b: CurvatureBundle, pi: Plane, pibar: Plane) -> float | None:
    """Deszcz sectional curvature of the pair ``(pi, pibar)``.

    Returns ``None`` (``CURVATURE_INDEPENDENT``) when the Tachibana
    contraction is below the guard.  The guard scales with
    ``|v ^ w|**2 |x ^ y|`` because the denominator is quadratic in the
    bivector of ``pi`` and linear in that of ``pibar``.
    """
    pi.check(b.g)
    pibar.check(b.g)
    v, w = pi.v, pi.w
    x, y = pibar.v, pibar.w
    num = tl.contract(b.rr, v, w, w, v, x, y)
    den = tl.contract(b.tach_r, v, w, w, v, x, y)
    scale = pi.area2(b.g) * np.sqrt(pibar.area2(b.g))
    if abs(den) <= GUARD * (1.0 + _norm(b.tach_r)) * scale:
        return CURVATURE_INDEPENDENT
    return num / den


@dataclass(frozen=True)
class PseudoFit:
    """Least-squares fit ``num ~ coefficient * den``.

    ``coefficient`` is ``None`` when the denominator counts as zero.
    """

    coefficient: float | None
    residual: float
    denominator_norm: float
    verdict: str

    @property
    def holds(self) -> bool:
        """Proportional, or both sides vanish (the space-form regime)."""
        return self.verdict in (PROPORTIONAL, ZERO_ZERO)

    def to_dict(self) -> dict:
        return {
            "coefficient": self.coefficient,
            "residual": self.residual,
            "denominator_norm": self.denominator_norm,
            "verdict": self.verdict,
        }


def fit_pseudo_coefficient(
    num,
    den,
    zero_tol: float = 1e-8,
    prop_tol: float = 1e-7,
    num_scale: float = 1.0,
    den_scale: float = 1.0,
) -> PseudoFit:
    """Fit ``num = L den``.

    A side counts as zero when its max-norm is at most ``zero_tol`` times
    its scale.  Otherwise ``L = <num, den> / <den, den>`` and the fit is
    proportional when ``|num - L den|_max / (1 + |num|_max) <= prop_tol``.
    """
    num = np.asarray(num, dtype=float)
    den = np.asarray(den, dtype=float)
    if num.shape != den.shape:
        raise ValueError(f"shape mismatch {num.shape} vs {den.shape}")
    num_norm, den_norm = _norm(num), _norm(den)
    if den_norm <= zero_tol * den_scale:
        verdict = ZERO_ZERO if num_norm <= zero_tol * num_scale else ZERO_NONZERO
        return PseudoFit(None, tl.relative_residual(num, num), den_norm, verdict)
    coef = tl.frobenius_inner(num, den) / tl.frobenius_inner(den, den)
    residual = tl.relative_residual(num - coef * den, num)
    verdict = PROPORTIONAL if residual <= prop_tol else NOT_PROPORTIONAL
    return PseudoFit(float(coef), residual, den_norm, verdict)


@dataclass(frozen=True)
class RicciSpectrum:
    """Sorted eigenvalues of the Ricci operator and their clusters."""

    eigenvalues: np.ndarray
    clusters: tuple[tuple[float, int], ...]

    @property
    def multiplicities(self) -> tuple[int, ...]:
        return tuple(m for _, m in self.clusters)

    @property
    def einstein(self) -> bool:
        return len(self.clusters) == 1

    @property
    def quasi_einstein(self) -> bool:
        n = len(self.eigenvalues)
        return max(self.multiplicities) >= n - 1

    def to_dict(self) -> dict:
        return {
            "eigenvalues": [float(x) for x in self.eigenvalues],
            "clusters": [{"value": v, "multiplicity": m} for v, m in self.clusters],
        }


def ricci_spectrum(b: CurvatureBundle, cluster_tol: float = 1e-6) -> RicciSpectrum:
    """Eigenvalues of ``g^-1 S`` with clustering tolerance ``cluster_tol (1 + max|lambda|)``."""
    if not (np.all(np.isfinite(b.ricci)) and np.all(np.isfinite(b.g))):
        raise np.linalg.LinAlgError("non-finite Ricci tensor or metric")
    sym_ricci = 0.5 * (b.ricci + b.ricci.T)
    eig = np.sort(scipy.linalg.eigh(sym_ricci, b.g, eigvals_only=True))
    tol = cluster_tol * (1.0 + float(np.max(np.abs(eig))))
    groups: list[list[float]] = [[eig[0]]]
    for lam in eig[1:]:
        if lam - groups[-1][-1] <= tol:
            groups[-1].append(lam)
        else:
            groups.append([lam])
    clusters = tuple((float(np.mean(grp)), len(grp)) for grp in groups)
    return RicciSpectrum(eig, clusters)


def nullity_index(b: CurvatureBundle, zero_tol: float = 1e-8) -> int:
    """Kernel dimension of ``z -> R(z, ., .)`` from a singular-value rank."""
    n = b.dim
    mat = b.r13.reshape(n, n**3)
    s = np.linalg.svd(mat, compute_uv=False)
    smax = float(s[0]) if s.size else 0.0
    rank = int(np.sum(s > zero_tol * (1.0 + smax)))
    return n - rank


def random_plane(rng: np.random.Generator, n: int, g=None) -> Plane:
    """Random non-degenerate plane with standard normal spanning vectors."""
    g = np.eye(n) if g is None else g
    while True:
        plane = Plane(rng.standard_normal(n), rng.standard_normal(n))
        try:
            plane.check(g, rtol=1e-6)
        except DegeneratePlaneError:
            continue
        return plane


# -- classification -------------------------------------------------------------

FLAG_NAMES = (
    "flat",
    "constant_curvature",
    "semi_symmetric",
    "pseudo_symmetric",
    "einstein",
    "quasi_einstein",
    "pseudo_symmetric_weyl",
    "conformally_flat",
)


@dataclass
class PointRecord:
    point: np.ndarray
    flags: dict[str, bool]
    curvature_constant: float | None
    L_R: float | None
    L_C: float | None
    fits: dict[str, PseudoFit]
    ricci: RicciSpectrum
    nullity_index: int
    residuals: dict[str, float]
    deszcz: dict[str, float | int | None]

    def to_dict(self) -> dict:
        return {
            "point": [float(x) for x in self.point],
            "flags": dict(self.flags),
            "curvature_constant": self.curvature_constant,
            "L_R": self.L_R,
            "L_C": self.L_C,
            "fits": {k: f.to_dict() for k, f in self.fits.items()},
            "ricci_spectrum": self.ricci.to_dict(),
            "nullity_index": self.nullity_index,
            "residuals": dict(self.residuals),
            "deszcz_samples": dict(self.deszcz),
        }


@dataclass
class ClassificationReport:
    per_point: list[PointRecord]
    aggregate: dict
    diagnostics: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "per_point": [r.to_dict() for r in self.per_point],
            "aggregate": self.aggregate,
            "diagnostics": list(self.diagnostics),
        }


def _borderline(name: str, value: float, threshold: float, where: str, out: list[str]):
    if threshold <= 0:
        return
    ratio = value / threshold
    if BORDERLINE_BAND[0] < ratio < BORDERLINE_BAND[1]:
        out.append(f"{where}: {name} = {value:.3e} is within two decades of its threshold {threshold:.3e}")


def _deszcz_samples(b: CurvatureBundle, planes: int, rng: np.random.Generator, tol: Tolerances):
    values = []
    for _ in range(planes):
        pi = random_plane(rng, b.dim, b.g)
        pibar = random_plane(rng, b.dim, b.g)
        val = deszcz_L(b, pi, pibar)
        if val is not None:
            values.append(val)
    if not values:
        return {"count": 0, "mean": None, "std": None, "isotropic": None}
    arr = np.asarray(values)
    mean = float(np.mean(arr))
    std = float(np.std(arr, ddof=1)) if arr.size > 1 else 0.0
    return {
        "count": int(arr.size),
        "mean": mean,
        "std": std,
        "isotropic": bool(std <= tol.constant * (1.0 + abs(mean))),
    }


def classify_bundle(
    b: CurvatureBundle,
    tol: Tolerances,
    planes: int = 0,
    rng: np.random.Generator | None = None,
    diagnostics: list[str] | None = None,
) -> PointRecord:
    """Pointwise classification of one curvature bundle."""
    diagnostics = [] if diagnostics is None else diagnostics
    where = f"point {np.round(b.point, 6).tolist()}"
    n = b.dim
    s_r = 1.0 + _norm(b.r04)
    s_g = 1.0 + _norm(b.g)
    s_gi = 1.0 + _norm(b.ginv)
    # typical sizes of R.R and of the Tachibana tensor built from R
    num_scale = s_gi * s_r * s_r
    den_scale = s_g * s_r

    flat_res = tl.relative_residual(b.r04, b.big_g)
    semi_res = _norm(b.rr) / num_scale
    weyl_res = _norm(b.weyl) / s_r
    _borderline("flatness residual", flat_res, tol.zero, where, diagnostics)
    _borderline("semi-symmetry residual", semi_res, tol.zero, where, diagnostics)

    cc_fit = fit_pseudo_coefficient(b.r04, b.big_g, tol.zero, tol.proportional, s_r, s_g * s_g)
    pr_fit = fit_pseudo_coefficient(b.rr, b.tach_r, tol.zero, tol.proportional, num_scale, den_scale)
    pc_fit = fit_pseudo_coefficient(b.cc, b.tach_c, tol.zero, tol.proportional, num_scale, den_scale)
    for label, fit in (("constant-curvature", cc_fit), ("pseudo-symmetry", pr_fit), ("Weyl pseudo-symmetry", pc_fit)):
        if fit.coefficient is not None:
            _borderline(f"{label} fit residual", fit.residual, tol.proportional, where, diagnostics)

    spectrum = ricci_spectrum(b, tol.cluster)
    flags = {
        "flat": flat_res <= tol.zero,
        "constant_curvature": cc_fit.verdict == PROPORTIONAL,
        "semi_symmetric": semi_res <= tol.zero,
        "pseudo_symmetric": pr_fit.holds,
        "einstein": spectrum.einstein,
        "quasi_einstein": spectrum.quasi_einstein,
        "pseudo_symmetric_weyl": pc_fit.holds,
        "conformally_flat": n <= 3 or weyl_res <= tol.zero,
    }
    # enforce the ladder; a lower rung implies every higher one
    flags["constant_curvature"] |= flags["flat"]
    flags["semi_symmetric"] |= flags["constant_curvature"]
    flags["pseudo_symmetric"] |= flags["semi_symmetric"]
    flags["quasi_einstein"] |= flags["einstein"]

    const = cc_fit.coefficient if flags["constant_curvature"] else None
    if flags["flat"]:
        const = 0.0
    l_r = pr_fit.coefficient if pr_fit.verdict == PROPORTIONAL else None
    l_c = pc_fit.coefficient if pc_fit.verdict == PROPORTIONAL else None
    rng = rng or np.random.default_rng(0)
    deszcz = _deszcz_samples(b, planes, rng, tol) if planes > 0 else {"count": 0}
    return PointRecord(
        point=np.asarray(b.point, dtype=float),
        flags={k: bool(flags[k]) for k in FLAG_NAMES},
        curvature_constant=const,
        L_R=l_r,
        L_C=l_c,
        fits={"constant_curvature": cc_fit, "pseudo_symmetric": pr_fit, "pseudo_symmetric_weyl": pc_fit},
        ricci=spectrum,
        nullity_index=nullity_index(b, tol.zero),
        residuals={"flat": flat_res, "semi_symmetric": semi_res, "weyl": weyl_res},
        deszcz=deszcz,
    )


def _constancy(values: Sequence[float], tol: float) -> dict:
    if not values:
        return {"count": 0, "mean": None, "max_deviation": None, "constant": None}
    arr = np.asarray(values, dtype=float)
    mean = float(np.mean(arr))
    dev = float(np.max(np.abs(arr - mean)))
    return {"count": int(arr.size), "mean": mean, "max_deviation": dev, "constant": bool(dev <= tol * (1.0 + abs(mean)))}


def _aggregate(records: list[PointRecord], tol: Tolerances, n: int) -> dict:
    flags = {k: all(r.flags[k] for r in records) for k in FLAG_NAMES}
    l_r = [r.L_R for r in records if r.L_R is not None]
    l_c = [r.L_C for r in records if r.L_C is not None]
    agg = {"flags": flags, "L_R": _constancy(l_r, tol.constant), "L_C": _constancy(l_c, tol.constant)}
    agg["constant_type"] = bool(flags["pseudo_symmetric"] and (not l_r or agg["L_R"]["constant"]))
    schur = {"applicable": n >= 3, "constant": None, "mean": None, "max_deviation": None}
    if flags["constant_curvature"]:
        c = _constancy([r.curvature_constant for r in records], tol.constant)
        schur.update(constant=c["constant"], mean=c["mean"], max_deviation=c["max_deviation"])
    agg["schur"] = schur
    samples = [r.deszcz for r in records if r.deszcz.get("count")]
    if samples:
        means = [s["mean"] for s in samples]
        pooled = _constancy(means, tol.constant)
        agg["deszcz_isotropy"] = {
            "pairs": int(sum(s["count"] for s in samples)),
            "mean": pooled["mean"],
            "max_point_std": float(max(s["std"] for s in samples)),
            "max_deviation_of_point_means": pooled["max_deviation"],
            "isotropic_everywhere": bool(all(s["isotropic"] for s in samples)),
        }
    nullities = sorted({r.nullity_index for r in records})
    agg["nullity_index"] = nullities
    return agg


def classify_bundles(
    bundles: Sequence[CurvatureBundle],
    planes_per_point: int = 0,
    tol: Tolerances | None = None,
    seed: int = 0,
) -> ClassificationReport:
    """Classify precomputed bundles; points keep their input order."""
    if not bundles:
        raise ValueError("need at least one point")
    tol = tol or DiffConfig().tolerances
    rng = np.random.default_rng(seed)
    diagnostics: list[str] = []
    records = [classify_bundle(b, tol, planes_per_point, rng, diagnostics) for b in bundles]
    agg = _aggregate(records, tol, bundles[0].dim)
    if agg["schur"]["applicable"] is False and agg["flags"]["constant_curvature"]:
        diagnostics.append("n = 2: pointwise constant curvature does not force a constant value")
    return ClassificationReport(records, agg, diagnostics)


def classify(
    field_: MetricField,
    points: Sequence,
    planes_per_point: int = 10,
    cfg: DiffConfig | None = None,
    seed: int = 0,
) -> ClassificationReport:
    """Classify ``field_`` on the symmetry ladder at the given chart points."""
    cfg = cfg or DiffConfig()
    bundles = [curvature_bundle(field_, p, cfg) for p in points]
    return classify_bundles(bundles, planes_per_point, cfg.tolerances, seed)
