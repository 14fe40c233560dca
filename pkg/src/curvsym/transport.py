"""Geodesics, parallel transport, holonomy loops and squaroids.

Everything integrates with the classical fixed-step fourth-order
Runge-Kutta scheme.  Curves are parametrised on ``t in [0, 1]`` with the
initial velocity carrying the length, so a geodesic with initial velocity
``V`` has length ``|V|_g``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .curvature import christoffel, Jet2
from .jets import EvaluationDomainError, Jet
from .metricspace import MetricField
from .tensorlab import Plane

__all__ = [
    "TransportDomainError",
    "ShootingError",
    "CurvatureIndependentError",
    "NonOrthonormalBasisError",
    "CurveState",
    "SquaroidResult",
    "christoffel_at",
    "geodesic_step",
    "integrate_geodesic",
    "transport_along_segment",
    "holonomy_parallelogram",
    "rotate_in_plane",
    "geodesic_distance",
    "squaroid_riemann",
    "squaroid_deszcz",
    "richardson",
]

MAX_STEP = 1e-3


class TransportDomainError(EvaluationDomainError):
    """A curve left the domain box of the metric."""


class ShootingError(RuntimeError):
    """The geodesic-distance solver did not converge."""


class CurvatureIndependentError(ArithmeticError):
    """The Deszcz squaroid denominator is below the guard."""


class NonOrthonormalBasisError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class CurveState:
    """Position, velocity and the vectors transported along the curve."""

    point: np.ndarray
    velocity: np.ndarray
    carried: tuple[np.ndarray, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "point", np.asarray(self.point, dtype=float))
        object.__setattr__(self, "velocity", np.asarray(self.velocity, dtype=float))
        object.__setattr__(self, "carried", tuple(np.asarray(z, dtype=float) for z in self.carried))


@dataclass(frozen=True)
class SquaroidResult:
    epsilon: float
    eps_prime: float
    eps_star_prime: float | None = None
    eps_wedge_prime: float | None = None
    K_estimate: float | None = None
    L_estimate: float | None = None
    delta: float | None = None

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def christoffel_at(field_: MetricField, x) -> np.ndarray:
    """Christoffel symbols at ``x`` from first-order jets."""
    x = np.asarray(x, dtype=float)
    if not field_.contains(x):
        raise TransportDomainError(f"curve left the domain box at {x.tolist()}")
    n = field_.dim
    g = np.zeros((n, n))
    dg = np.zeros((n, n, n))
    for i, row in enumerate(field_.evaluate_jets(x, order=1)):
        for j, e in enumerate(row):
            if isinstance(e, Jet):
                g[i, j] = e.v
                dg[:, i, j] = e.g
            else:
                g[i, j] = e
    return christoffel(Jet2(g, dg, None))


def _rhs(field_, x, v, zs):
    gam = christoffel_at(field_, x)
    gv = np.einsum("ijk,j->ik", gam, v)
    return v, -gv @ v, [-gv @ z for z in zs]


def _rk4(field_, x, v, zs, dt):
    k1 = _rhs(field_, x, v, zs)
    k2 = _rhs(field_, x + 0.5 * dt * k1[0], v + 0.5 * dt * k1[1], [z + 0.5 * dt * d for z, d in zip(zs, k1[2])])
    k3 = _rhs(field_, x + 0.5 * dt * k2[0], v + 0.5 * dt * k2[1], [z + 0.5 * dt * d for z, d in zip(zs, k2[2])])
    k4 = _rhs(field_, x + dt * k3[0], v + dt * k3[1], [z + dt * d for z, d in zip(zs, k3[2])])

    def comb(i, base):
        return base + dt / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i])

    zs_new = [z + dt / 6.0 * (a + 2 * b + 2 * c + d) for z, a, b, c, d in zip(zs, k1[2], k2[2], k3[2], k4[2])]
    return comb(0, x), comb(1, v), zs_new


def geodesic_step(field_: MetricField, state: CurveState, s: float, h: float = MAX_STEP) -> CurveState:
    """Advance the geodesic and its transported vectors by parameter length ``s``.

    Uses ``ceil(s / h)`` equal RK4 steps.  With a unit-speed initial
    velocity ``s`` is the arclength.
    """
    if not h > 0 or s < 0:
        raise ValueError("need h > 0 and s >= 0")
    steps = max(1, math.ceil(s / h - 1e-12))
    dt = s / steps
    x, v, zs = state.point, state.velocity, list(state.carried)
    for _ in range(steps):
        x, v, zs = _rk4(field_, x, v, zs, dt)
    if not field_.contains(x):
        raise TransportDomainError(f"curve left the domain box at {x.tolist()}")
    return CurveState(x, v, tuple(zs))


def integrate_geodesic(field_: MetricField, p, velocity, carried=(), length: float | None = None, h: float = MAX_STEP):
    """Geodesic on ``t in [0, 1]`` from ``p`` with initial ``velocity``.

    The step count keeps the arclength step at most ``h``.  ``length`` is
    the g-length of ``velocity`` and is computed when omitted.
    """
    p = np.asarray(p, dtype=float)
    velocity = np.asarray(velocity, dtype=float)
    if length is None:
        g = field_.evaluate(p)
        length = float(np.sqrt(velocity @ g @ velocity))
    steps = max(100, math.ceil(length / h))
    state = CurveState(p, velocity, tuple(carried))
    return geodesic_step(field_, state, 1.0, 1.0 / steps)


def transport_along_segment(field_: MetricField, p, d, zs, h: float = MAX_STEP):
    """Parallel transport of ``zs`` along the coordinate segment ``p + t d``."""
    p = np.asarray(p, dtype=float)
    d = np.asarray(d, dtype=float)
    zs = [np.asarray(z, dtype=float) for z in zs]
    steps = max(1, math.ceil(np.max(np.abs(d)) / h))
    dt = 1.0 / steps

    def rhs(t, zlist):
        gam = christoffel_at(field_, p + t * d)
        gd = np.einsum("ijk,j->ik", gam, d)
        return [-gd @ z for z in zlist]

    t = 0.0
    for _ in range(steps):
        k1 = rhs(t, zs)
        k2 = rhs(t + dt / 2, [z + dt / 2 * k for z, k in zip(zs, k1)])
        k3 = rhs(t + dt / 2, [z + dt / 2 * k for z, k in zip(zs, k2)])
        k4 = rhs(t + dt, [z + dt * k for z, k in zip(zs, k3)])
        zs = [z + dt / 6 * (a + 2 * b + 2 * c + e) for z, a, b, c, e in zip(zs, k1, k2, k3, k4)]
        t += dt
    return zs


def holonomy_parallelogram(field_: MetricField, p, h_axis: int, k_axis: int, dx: float, dy: float, z, h: float = MAX_STEP):
    """Transport ``z`` (or a list of vectors) once around a coordinate parallelogram.

    The loop runs ``+dy`` along ``k_axis``, ``+dx`` along ``h_axis``, then
    ``-dy`` and ``-dx``.  With this orientation the defect satisfies
    ``z* - z = R(X_h, X_k) z dx dy + O(3)``.
    """
    p = np.asarray(p, dtype=float)
    n = p.size
    if h_axis == k_axis or not (0 <= h_axis < n and 0 <= k_axis < n):
        raise ValueError("need two distinct coordinate axes")
    single = np.ndim(z) == 1
    zs = [np.asarray(z, dtype=float)] if single else [np.asarray(v, dtype=float) for v in z]
    ex = np.zeros(n)
    ex[h_axis] = dx
    ey = np.zeros(n)
    ey[k_axis] = dy
    corner = p
    for leg in (ey, ex, -ey, -ex):
        zs = transport_along_segment(field_, corner, leg, zs, h)
        corner = corner + leg
    return zs[0] if single else zs


def rotate_in_plane(g, z, x, y, dphi: float, atol: float = 1e-10):
    """Finite rotation ``exp(dphi (x ^_g y)) z`` in the plane of ``x, y``.

    The component of ``z`` g-orthogonal to the plane is kept.  To first
    order this is ``z + (x ^_g y) z dphi``; note that ``(x ^_g y) x = -y``,
    so a positive angle turns ``x`` toward ``-y``.
    """
    g = np.asarray(g, dtype=float)
    z, x, y = (np.asarray(a, dtype=float) for a in (z, x, y))
    gram = np.array([[x @ g @ x, x @ g @ y], [y @ g @ x, y @ g @ y]])
    if np.max(np.abs(gram - np.eye(2))) > atol:
        raise NonOrthonormalBasisError("rotation plane basis must be g-orthonormal")
    a, b = x @ g @ z, y @ g @ z
    c, s = math.cos(dphi), math.sin(dphi)
    perp = z - a * x - b * y
    return perp + (a * c + b * s) * x + (b * c - a * s) * y


def geodesic_distance(
    field_: MetricField,
    p,
    q,
    miss_tol: float | None = None,
    max_iter: int = 40,
    h: float = MAX_STEP,
):
    """Length of the shortest nearby geodesic from ``p`` to ``q`` by shooting.

    Chord-Newton on the endpoint miss with a finite-difference Jacobian
    computed once at the coordinate-difference guess.  Iterates until the
    miss is below ``miss_tol`` (default ``1e-15 max(|q - p|, 1e-300)``) or
    stops improving; raises :class:`ShootingError` if the final miss
    exceeds ``1e-12``.  Returns ``(length, initial_velocity, miss)``.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    n = p.size
    gp = field_.evaluate(p)
    diff = q - p
    if miss_tol is None:
        miss_tol = 1e-15 * max(float(np.max(np.abs(diff))), 1e-300)

    def length_of(v):
        return float(np.sqrt(v @ gp @ v))

    def miss(v):
        return integrate_geodesic(field_, p, v, length=length_of(v), h=h).point - q

    v = diff.copy()
    if not np.any(v):
        return 0.0, v, 0.0
    f = miss(v)
    eta = 1e-7 * float(np.max(np.abs(v)))
    jac = np.empty((n, n))
    for j in range(n):
        dv = np.zeros(n)
        dv[j] = eta
        jac[:, j] = (miss(v + dv) - f) / eta
    best = float(np.max(np.abs(f)))
    for _ in range(max_iter):
        if best <= miss_tol:
            break
        v_new = v - np.linalg.solve(jac, f)
        f_new = miss(v_new)
        err = float(np.max(np.abs(f_new)))
        if err >= best:
            break
        v, f, best = v_new, f_new, err
    if best > 1e-12:
        raise ShootingError(f"shooting stalled with endpoint miss {best:.3e}")
    return length_of(v), v, best


def _squaroid_side(field_, p, v, w, epsilon, h):
    """``eps'`` of the squaroid on the g-orthonormal pair ``(v, w)`` at ``p``."""
    alpha = integrate_geodesic(field_, p, epsilon * w, carried=(v,), length=epsilon, h=h)
    q = alpha.point
    v_star = alpha.carried[0]
    beta_end = integrate_geodesic(field_, p, epsilon * v, length=epsilon, h=h).point
    gamma_end = integrate_geodesic(field_, q, epsilon * v_star, length=epsilon, h=h).point
    dist, _, _ = geodesic_distance(field_, beta_end, gamma_end, h=h)
    return dist


def _check_orthonormal(g, v, w, atol=1e-10):
    gram = np.array([[v @ g @ v, v @ g @ w], [w @ g @ v, w @ g @ w]])
    if np.max(np.abs(gram - np.eye(2))) > atol:
        raise NonOrthonormalBasisError("squaroid needs a g-orthonormal pair (v, w)")


def squaroid_riemann(field_: MetricField, p, v, w, epsilon: float) -> SquaroidResult:
    """Levi-Civita squaroid estimate ``K = (eps**2 - eps'**2) / eps**4``."""
    p = np.asarray(p, dtype=float)
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    _check_orthonormal(field_.evaluate(p), v, w)
    h = min(MAX_STEP, epsilon / 100)
    eps1 = _squaroid_side(field_, p, v, w, epsilon, h)
    return SquaroidResult(epsilon, eps1, K_estimate=(epsilon**2 - eps1**2) / epsilon**4)


def squaroid_deszcz(
    field_: MetricField,
    p,
    v,
    w,
    x_axis: int,
    y_axis: int,
    epsilon: float,
    delta: float,
    guard: float = 1e-3,
) -> SquaroidResult:
    """Deszcz squaroid estimate ``L = (eps*'^2 - eps'^2) / (eps^'^2 - eps'^2)``.

    ``eps*'`` comes from the pair transported around the coordinate loop of
    side ``delta`` in the ``(x_axis, y_axis)`` plane, ``eps^'`` from the pair
    rotated in the same coordinate plane.  The coordinate bivector has
    g-area ``a``, so the rotation angle for the g-orthonormalised plane is
    ``delta**2 * a``.  Raises :class:`CurvatureIndependentError` when the
    denominator is below ``guard * epsilon**4 * delta**2 * a``.
    """
    p = np.asarray(p, dtype=float)
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    g = field_.evaluate(p)
    _check_orthonormal(g, v, w)
    n = p.size
    h = min(MAX_STEP, epsilon / 100)
    eps1 = _squaroid_side(field_, p, v, w, epsilon, h)

    v_star, w_star = holonomy_parallelogram(field_, p, x_axis, y_axis, delta, delta, [v, w])
    star = Plane(v_star, w_star).orthonormal(g)
    eps_star = _squaroid_side(field_, p, star.v, star.w, epsilon, h)

    eye = np.eye(n)
    coord_plane = Plane(eye[x_axis], eye[y_axis])
    area = math.sqrt(coord_plane.area2(g))
    ortho = coord_plane.orthonormal(g)
    dphi = delta * delta * area
    v_rot = rotate_in_plane(g, v, ortho.v, ortho.w, dphi)
    w_rot = rotate_in_plane(g, w, ortho.v, ortho.w, dphi)
    rot = Plane(v_rot, w_rot).orthonormal(g)
    eps_wedge = _squaroid_side(field_, p, rot.v, rot.w, epsilon, h)

    num = eps_star**2 - eps1**2
    den = eps_wedge**2 - eps1**2
    result = SquaroidResult(
        epsilon,
        eps1,
        eps_star_prime=eps_star,
        eps_wedge_prime=eps_wedge,
        K_estimate=(epsilon**2 - eps1**2) / epsilon**4,
        delta=delta,
    )
    if abs(den) <= guard * epsilon**4 * dphi:
        raise CurvatureIndependentError(
            f"squaroid denominator {den:.3e} below guard; the plane pair is curvature independent at this resolution"
        )
    return replace(result, L_estimate=num / den)


def richardson(coarse: float, fine: float, order: int = 1) -> float:
    """Two-point extrapolation with step ratio 2 and error ``O(h**order)``."""
    f = 2**order
    return (f * fine - coarse) / (f - 1)

