import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from curvsym import tensorlab as tl
from curvsym.curvature import (
    DiffConfig,
    algebraic_bundle,
    christoffel,
    curvature_bundle,
    jet2_at,
    metric_compatibility_residual,
)
from curvsym.jets import EvaluationDomainError
from curvsym.metricspace import catalog_metric, parse_metric_spec, sample_points

from _metrics import CATALOG_ALL, build, catalog_id

SOL = catalog_metric("sol")


def test_sol_jet_by_hand():
    j = jet2_at(SOL, (0.0, 0.0, 0.0))
    np.testing.assert_array_equal(j.g, np.eye(3))
    assert j.dg[2, 0, 0] == 2.0 and j.dg[2, 1, 1] == -2.0
    assert j.d2g[2, 2, 0, 0] == 4.0 and j.d2g[2, 2, 1, 1] == 4.0
    assert np.count_nonzero(j.dg) == 2


def test_sol_christoffels_by_hand():
    gam = christoffel(jet2_at(SOL, (0.0, 0.0, 0.0)))
    expected = np.zeros((3, 3, 3))
    expected[0, 0, 2] = expected[0, 2, 0] = 1.0
    expected[1, 1, 2] = expected[1, 2, 1] = -1.0
    expected[2, 0, 0] = -1.0
    expected[2, 1, 1] = 1.0
    np.testing.assert_allclose(gam, expected, atol=1e-15)


@pytest.mark.parametrize("z", [-1.5, 0.0, 0.7])
def test_sol_curvature_by_hand(z):
    b = curvature_bundle(SOL, (0.3, -0.4, z))
    e = np.diag([math.exp(-z), math.exp(z), 1.0])  # orthonormal frame
    K = lambda i, j: tl.contract(b.r04, e[i], e[j], e[j], e[i])
    assert K(0, 1) == pytest.approx(1.0, abs=1e-12)
    assert K(0, 2) == pytest.approx(-1.0, abs=1e-12)
    assert K(1, 2) == pytest.approx(-1.0, abs=1e-12)
    assert b.scalar == pytest.approx(-2.0, abs=1e-12)
    np.testing.assert_allclose(e @ b.ricci @ e, np.diag([0.0, 0.0, -2.0]), atol=1e-12)


@pytest.mark.parametrize(
    "n, c", [(2, 1.0), (2, -1.0), (3, 1.0), (3, -1.0), (4, 0.5), (4, -1.0)]
)
def test_space_forms_have_constant_curvature(n, c):
    f = catalog_metric("space_form", n=n, c=c)
    for p in sample_points(f, 4, seed=2):
        b = curvature_bundle(f, p)
        np.testing.assert_allclose(b.r04, c * b.big_g, atol=1e-11)
        np.testing.assert_allclose(b.ricci, (n - 1) * c * b.g, atol=1e-11)
        assert b.scalar == pytest.approx(n * (n - 1) * c, abs=1e-10)


def test_unit_sphere_sectional_sign():
    b = curvature_bundle(catalog_metric("space_form", n=2, c=1.0), (0.0, 0.0))
    assert tl.contract(b.r04, [1, 0], [0, 1], [0, 1], [1, 0]) == pytest.approx(1.0)
    # R(e0, e1) e1 = e0 under R(X, Y) = [nabla_X, nabla_Y] - nabla_[X, Y]
    np.testing.assert_allclose(b.curvature_operator([1, 0], [0, 1]) @ [0, 1], [1, 0], atol=1e-14)


@pytest.mark.parametrize(
    "entry, tau",
    [
        (("thurston", {"m": 0.0, "l": 1.0}), -0.5),
        (("product_s2xe1", {}), 2.0),
        (("product_h2xe1", {}), -2.0),
        (("euclidean", {"n": 3}), 0.0),
    ],
    ids=["nil", "s2xe1", "h2xe1", "e3"],
)
def test_scalar_curvature_by_hand(entry, tau):
    f = build(entry)
    for p in sample_points(f, 5, seed=7):
        assert curvature_bundle(f, p).scalar == pytest.approx(tau, abs=1e-10)


@pytest.mark.parametrize("entry", CATALOG_ALL, ids=catalog_id)
def test_bundle_identities_on_catalog(entry):
    f = build(entry)
    for p in sample_points(f, 3, seed=11):
        j = jet2_at(f, p)
        b = curvature_bundle(f, p)
        assert max(tl.curvature_like_residuals(b.r04).values()) < 1e-12
        assert metric_compatibility_residual(j) < 1e-12
        for t in (b.rr, b.tach_r, b.cc, b.tach_c):
            assert max(tl.tensor06_residuals(t).values()) < 1e-11
        assert tl.relative_residual(tl.tensor06_from_operator(tl.metric_endomorphisms(b.g), b.big_g), b.big_g) < 1e-12
        if b.dim >= 3:
            trace = np.einsum("ad,abcd->bc", b.ginv, b.weyl)
            assert tl.relative_residual(trace, b.r04) < 1e-12
        if b.dim == 3:
            assert tl.relative_residual(b.weyl, b.r04) < 1e-12


@pytest.mark.parametrize("k", [0.25, 2.0, 9.0])
def test_homothetic_scaling_law(k):
    f = catalog_metric("thurston", m=-0.25, l=1.0)
    p = (0.2, -0.1, 0.4)
    b, bk = curvature_bundle(f, p), curvature_bundle(f.scaled(k), p)
    np.testing.assert_allclose(bk.r13, b.r13, atol=1e-12)
    np.testing.assert_allclose(bk.r04, k * b.r04, atol=1e-12 * k)
    np.testing.assert_allclose(bk.ricci, b.ricci, atol=1e-12)
    assert bk.scalar == pytest.approx(b.scalar / k, rel=1e-12)


BASE_4D = """\
dim 4
coords a b c d
domain a -0.5 0.5
domain b -0.5 0.5
domain c -0.5 0.5
domain d -0.5 0.5
g 0 0 = 1 + a^2
g 1 1 = exp(a*b)
g 2 2 = 1 + 0.3*sin(c + d)
g 3 3 = 2 + b*c
g 0 1 = 0.1*c
"""


def _conformal(text, f):
    lines = []
    for line in text.splitlines():
        if line.startswith("g "):
            head, rhs = line.split("=", 1)
            line = f"{head}= exp({f})*({rhs.strip()})"
        lines.append(line)
    return "\n".join(lines) + "\n"


def test_weyl_13_is_conformally_invariant_in_4d():
    base = parse_metric_spec(BASE_4D)
    warped = parse_metric_spec(_conformal(BASE_4D, "0.4*a - 0.2*d + 0.1*b*c"))
    for p in sample_points(base, 3, seed=4):
        c0 = curvature_bundle(base, p).extra["weyl13"]
        c1 = curvature_bundle(warped, p).extra["weyl13"]
        assert np.abs(c0).max() > 1e-3
        np.testing.assert_allclose(c1, c0, atol=1e-11)


def test_weyl_vanishes_for_conformally_flat_4d():
    flat = parse_metric_spec(
        "dim 4\ncoords a b c d\ng 0 0 = exp(a + b*c)\ng 1 1 = exp(a + b*c)\ng 2 2 = exp(a + b*c)\ng 3 3 = exp(a + b*c)\n"
    )
    b = curvature_bundle(flat, (0.1, 0.2, -0.3, 0.4))
    assert np.abs(b.weyl).max() < 1e-12
    assert np.abs(b.r04).max() > 1e-2


@given(
    x=st.floats(-2.5, 2.5), y=st.floats(-2.5, 2.5), z=st.floats(-1.8, 1.8)
)
@settings(max_examples=20, deadline=None)
def test_fd_mode_agrees_with_jets(x, y, z):
    p = (x, y, z)
    bj = curvature_bundle(SOL, p)
    bf = curvature_bundle(SOL, p, DiffConfig(mode="fd", fd_step=1e-3, tol="fd"))
    scale = 1 + np.abs(bj.r04).max()
    assert np.abs(bf.r04 - bj.r04).max() / scale < 1e-5


def test_jet_errors():
    with pytest.raises(EvaluationDomainError):
        jet2_at(SOL, (0.0, 0.0, 5.0))
    with pytest.raises(ValueError):
        jet2_at(SOL, (0.0, 0.0))
    with pytest.raises(ValueError):
        jet2_at(SOL, (0.0, np.nan, 0.0))
    bad = parse_metric_spec("dim 1\ncoords x\ng 0 0 = log(x)\n")
    with pytest.raises(EvaluationDomainError):
        jet2_at(bad, (-0.5,))


@pytest.mark.parametrize(
    "kwargs", [{"mode": "exact"}, {"fd_step": 0.5}, {"fd_step": 1e-9}, {"tol": "loose"}]
)
def test_diff_config_validation(kwargs):
    with pytest.raises(ValueError):
        DiffConfig(**kwargs)


@pytest.mark.parametrize("n", [2, 3, 5])
def test_algebraic_bundle_of_constant_curvature(n):
    c = -0.7
    b = algebraic_bundle(c * tl.big_g(np.eye(n)))
    np.testing.assert_allclose(b.ricci, (n - 1) * c * np.eye(n), atol=1e-14)
    assert b.scalar == pytest.approx(n * (n - 1) * c)
    assert np.abs(b.rr).max() < 1e-14
    assert b.gamma is None
