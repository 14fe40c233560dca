import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from curvsym import tensorlab as tl
from curvsym.tensorlab import DegeneratePlaneError, Plane


def _sym(rng, n):
    a = rng.normal(size=(n, n))
    return a + a.T


def _spd(rng, n):
    a = rng.normal(size=(n, n))
    return a @ a.T + n * np.eye(n)


def _algebraic_curvature(rng, n):
    """Kulkarni-Nomizu combinations span the algebraic curvature tensors."""
    return tl.kulkarni_nomizu(_sym(rng, n), _sym(rng, n)) + tl.kulkarni_nomizu(_sym(rng, n), _sym(rng, n))


seeds = st.integers(0, 2**32 - 1)
dims = st.integers(2, 5)


def test_metric_endomorphism_hand_example():
    # (x ^ y) x = -y and (x ^ y) y = x for an orthonormal pair
    e = tl.metric_endomorphism(np.eye(2), [1.0, 0.0], [0.0, 1.0])
    np.testing.assert_array_equal(e, [[0.0, 1.0], [-1.0, 0.0]])
    np.testing.assert_array_equal(e @ [1.0, 0.0], [0.0, -1.0])


@given(seed=seeds, n=dims)
@settings(max_examples=40, deadline=None)
def test_metric_endomorphism_is_skew_adjoint(seed, n):
    rng = np.random.default_rng(seed)
    g = _spd(rng, n)
    x, y = rng.normal(size=(2, n))
    e = tl.metric_endomorphism(g, x, y)
    np.testing.assert_allclose(g @ e, -(g @ e).T, atol=1e-12 * (1 + np.abs(g @ e).max()))
    np.testing.assert_allclose(tl.act_on_02(e, g), 0.0, atol=1e-11 * (1 + np.abs(g).max() ** 2))
    stack = tl.metric_endomorphisms(g)
    i, j = rng.integers(0, n, size=2)
    np.testing.assert_allclose(stack[i, j], tl.metric_endomorphism(g, np.eye(n)[i], np.eye(n)[j]))


def test_big_g_hand_values():
    G = tl.big_g(np.eye(3))
    assert G[0, 1, 1, 0] == 1.0
    assert G[0, 1, 0, 1] == -1.0
    assert G[0, 1, 2, 0] == 0.0
    assert tl.kulkarni_nomizu(np.eye(2), np.eye(2))[0, 1, 1, 0] == 2.0


@given(seed=seeds, n=dims)
@settings(max_examples=40, deadline=None)
def test_big_g_gives_squared_area(seed, n):
    rng = np.random.default_rng(seed)
    g = _spd(rng, n)
    v, w = rng.normal(size=(2, n))
    plane = Plane(v, w)
    assert tl.contract(tl.big_g(g), v, w, w, v) == pytest.approx(plane.area2(g), rel=1e-10)


@given(seed=seeds, n=dims)
@settings(max_examples=40, deadline=None)
def test_kulkarni_nomizu_is_symmetric_and_curvature_like(seed, n):
    rng = np.random.default_rng(seed)
    a, b = _sym(rng, n), _sym(rng, n)
    np.testing.assert_allclose(tl.kulkarni_nomizu(a, b), tl.kulkarni_nomizu(b, a), atol=1e-12)
    res = tl.curvature_like_residuals(tl.kulkarni_nomizu(a, b))
    assert max(res.values()) < 1e-14


def test_residuals_detect_a_generic_tensor():
    t = np.random.default_rng(0).normal(size=(3, 3, 3, 3))
    res = tl.curvature_like_residuals(t)
    assert min(res.values()) > 0.1


@given(seed=seeds, n=st.integers(2, 4))
@settings(max_examples=30, deadline=None)
def test_tachibana_of_g_vanishes(seed, n):
    rng = np.random.default_rng(seed)
    g = _spd(rng, n)
    q = tl.tensor06_from_operator(tl.metric_endomorphisms(g), tl.big_g(g))
    assert np.abs(q).max() <= 1e-11 * (1 + np.abs(g).max()) ** 3


@given(seed=seeds, n=st.integers(2, 4))
@settings(max_examples=30, deadline=None)
def test_tachibana_tensor_has_properties_a_to_d(seed, n):
    rng = np.random.default_rng(seed)
    g = _spd(rng, n)
    r = _algebraic_curvature(rng, n)
    q = tl.tensor06_from_operator(tl.metric_endomorphisms(g), r)
    assert max(tl.tensor06_residuals(q).values()) < 1e-12
    if n >= 3:
        # in dimension 2 every algebraic curvature tensor is a multiple of G
        assert np.abs(q).max() > 1e-6


def test_tensor06_callable_and_stack_agree():
    rng = np.random.default_rng(5)
    g = _spd(rng, 3)
    r = _algebraic_curvature(rng, 3)
    a = tl.tensor06_from_operator(lambda x, y: tl.metric_endomorphism(g, x, y), r)
    b = tl.tensor06_from_operator(tl.metric_endomorphisms(g), r)
    np.testing.assert_allclose(a, b, atol=1e-12)


def test_tensor06_rejects_bad_stack():
    with pytest.raises(ValueError):
        tl.tensor06_from_operator(np.zeros((3, 3, 3)), np.zeros((3, 3, 3, 3)))


def test_act_on_04_matches_slotwise_definition():
    rng = np.random.default_rng(2)
    n = 3
    e = rng.normal(size=(n, n))
    t = rng.normal(size=(n,) * 4)
    xs = rng.normal(size=(4, n))
    expected = -sum(
        tl.contract(t, *[e @ x if k == s else x for k, x in enumerate(xs)]) for s in range(4)
    )
    assert tl.contract(tl.act_on_04(e, t), *xs) == pytest.approx(expected, rel=1e-12)


def test_tensor02_from_operator_on_g_vanishes():
    g = _spd(np.random.default_rng(4), 4)
    out = tl.tensor02_from_operator(tl.metric_endomorphisms(g), g)
    assert np.abs(out).max() < 1e-11 * (1 + np.abs(g).max() ** 2)


def test_frobenius_and_contract_validation():
    t = np.arange(16.0).reshape(2, 2, 2, 2)
    assert tl.frobenius_inner(t, t) == float(np.sum(t * t))
    with pytest.raises(ValueError):
        tl.frobenius_inner(t, t[0])
    with pytest.raises(ValueError):
        tl.contract(t, [1.0, 0.0])


def test_relative_residual():
    assert tl.relative_residual(np.array([0.5, -2.0]), np.array([3.0])) == 0.5
    assert tl.relative_residual(np.array([]), np.array([])) == 0.0


@pytest.mark.parametrize("shapes", [((2, 2), (3, 3)), ((2, 3), (2, 3))])
def test_dimension_mismatch(shapes):
    a, b = (np.zeros(s) for s in shapes)
    with pytest.raises(ValueError):
        tl.kulkarni_nomizu(a, b)


@given(seed=seeds, n=dims)
@settings(max_examples=40, deadline=None)
def test_plane_orthonormalisation_preserves_orientation(seed, n):
    rng = np.random.default_rng(seed)
    g = _spd(rng, n)
    v, w = rng.normal(size=(2, n))
    p = Plane(v, w)
    q = p.orthonormal(g)
    gram = np.array([[q.v @ g @ q.v, q.v @ g @ q.w], [q.w @ g @ q.v, q.w @ g @ q.w]])
    np.testing.assert_allclose(gram, np.eye(2), atol=1e-10)
    # same oriented plane: (v, w) = (e1, e2) C with det C > 0
    basis = np.column_stack([q.v, q.w])
    coeffs, *_ = np.linalg.lstsq(basis, np.column_stack([v, w]), rcond=None)
    np.testing.assert_allclose(basis @ coeffs, np.column_stack([v, w]), atol=1e-9 * (1 + np.abs(v).max() + np.abs(w).max()))
    assert np.linalg.det(coeffs) > 0


@pytest.mark.parametrize(
    "v, w",
    [([1.0, 2.0, 0.0], [2.0, 4.0, 0.0]), ([0.0, 0.0, 0.0], [1.0, 0.0, 0.0]), ([1.0, 0.0, 0.0], [1.0, 1e-9, 0.0])],
)
def test_degenerate_planes(v, w):
    with pytest.raises(DegeneratePlaneError):
        Plane(v, w).check(np.eye(3))


def test_plane_rejects_non_finite_and_mismatched():
    with pytest.raises(ValueError):
        Plane([1.0, np.nan], [0.0, 1.0])
    with pytest.raises(ValueError):
        Plane([1.0, 0.0], [0.0, 1.0, 0.0])
