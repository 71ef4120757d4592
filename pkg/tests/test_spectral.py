import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from levyspde.spectral import (
    ContinuousSup,
    GridFunction,
    LpGrid,
    build_dirichlet_operator,
    frac_norm,
    from_spectral,
    phi1,
    semigroup_apply,
    smoothing_constant_probe,
    smoothing_sup,
    space_norm,
    to_spectral,
)

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


def sine_matrix(n):
    # independent oracle: S[k, j] = e_{k+1}(xi_j)
    xi = np.arange(1, n + 1) / (n + 1)
    return np.sqrt(2.0) * np.sin(np.pi * np.outer(np.arange(1, n + 1), xi))


def test_one_dimensional_spectrum():
    op = build_dirichlet_operator(1, 3)
    np.testing.assert_allclose(op.eigenvalues, np.pi**2 * np.array([1, 4, 9]))
    assert op.zeta_A == 0.0


def test_two_dimensional_single_mode():
    op = build_dirichlet_operator(2, 1)
    assert op.eigenvalues.shape == (1, 1)
    assert op.eigenvalues[0, 0] == pytest.approx(2 * np.pi**2)


def test_colored_operator_spectrum_monotone():
    op = build_dirichlet_operator(1, 64, 0.3)
    assert np.all(np.diff(op.eigenvalues) > 0)
    assert op.eigenvalues[-1] == pytest.approx(64**2 * np.pi**2)
    np.testing.assert_allclose(op.wiener_coloring(), op.eigenvalues**0.3)


@pytest.mark.parametrize("d,n", [(0, 4), (4, 2), (1, 0)])
def test_rejects_bad_sizes(d, n):
    with pytest.raises(ValueError):
        build_dirichlet_operator(d, n)


@pytest.mark.parametrize("d", [1, 2, 3])
def test_eigenvalue_count_and_axis_monotonicity(d):
    op = build_dirichlet_operator(d, 5)
    assert op.eigenvalues.size == 5**d
    for axis in range(d):
        assert np.all(np.diff(op.eigenvalues, axis=axis) > 0)
    assert op.lambda_min == pytest.approx(np.pi**2 * d)


def test_frac_norm_examples():
    op = build_dirichlet_operator(1, 8)
    assert frac_norm(op.unit_mode([1]), 0.5, op) == pytest.approx(np.pi)
    assert frac_norm(np.zeros(8), 0.7, op) == 0.0
    v = np.random.default_rng(0).standard_normal(8)
    assert frac_norm(v, 0.0, op) == pytest.approx(np.linalg.norm(v))
    with pytest.raises(ValueError):
        frac_norm(np.zeros(7), 0.0, op)
    with pytest.raises(ValueError):
        frac_norm(v, -0.1, op)


def test_semigroup_examples():
    op = build_dirichlet_operator(2, 4)
    v = np.random.default_rng(1).standard_normal(op.shape)
    np.testing.assert_array_equal(semigroup_apply(0.0, v, op), v)
    e = op.unit_mode([2, 3])
    np.testing.assert_allclose(semigroup_apply(0.01, e, op), np.exp(-13 * np.pi**2 * 0.01) * e)
    np.testing.assert_allclose(semigroup_apply(0.03, v, op),
                               semigroup_apply(0.01, semigroup_apply(0.02, v, op), op), rtol=1e-12)
    with pytest.raises(ValueError):
        semigroup_apply(-1.0, v, op)


@given(arrays(float, 12, elements=finite), st.floats(0, 10))
def test_semigroup_contracts(v, t):
    op = build_dirichlet_operator(1, 12)
    assert frac_norm(semigroup_apply(t, v, op), 0.0, op) <= frac_norm(v, 0.0, op) * (1 + 1e-12)


@given(arrays(float, 10, elements=finite), st.floats(0.01, 2), st.floats(0.01, 2))
def test_embedding_inequality(v, eta1, gap):
    op = build_dirichlet_operator(1, 10)
    eta2 = eta1 + gap
    lhs = frac_norm(v, eta1, op)
    rhs = op.lambda_min ** (eta1 - eta2) * frac_norm(v, eta2, op)
    assert lhs <= rhs * (1 + 1e-10) + 1e-300


def test_smoothing_probe_examples():
    op = build_dirichlet_operator(1, 256)
    t = np.geomspace(1e-6, 1.0, 400)
    assert smoothing_constant_probe(op, 0.3, 0.3, t) <= 1.0
    # sup of u exp(-u) is 1/e; the probe over a dense grid approaches it from below
    probe = smoothing_constant_probe(op, 0.0, 1.0, t)
    assert probe <= np.exp(-1) + 1e-12
    assert probe == pytest.approx(np.exp(-1), rel=1e-3)
    assert smoothing_sup(0.5) == pytest.approx((2 * np.e) ** -0.5)
    assert smoothing_sup(1.0) == pytest.approx(np.exp(-1))
    with pytest.raises(ValueError):
        smoothing_constant_probe(op, 1.0, 0.5, t)
    with pytest.raises(ValueError):
        smoothing_constant_probe(op, 0.0, 0.5, [])


@given(st.floats(0, 1.5), st.floats(1e-5, 1.0))
def test_smoothing_bounded_by_scalar_sup(r, t):
    op = build_dirichlet_operator(1, 32)
    assert smoothing_constant_probe(op, 0.0, r, [t]) <= smoothing_sup(r) * (1 + 1e-12)


def test_first_eigenfunction_maps_to_unit_mode():
    op = build_dirichlet_operator(1, 16)
    np.testing.assert_allclose(to_spectral(op.eigenfunction([1]), op), op.unit_mode([1]), atol=1e-13)
    op2 = build_dirichlet_operator(2, 6)
    np.testing.assert_allclose(to_spectral(op2.eigenfunction([2, 5]), op2), op2.unit_mode([2, 5]),
                               atol=1e-13)


def test_transform_matches_explicit_sine_sum():
    n = 9
    op = build_dirichlet_operator(1, n)
    c = np.random.default_rng(2).standard_normal(n)
    np.testing.assert_allclose(from_spectral(c, op), c @ sine_matrix(n), atol=1e-12)


def test_constant_function_coefficients():
    # exact discrete sine coefficients of 1 on the N = 8 grid; they differ from
    # the continuum values 2 sqrt(2)/(n pi) by aliasing
    n = 8
    op = build_dirichlet_operator(1, n)
    c = to_spectral(np.ones(n), op)
    k = np.arange(1, n + 1)
    discrete = np.where(k % 2 == 1, np.sqrt(2) / (n + 1) / np.tan(k * np.pi / (2 * (n + 1))), 0.0)
    np.testing.assert_allclose(c, discrete, atol=1e-13)
    continuum = 2 * np.sqrt(2) / (k * np.pi)
    assert c[0] == pytest.approx(continuum[0], rel=0.011)
    assert np.all(c[1::2] == pytest.approx(0.0, abs=1e-13))


@pytest.mark.parametrize("d,n", [(1, 17), (2, 7), (3, 4)])
def test_round_trip_and_parseval(d, n):
    op = build_dirichlet_operator(d, n)
    g = np.random.default_rng(d).standard_normal(op.shape)
    c = to_spectral(g, op)
    np.testing.assert_allclose(from_spectral(c, op), g, rtol=1e-10, atol=1e-12)
    assert np.linalg.norm(c) == pytest.approx(np.sqrt(op.cell_volume * np.sum(g**2)), rel=1e-12)


def test_batched_transforms():
    op = build_dirichlet_operator(2, 5)
    g = np.random.default_rng(3).standard_normal((3, 2, *op.shape))
    c = to_spectral(g, op)
    np.testing.assert_allclose(c[1, 0], to_spectral(g[1, 0], op), atol=1e-14)
    with pytest.raises(ValueError):
        to_spectral(np.zeros((5, 4)), op)


@settings(max_examples=50)
@given(arrays(float, 11, elements=finite))
def test_round_trip_property(g):
    op = build_dirichlet_operator(1, 11)
    np.testing.assert_allclose(from_spectral(to_spectral(g, op), op), g, rtol=1e-10, atol=1e-9)


def test_space_norms():
    assert space_norm(GridFunction(np.zeros(5))) == 0.0
    g = np.zeros(5)
    g[2] = -3.0
    assert space_norm(GridFunction(g)) == 3.0
    assert space_norm(GridFunction(np.ones(99), LpGrid(2))) == pytest.approx(np.sqrt(0.99))
    assert ContinuousSup().norm(np.ones((2, 4, 4)), 1 / 25, 2).shape == (2,)
    with pytest.raises(ValueError):
        LpGrid(1.5)


def test_phi1():
    lam = np.array([0.0, 1.0, 1e6])
    np.testing.assert_allclose(phi1(lam, 0.5), [0.5, 1 - np.exp(-0.5), 1e-6])
