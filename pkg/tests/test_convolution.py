import numpy as np
import pytest

from levyspde.convolution import (
    ConvolutionPath,
    alpha_stable_convolution,
    check_cadlag_pz,
    check_liu,
    check_ms_continuity,
    check_wiener_continuity,
    gs_statistic,
    is_levy_in,
    levy_convolution,
    regularity_report,
    weighted_loglog_slope,
    wiener_convolution,
    zero_convolution,
)
from levyspde.noise import DiagonalAlphaStable, DiagonalPoisson, FiniteAtomic, JumpPath, RngStream
from levyspde.spectral import build_dirichlet_operator, phi1


@pytest.fixture
def op4():
    return build_dirichlet_operator(1, 4)


def test_no_jumps_gives_zero(op4):
    path = JumpPath.from_jumps(op4, 1.0, [])
    conv = levy_convolution(path, op4, np.linspace(0, 1, 11))
    assert not np.any(conv.values)


def test_single_jump_propagates(op4):
    v = np.array([1.0, -2.0, 0.5, 0.25])
    path = JumpPath.from_jumps(op4, 1.0, [(0.35, v)])
    grid = np.linspace(0, 1, 21)
    conv = levy_convolution(path, op4, grid)
    lam = op4.eigenvalues
    for m, t in enumerate(grid):
        expected = np.exp(-lam * (t - 0.35)) * v if t >= 0.35 else np.zeros(4)
        np.testing.assert_allclose(conv.values[m], expected, atol=1e-15)


def test_jump_on_grid_has_distinct_left_limit(op4):
    v = np.array([1.0, 0.0, 0.0, 0.0])
    grid = np.linspace(0, 1, 5)
    conv = levy_convolution(JumpPath.from_jumps(op4, 1.0, [(0.5, v)]), op4, grid)
    np.testing.assert_allclose(conv.values[2] - conv.left_limits[2], v)
    np.testing.assert_array_equal(conv.values[[0, 1, 3, 4]], conv.left_limits[[0, 1, 3, 4]])
    np.testing.assert_array_equal(conv.jump_indices(), [2])
    assert not np.any(conv.left_limits[0])


def test_superposition_is_exact(op4):
    a, b = np.array([1.0, 0.5, 0, 0]), np.array([0, -1.0, 2.0, 0.1])
    grid = np.linspace(0, 2, 41)
    comp = np.array([0.1, -0.2, 0.3, 0.0])
    both = levy_convolution(JumpPath.from_jumps(op4, 2.0, [(0.3, a), (1.1, b)], comp), op4, grid)
    one = levy_convolution(JumpPath.from_jumps(op4, 2.0, [(0.3, a)], comp), op4, grid)
    two = levy_convolution(JumpPath.from_jumps(op4, 2.0, [(1.1, b)]), op4, grid)
    np.testing.assert_allclose(both.values, (one + two).values, atol=1e-14)


def test_compensator_closed_form(op4):
    comp = np.array([1.0, -1.0, 0.5, 2.0])
    grid = np.array([0.0, 0.1, 0.35, 1.0])
    conv = levy_convolution(JumpPath.from_jumps(op4, 1.0, [], comp), op4, grid)
    for m, t in enumerate(grid):
        np.testing.assert_allclose(conv.values[m], comp * phi1(op4.eigenvalues, t), rtol=1e-12)


def test_jump_free_segment_semigroup_consistency(op4):
    comp = np.array([0.3, 0.2, -0.1, 0.0])
    path = JumpPath.from_jumps(op4, 1.0, [(0.2, np.ones(4))], comp)
    conv = levy_convolution(path, op4, np.linspace(0, 1, 11))
    lam = op4.eigenvalues
    t1, t2 = 0.4, 0.9
    expected = np.exp(-lam * (t2 - t1)) * conv.values[4] + comp * phi1(lam, t2 - t1)
    np.testing.assert_allclose(conv.values[9], expected, rtol=1e-12)


def test_grid_must_cover_horizon(op4):
    with pytest.raises(ValueError):
        levy_convolution(JumpPath.from_jumps(op4, 2.0, []), op4, np.linspace(0, 1, 5))
    with pytest.raises(ValueError):
        zero_convolution(op4, [0.0, 0.5, 0.4])
    a = zero_convolution(op4, [0.0, 1.0])
    with pytest.raises(ValueError):
        a + zero_convolution(op4, [0.0, 0.5, 1.0])


def test_masked_wiener_is_zero(op4):
    conv = wiener_convolution(op4, np.linspace(0, 1, 11), RngStream(1, 0), mode_mask=np.zeros(4))
    assert not np.any(conv.values)


def test_wiener_stationary_variance_and_covariance():
    op = build_dirichlet_operator(1, 1, 0.3)
    lam = op.eigenvalues[0]
    t = 5 / lam
    h = t / 50
    # the recursion is exact, so a coarse grid suffices
    grid = np.array([0.0, t / 2, t, t + h])
    samples = np.array([wiener_convolution(op, grid, RngStream(11, r)).values[[2, 3], 0]
                        for r in range(10_000)])
    var = samples[:, 0].var(ddof=1)
    target = lam**0.6 / (2 * lam) * (1 - np.exp(-2 * lam * t))
    se = target * np.sqrt(2 / 9_999)
    assert abs(var - target) < 4 * se
    cov = np.mean(samples[:, 0] * samples[:, 1])
    assert cov == pytest.approx(np.exp(-lam * h) * var, rel=0.05)


def test_stable_convolution_zero_amplitude(op4):
    conv = alpha_stable_convolution(DiagonalAlphaStable(1.5, 1.0), op4, np.linspace(0, 1, 6),
                                    RngStream(0, 0), amplitude=0.0)
    assert not np.any(conv.values)


def test_cauchy_convolution_iqr():
    # ten independent modes, each normalised by its own cumulated scale, pool
    # into 10^5 standard Cauchy draws
    op = build_dirichlet_operator(1, 10)
    lam = op.eigenvalues
    grid = np.array([0.0, 0.02, 0.05])
    gen = np.random.default_rng(0)
    scale = (1 - np.exp(-lam * 0.05)) / lam
    x = np.array([alpha_stable_convolution(DiagonalAlphaStable(1.0, 0.0), op, grid, gen).values[-1]
                  for _ in range(10_000)]) / scale
    q1, q3 = np.percentile(x.ravel(), [25, 75])
    assert (q3 - q1) == pytest.approx(2.0, rel=0.05)


def test_stable_two_half_steps_match_one_step():
    op = build_dirichlet_operator(1, 1)
    model = DiagonalAlphaStable(1.5, 0.0)
    gen = np.random.default_rng(1)
    n = 20_000
    one = np.array([alpha_stable_convolution(model, op, [0.0, 0.05], gen).values[-1, 0] for _ in range(n)])
    two = np.array([alpha_stable_convolution(model, op, [0.0, 0.025, 0.05], gen).values[-1, 0]
                    for _ in range(n)])
    for u in (2.0, 5.0):
        assert abs(np.mean(np.cos(u * one)) - np.mean(np.cos(u * two))) < 0.02


def test_ms_continuity_examples():
    assert check_ms_continuity(DiagonalPoisson(1.5), 0.0) == 0.5
    assert check_ms_continuity(DiagonalPoisson(0.25), 0.5) is None
    assert check_ms_continuity(FiniteAtomic([]), 0.3) == pytest.approx(0.8)
    assert check_ms_continuity(DiagonalAlphaStable(1.5, 1.0), 0.0) is None


def test_cadlag_examples():
    assert check_cadlag_pz(DiagonalPoisson(0.75), 0.0, 0.25) == 0.25
    assert check_cadlag_pz(DiagonalPoisson(0.5), 0.0, 0.25) is None
    with pytest.raises(ValueError):
        check_cadlag_pz(DiagonalPoisson(0.75), 0.0, 0.3)
    # eps = 0 reduces to the square-integrability condition with bound delta
    for k in (0.6, 1.0, 2.0):
        ms = check_ms_continuity(DiagonalPoisson(k), 0.0)
        assert (check_cadlag_pz(DiagonalPoisson(k), 0.0, 0.0) is None) == (ms is None)


@pytest.mark.parametrize("k", [0.55, 0.6, 0.75, 1.0, 1.5, 3.0])
@pytest.mark.parametrize("eps", [0.0, 0.1, 0.25])
def test_cadlag_bound_below_ms_bound(k, eps):
    cad = check_cadlag_pz(DiagonalPoisson(k), 0.1, eps)
    ms = check_ms_continuity(DiagonalPoisson(k), 0.1)
    if cad is not None and ms is not None:
        assert cad <= ms


def test_liu_and_wiener_conditions():
    op = build_dirichlet_operator(1, 8)
    assert check_liu(1.5, 1.0, 0.0, op)
    assert not check_liu(0.5, 1.0, 0.0, op)
    assert not check_liu(1.9, 0.0, 0.0, op)
    with pytest.raises(ValueError):
        check_liu(2.0, 1.0, 0.0, op)
    assert check_wiener_continuity(1, 0.0)
    assert not check_wiener_continuity(3, 0.25)
    assert check_wiener_continuity(3, 0.3)


def test_higher_dimensional_series():
    # in two dimensions the lattice sum of |n|^s converges only for s < -2
    assert check_ms_continuity(DiagonalPoisson(0.75), 0.0, dim=1) == 0.5
    assert check_ms_continuity(DiagonalPoisson(0.75), 0.0, dim=2) is None
    assert check_ms_continuity(DiagonalPoisson(1.25), 0.0, dim=2) == 0.5


def test_regularity_improvement_pair():
    model = DiagonalPoisson(0.6)
    assert not is_levy_in(model, 0.2)
    cad = check_cadlag_pz(model, 0.0, 0.25)
    assert cad is not None and 0.2 < cad
    report = regularity_report(model, 0.0, 0.25, 0.2)
    assert report.conditions["is_levy_in_Hgamma(0.2)"] is False
    assert report.conditions["convolution_cadlag_in_Hgamma(0.2)"] is True
    text = report.to_text()
    assert "cadlag_gamma_bound = 0.25\n" in text
    assert report.to_csv().startswith("# schema: regularity_report v1\n")


def test_failed_bounds_are_minus_infinity():
    report = regularity_report(DiagonalPoisson(0.4), 0.0, 0.25)
    assert report.cadlag_gamma_bound == -np.inf
    assert report.ms_continuity_gamma_bound == -np.inf


def test_gs_zero_noise_and_stable_rejection():
    op = build_dirichlet_operator(1, 4)
    res = gs_statistic(FiniteAtomic([]), op, 0.0, [0.01, 0.02], 0.5, 5, RngStream(0, 0))
    assert all(est == 0 for _, est, _ in res.rows)
    with pytest.raises(ValueError):
        gs_statistic(DiagonalAlphaStable(1.5, 1.0), op, 0.0, [0.01], 0.5, 5, RngStream(0, 0))
    with pytest.raises(ValueError):
        gs_statistic(DiagonalPoisson(1.5), op, 0.0, [0.6], 0.5, 5, RngStream(0, 0))


def test_gs_stderr_scaling():
    op = build_dirichlet_operator(1, 8)
    small = gs_statistic(DiagonalPoisson(1.5), op, 0.0, [0.0625], 0.5, 4000, RngStream(1, 0))
    large = gs_statistic(DiagonalPoisson(1.5), op, 0.0, [0.0625], 0.5, 8000, RngStream(1, 0))
    ratio = large.rows[0][2] ** 2 / small.rows[0][2] ** 2
    assert ratio == pytest.approx(0.5, rel=0.3)
    assert small.to_csv().splitlines()[:2] == ["# schema: gs_statistic v1", "h,estimate,stderr"]


def test_weighted_slope_exact_power_law():
    x = np.array([1e-3, 1e-2, 1e-1])
    slope, err = weighted_loglog_slope(x, 3 * x**2, 0.1 * x**2)
    assert slope == pytest.approx(2.0)
    assert 0 < err < 0.05
    assert weighted_loglog_slope([1.0], [1.0], [1.0]) == (None, None)
