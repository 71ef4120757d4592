import numpy as np
import pytest
from scipy import stats

from levyspde.noise import (
    DiagonalAlphaStable,
    DiagonalPoisson,
    FiniteAtomic,
    JumpPath,
    RngStream,
    compensator_rate,
    sample_jump_path,
    sample_symmetric_stable,
    stable_ou_step_scale,
    wiener_increment_variances,
)
from levyspde.spectral import build_dirichlet_operator


def test_stream_reproducible_and_distinct():
    a = RngStream(42, 3).generator(1).random(5)
    b = RngStream(42, 3).generator(1).random(5)
    c = RngStream(42, 4).generator(1).random(5)
    d = RngStream(42, 3).generator(2).random(5)
    np.testing.assert_array_equal(a, b)
    assert not np.allclose(a, c)
    assert not np.allclose(a, d)


def test_identical_streams_give_identical_paths():
    op = build_dirichlet_operator(1, 16)
    p1 = sample_jump_path(DiagonalPoisson(1.5), op, 1.0, RngStream(7, 0))
    p2 = sample_jump_path(DiagonalPoisson(1.5), op, 1.0, RngStream(7, 0))
    assert p1.to_csv() == p2.to_csv()


def test_empty_measure():
    op = build_dirichlet_operator(1, 4)
    m = np.array([0.1, 0.0, -0.2, 0.0])
    path = sample_jump_path(FiniteAtomic([], drift=m), op, 2.0, RngStream(1, 0))
    assert path.n_jumps == 0
    np.testing.assert_array_equal(path.compensator_rate, m)


def test_diagonal_poisson_total_intensity_and_sizes():
    op = build_dirichlet_operator(1, 16)
    model = DiagonalPoisson(1.5)
    assert model.total_intensity(op) == 16
    np.testing.assert_allclose(model.jump_sizes(op), np.arange(1, 17) ** -1.5)
    counts = [sample_jump_path(model, op, 1.0, RngStream(5, r)).n_jumps for r in range(2000)]
    assert abs(np.mean(counts) - 16) < 4 * np.sqrt(16 / 2000)


def test_finite_atomic_poisson_counts():
    op = build_dirichlet_operator(1, 3)
    vec = np.array([0.2, 0.0, 0.1])
    model = FiniteAtomic([(vec, 2.0)])
    counts = np.array([sample_jump_path(model, op, 10.0, RngStream(9, r)).n_jumps
                       for r in range(10_000)])
    se = np.sqrt(20 / 10_000)
    assert abs(counts.mean() - 20) < 4 * se
    # variance of the sample variance of a Poisson(mu): (mu + 2 mu^2)/(n - 1) approximately
    assert abs(counts.var(ddof=1) - 20) < 4 * np.sqrt((20 + 2 * 20**2) / 9_999)


def test_jump_path_structure():
    op = build_dirichlet_operator(2, 3)
    path = sample_jump_path(DiagonalPoisson(1.0), op, 3.0, RngStream(2, 0))
    assert np.all(np.diff(path.times) > 0)
    assert path.times[0] > 0 and path.times[-1] <= 3.0
    v = path.jump_vector(0)
    assert v.shape == (3, 3) and np.count_nonzero(v) == 1
    assert v[v != 0][0] == pytest.approx(op.mode_numbers[v != 0][0] ** -1.0)


def test_compensator_classification():
    op = build_dirichlet_operator(1, 2)
    small, big = np.array([0.5, 0.0]), np.array([0.0, 3.0])
    full = compensator_rate(FiniteAtomic([(small, 2.0), (big, 1.0)]), op)
    np.testing.assert_allclose(full, [-1.0, -3.0])
    m = np.array([0.25, 0.5])
    partial = compensator_rate(FiniteAtomic([(small, 2.0), (big, 1.0)], drift=m), op)
    np.testing.assert_allclose(partial, [-1.0 + 0.25, 0.5])


def test_compensated_mean_vanishes():
    op = build_dirichlet_operator(1, 4)
    model = DiagonalPoisson(1.0, drift=np.zeros(4))
    ends = np.array([sample_jump_path(model, op, 1.0, RngStream(3, r)).value_at(1.0)
                     for r in range(4000)])
    se = ends.std(axis=0, ddof=1) / np.sqrt(len(ends))
    assert np.all(np.abs(ends.mean(axis=0)) < 4 * se)


def test_stable_model_rejected_for_jump_lists():
    op = build_dirichlet_operator(1, 4)
    with pytest.raises(ValueError):
        sample_jump_path(DiagonalAlphaStable(1.5, 1.0), op, 1.0, RngStream(0, 0))


def test_jump_path_validation_and_csv():
    op = build_dirichlet_operator(2, 2)
    vec = np.array([[1.0, 0.0], [0.0, -2.0]])
    path = JumpPath.from_jumps(op, 1.0, [(0.25, vec), (0.5, vec)])
    np.testing.assert_allclose(path.value_at(0.3), vec)
    np.testing.assert_allclose(path.value_at(1.0), 2 * vec)
    lines = path.to_csv().splitlines()
    assert lines[0] == "# schema: jump_path v1"
    assert lines[1] == "time,mode_0,mode_1,magnitude"
    assert lines[2] == "0.25,1,1,1.0"
    assert lines[3] == "0.25,2,2,-2.0"
    with pytest.raises(ValueError):
        JumpPath.from_jumps(op, 1.0, [(0.5, vec), (0.5, vec)])
    with pytest.raises(ValueError):
        JumpPath.from_jumps(op, 1.0, [(1.5, vec)])


def test_wiener_variances():
    op = build_dirichlet_operator(1, 3)
    assert wiener_increment_variances(op, 1.0)[0] == pytest.approx(
        (1 - np.exp(-2 * np.pi**2)) / (2 * np.pi**2))
    assert wiener_increment_variances(op, 1.0)[0] == pytest.approx(0.050660, abs=1e-6)
    colored = build_dirichlet_operator(1, 3, 0.3)
    lam = colored.eigenvalues
    np.testing.assert_allclose(wiener_increment_variances(colored, 1e3), lam**0.6 / (2 * lam))
    np.testing.assert_allclose(wiener_increment_variances(colored, 1e-8), lam**0.6 * 1e-8, rtol=1e-4)
    with pytest.raises(ValueError):
        wiener_increment_variances(op, 0.0)


def test_stable_step_scale():
    assert stable_ou_step_scale(1.0, 1.0, 1.0, 1.0) == pytest.approx(1 - np.exp(-1))
    assert stable_ou_step_scale(1.5, 2.0, 1e-12, 0.3) == pytest.approx(2.0 * 0.3 ** (1 / 1.5))
    assert stable_ou_step_scale(1.5, 2.0, 0.0, 0.3) == pytest.approx(2.0 * 0.3 ** (1 / 1.5))
    with pytest.raises(ValueError):
        stable_ou_step_scale(2.0, 1.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        stable_ou_step_scale(0.0, 1.0, 1.0, 1.0)


def test_stable_step_composition():
    # two exact steps of h compose to one step of 2h: scales add in the alpha power
    alpha, lam, h = 1.3, 2.0, 0.2
    one = stable_ou_step_scale(alpha, 1.0, lam, 2 * h)
    two = stable_ou_step_scale(alpha, 1.0, lam, h)
    assert one**alpha == pytest.approx((np.exp(-lam * h) * two) ** alpha + two**alpha)
    gen = np.random.default_rng(0)
    n = 100_000
    x = np.exp(-lam * h) * sample_symmetric_stable(alpha, two, gen, n) + sample_symmetric_stable(alpha, two, gen, n)
    for u in (0.5, 1.0):
        assert abs(np.mean(np.cos(u * x)) - np.exp(-abs(u * one) ** alpha)) < 0.01


def test_cauchy_quartiles():
    x = sample_symmetric_stable(1.0, 1.0, np.random.default_rng(4), 100_000)
    q1, med, q3 = np.percentile(x, [25, 50, 75])
    assert abs(med) < 0.05
    assert (q3 - q1) == pytest.approx(2.0, rel=0.05)
    assert stats.kstest(x[:20_000], "cauchy").pvalue > 1e-3


def test_stable_characteristic_function():
    x = sample_symmetric_stable(1.5, 1.0, np.random.default_rng(5), 100_000)
    for u in (0.5, 1.0):
        assert abs(np.mean(np.cos(u * x)) - np.exp(-abs(u) ** 1.5)) < 0.01


def test_stable_scaling_and_errors():
    a = sample_symmetric_stable(0.8, 1.0, np.random.default_rng(6), 10)
    b = sample_symmetric_stable(0.8, 3.0, np.random.default_rng(6), 10)
    np.testing.assert_allclose(b, 3 * a)
    with pytest.raises(ValueError):
        sample_symmetric_stable(1.0, 0.0, np.random.default_rng(0))
    with pytest.raises(ValueError):
        sample_symmetric_stable(2.5, 1.0, np.random.default_rng(0))
    assert isinstance(sample_symmetric_stable(1.2, 1.0, np.random.default_rng(0)), float)
