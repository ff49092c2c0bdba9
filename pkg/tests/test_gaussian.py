import numpy as np
import pytest
from helpers import brute_logpdf, random_spd

from capf.errors import DegenerateWeights, NotPositiveDefinite
from capf.gaussian import (
    GaussianParams,
    cholesky,
    mvn_logpdf,
    mvn_sample,
    psd_cholesky,
    weighted_mean_cov,
)


def test_cholesky_identity():
    assert np.array_equal(cholesky(np.eye(3)), np.eye(3))


def test_cholesky_hand_example():
    L = cholesky(np.array([[4.0, 2.0], [2.0, 3.0]]))
    expected = np.array([[2.0, 0.0], [1.0, np.sqrt(2.0)]])
    np.testing.assert_allclose(L, expected, rtol=0, atol=1e-14)


def test_cholesky_rejects_indefinite():
    with pytest.raises(NotPositiveDefinite):
        cholesky(np.array([[1.0, 2.0], [2.0, 1.0]]))


def test_cholesky_rejects_asymmetric():
    with pytest.raises(ValueError):
        cholesky(np.array([[1.0, 0.5], [0.1, 1.0]]))


def test_cholesky_reconstruction_random_spd():
    rng = np.random.default_rng(42)
    for _ in range(50):
        d = int(rng.integers(1, 9))
        m = random_spd(rng, d, scale=float(rng.uniform(0.01, 100)))
        L = cholesky(m)
        assert np.array_equal(L, np.tril(L))
        assert np.all(np.diag(L) > 0)
        rel = np.linalg.norm(L @ L.T - m) / np.linalg.norm(m)
        assert rel < 1e-8


def test_cholesky_jitter_rescues_semidefinite():
    v = np.array([1.0, 2.0, 3.0])
    m = np.outer(v, v)  # rank one, plain factorization fails
    L = cholesky(m)
    assert np.linalg.norm(L @ L.T - m) / np.linalg.norm(m) < 1e-8


def test_cholesky_zero_matrix_fails_even_with_jitter():
    with pytest.raises(NotPositiveDefinite):
        cholesky(np.zeros((2, 2)))


def test_psd_cholesky_zero_matrix_gives_zero_factor():
    assert np.array_equal(psd_cholesky(np.zeros((3, 3))), np.zeros((3, 3)))


def test_mvn_sample_zero_cov_returns_mean():
    g = GaussianParams(np.array([1.0, -2.0]), np.zeros((2, 2)))
    samples = mvn_sample(g, 7, np.random.default_rng(0))
    assert np.array_equal(samples, np.tile(g.mean, (7, 1)))


def test_mvn_sample_variance():
    g = GaussianParams(np.zeros(2), 2.0 * np.eye(2))
    samples = mvn_sample(g, 100_000, np.random.default_rng(1))
    var = samples.var(axis=0)
    assert np.all(var > 1.9) and np.all(var < 2.1)


def test_mvn_sample_mean_moments():
    rng = np.random.default_rng(2)
    n = 100_000
    cov = random_spd(rng, 3)
    mean = np.array([0.5, -1.0, 2.0])
    samples = mvn_sample(GaussianParams(mean, cov), n, rng)
    tol = 4.0 * np.sqrt(np.diag(cov) / n)
    assert np.all(np.abs(samples.mean(axis=0) - mean) < tol)


def test_mvn_sample_deterministic():
    g = GaussianParams(np.zeros(3), np.eye(3))
    a = mvn_sample(g, 5, np.random.default_rng(123))
    b = mvn_sample(g, 5, np.random.default_rng(123))
    assert np.array_equal(a, b)


def test_mvn_logpdf_standard_normal_at_zero():
    g = GaussianParams(np.zeros(1), np.eye(1))
    assert mvn_logpdf(g, np.zeros(1)) == pytest.approx(-0.9189385332046727, abs=1e-12)


def test_mvn_logpdf_isotropic_2d():
    g = GaussianParams(np.zeros(2), np.eye(2))
    assert mvn_logpdf(g, np.array([1.0, 1.0])) == pytest.approx(
        -np.log(2 * np.pi) - 1.0, abs=1e-12
    )


def test_mvn_logpdf_matches_brute_force():
    rng = np.random.default_rng(3)
    for _ in range(50):
        d = int(rng.integers(1, 6))
        cov = random_spd(rng, d, scale=float(rng.uniform(0.1, 10)))
        mean = rng.standard_normal(d)
        x = rng.standard_normal(d) * 3
        ours = mvn_logpdf(GaussianParams(mean, cov), x)
        assert ours == pytest.approx(brute_logpdf(mean, cov, x), abs=1e-9)


def test_mvn_logpdf_batch_matches_single():
    rng = np.random.default_rng(4)
    g = GaussianParams(rng.standard_normal(3), random_spd(rng, 3))
    xs = rng.standard_normal((10, 3))
    batch = mvn_logpdf(g, xs)
    singles = np.array([mvn_logpdf(g, x) for x in xs])
    np.testing.assert_allclose(batch, singles, rtol=0, atol=1e-12)


def test_mvn_logpdf_integrates_to_one():
    sigma = 0.7
    g = GaussianParams(np.array([0.3]), np.array([[sigma**2]]))
    xs = np.linspace(0.3 - 8 * sigma, 0.3 + 8 * sigma, 20_001)
    pdf = np.exp(mvn_logpdf(g, xs[:, None]))
    assert np.trapezoid(pdf, xs) == pytest.approx(1.0, abs=1e-6)


def test_mvn_logpdf_zero_cov_raises():
    g = GaussianParams(np.zeros(2), np.zeros((2, 2)))
    with pytest.raises(NotPositiveDefinite):
        mvn_logpdf(g, np.zeros(2))


def test_gaussian_params_rejects_asymmetric_cov():
    with pytest.raises(ValueError):
        GaussianParams(np.zeros(2), np.array([[1.0, 0.2], [0.1, 1.0]]))


def test_weighted_mean_cov_hand_example():
    points = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 2.0]])
    weights = np.array([0.5, 0.25, 0.25])
    mean, cov = weighted_mean_cov(points, weights)
    np.testing.assert_allclose(mean, [0.25, 0.5], rtol=0, atol=1e-15)
    np.testing.assert_allclose(
        cov, [[0.3, -0.2], [-0.2, 1.2]], rtol=0, atol=1e-15
    )


def test_weighted_mean_cov_uniform_matches_sample_cov():
    rng = np.random.default_rng(5)
    points = rng.standard_normal((40, 3))
    weights = np.full(40, 1.0 / 40)
    _, cov = weighted_mean_cov(points, weights)
    np.testing.assert_allclose(cov, np.cov(points.T), rtol=1e-12)


def test_weighted_mean_cov_identical_points():
    points = np.tile([1.0, 2.0], (5, 1))
    _, cov = weighted_mean_cov(points, np.full(5, 0.2))
    assert np.array_equal(cov, np.zeros((2, 2)))


def test_weighted_mean_cov_degenerate_weights():
    points = np.arange(6.0).reshape(3, 2)
    with pytest.raises(DegenerateWeights):
        weighted_mean_cov(points, np.array([1.0, 0.0, 0.0]))


def test_weighted_mean_cov_requires_normalized_weights():
    points = np.arange(6.0).reshape(3, 2)
    with pytest.raises(ValueError):
        weighted_mean_cov(points, np.array([0.5, 0.2, 0.2]))


def test_weighted_mean_cov_symmetric_and_psd():
    rng = np.random.default_rng(6)
    for _ in range(25):
        n = int(rng.integers(3, 30))
        d = int(rng.integers(1, 5))
        points = rng.standard_normal((n, d)) * rng.uniform(0.1, 5)
        weights = rng.dirichlet(np.ones(n))
        weights = weights / weights.sum()
        _, cov = weighted_mean_cov(points, weights)
        assert np.array_equal(cov, cov.T)
        assert np.min(np.linalg.eigvalsh(cov)) > -1e-12
