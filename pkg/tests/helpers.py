"""Independent oracles used across the test suite.

Everything here is deliberately naive: explicit inverses, determinants,
and full joint covariances. Slow and numerically crude, but with no code
shared with the implementations under test.
"""

import numpy as np


def random_spd(rng, d, scale=1.0):
    """Random symmetric positive definite matrix, comfortably conditioned."""
    a = rng.standard_normal((d, d))
    return scale * (a @ a.T + 0.5 * np.eye(d))


def brute_logpdf(mean, cov, x):
    """Gaussian log-density via explicit inverse and determinant."""
    r = np.asarray(x, dtype=float) - mean
    d = len(mean)
    sign, logdet = np.linalg.slogdet(cov)
    assert sign > 0
    return -0.5 * (d * np.log(2 * np.pi) + logdet + r @ np.linalg.inv(cov) @ r)


def joint_gaussian_logz(A, C, Q, R, m0, P0, ys):
    """Marginal log-likelihood of a linear-Gaussian model by building the
    full joint Gaussian over stacked observations, with no filtering
    recursion involved."""
    ys = np.asarray(ys, dtype=float)
    T, p = ys.shape
    d = len(m0)

    # prior means and covariances of x_1..x_T, plus all cross blocks
    means = []
    covs = []
    m, P = np.asarray(m0, float), np.asarray(P0, float)
    for _ in range(T):
        m = A @ m
        P = A @ P @ A.T + Q
        means.append(m.copy())
        covs.append(P.copy())
    cross = {}
    for s in range(T):
        block = covs[s]
        cross[(s, s)] = block
        for t in range(s + 1, T):
            block = block @ A.T  # cov(x_s, x_t) = cov(x_s, x_{t-1}) A^T
            cross[(s, t)] = block

    mean_y = np.concatenate([C @ means[t] for t in range(T)])
    cov_y = np.zeros((T * p, T * p))
    for s in range(T):
        for t in range(s, T):
            block = C @ cross[(s, t)] @ C.T
            cov_y[s * p : (s + 1) * p, t * p : (t + 1) * p] = block
            cov_y[t * p : (t + 1) * p, s * p : (s + 1) * p] = block.T
    cov_y += np.kron(np.eye(T), R)
    return brute_logpdf(mean_y, cov_y, ys.reshape(-1))


def conditioning_oracle(P, C, R, x_prime, y):
    """Moments of x | y for x ~ N(x', P), y = C x + e, via explicit joint
    covariance and inverse; x_prime may be a batch of rows.

    Returns:
        (means, cov, per-row log N(y | C x', C P C^T + R)).
    """
    x_prime = np.atleast_2d(x_prime)
    M = C @ P @ C.T + R
    Minv = np.linalg.inv(M)
    G = P @ C.T @ Minv
    innov = y - x_prime @ C.T
    mu = x_prime + innov @ G.T
    sigma = P - G @ M @ G.T
    log_alpha = np.array([brute_logpdf(C @ xp, M, y) for xp in x_prime])
    return mu, sigma, log_alpha
