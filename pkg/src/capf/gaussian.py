"""Dense Gaussian primitives: Cholesky factors, sampling, log-densities,
and weighted ensemble moments.

Everything here is sized for dense state dimensions up to a few hundred;
matrices are plain row-major ``numpy`` arrays. All density arithmetic is
done in the log domain and covariance factorizations go through a single
jitter policy (see :func:`cholesky`).
"""

import numpy as np
from scipy.linalg import solve_triangular

from .errors import DegenerateWeights, NotPositiveDefinite

LOG_2PI = np.log(2.0 * np.pi)

# Relative symmetry tolerance for covariance inputs.
SYMMETRY_RTOL = 1e-10

# One-shot diagonal jitter on a failed pivot, scaled by mean diagonal mass.
JITTER_SCALE = 1e-10


def _check_symmetric(m, name="matrix"):
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"{name} must be square, got shape {m.shape}")
    scale = max(1.0, float(np.max(np.abs(m))))
    if np.max(np.abs(m - m.T)) > SYMMETRY_RTOL * scale:
        raise ValueError(f"{name} is not symmetric within tolerance")
    return m


def cholesky(m):
    """Lower-triangular Cholesky factor of a symmetric positive definite matrix.

    On a failed pivot the factorization is retried once with
    ``1e-10 * trace(m)/d`` added to the diagonal; ensembles that have
    (numerically) collapsed produce semidefinite covariances and the jitter
    keeps those usable. A second failure raises
    :class:`~capf.errors.NotPositiveDefinite`.
    """
    m = _check_symmetric(m)
    try:
        return np.linalg.cholesky(m)
    except np.linalg.LinAlgError:
        pass
    d = m.shape[0]
    jitter = JITTER_SCALE * np.trace(m) / d
    try:
        return np.linalg.cholesky(m + jitter * np.eye(d))
    except np.linalg.LinAlgError:
        raise NotPositiveDefinite(
            f"matrix of dim {d} is not positive definite (jitter {jitter:g} did not help)"
        ) from None


def psd_cholesky(m):
    """Like :func:`cholesky` but maps the all-zero matrix to an all-zero factor.

    Zero covariances are legal degenerate Gaussians here (sampling returns
    the mean), which keeps a zero artificial-noise magnitude a valid filter
    configuration.
    """
    m = np.asarray(m, dtype=float)
    if not m.any():
        _check_symmetric(m)
        return np.zeros_like(m)
    return cholesky(m)


class GaussianParams:
    """A multivariate normal as (mean, covariance) with a cached factor.

    The lower-triangular factor of ``cov`` is computed lazily on first use
    and shared by sampling and density evaluation. ``cov`` may be the zero
    matrix (point mass at ``mean``).
    """

    def __init__(self, mean, cov):
        self.mean = np.atleast_1d(np.asarray(mean, dtype=float))
        if self.mean.ndim != 1:
            raise ValueError("mean must be a vector")
        self.cov = _check_symmetric(cov, "cov")
        if self.cov.shape[0] != self.mean.shape[0]:
            raise ValueError("mean and cov dimensions disagree")
        self._chol = None

    @property
    def dim(self):
        return self.mean.shape[0]

    @property
    def chol(self):
        if self._chol is None:
            self._chol = psd_cholesky(self.cov)
        return self._chol


def mvn_sample(g, n, rng):
    """Draw ``n`` samples from ``g`` as an ``(n, d)`` array.

    Consumes exactly ``n * d`` standard normals from ``rng`` regardless of
    the covariance (including the zero-covariance case), so stream
    consumption is independent of the parameters.
    """
    z = rng.standard_normal((n, g.dim))
    return g.mean + z @ g.chol.T


def mvn_logpdf(g, x):
    """Log-density of ``g`` at ``x``.

    ``x`` may be a single ``(d,)`` vector (returns a float) or an ``(n, d)``
    batch (returns an ``(n,)`` array). Computed through the cached
    triangular factor; a degenerate (zero) covariance has no density and
    raises :class:`~capf.errors.NotPositiveDefinite`.
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    pts = np.atleast_2d(x)
    if pts.shape[1] != g.dim:
        raise ValueError(f"points have dim {pts.shape[1]}, expected {g.dim}")
    chol = g.chol
    diag = np.diag(chol)
    if np.any(diag <= 0.0):
        raise NotPositiveDefinite("covariance is singular; log-density undefined")
    resid = pts - g.mean
    # solve L z = r per point; quadratic form is then |z|^2
    z = solve_triangular(chol, resid.T, lower=True)
    quad = np.sum(z * z, axis=0)
    logdet = 2.0 * np.sum(np.log(diag))
    out = -0.5 * (g.dim * LOG_2PI + logdet + quad)
    return float(out[0]) if single else out


def weighted_mean_cov(points, weights):
    """Weighted ensemble mean and bias-corrected weighted sample covariance.

    The covariance entry (j, k) is
    ``(1 - sum_i w_i^2)^-1 * sum_i w_i (x_ij - mu_j)(x_ik - mu_k)``,
    which reduces to the usual N/(N-1)-corrected sample covariance under
    uniform weights. The result is explicitly symmetrized.

    Args:
        points: ``(N, d)`` array of ensemble members.
        weights: ``(N,)`` normalized weights (nonnegative, summing to one).

    Raises:
        DegenerateWeights: when ``sum w^2 >= 1 - 1e-12``, i.e. the weights
            have collapsed onto a single effective member.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    weights = np.asarray(weights, dtype=float)
    n = points.shape[0]
    if n < 2:
        raise ValueError("need at least two ensemble members")
    if weights.shape != (n,):
        raise ValueError("weights shape does not match points")
    if np.any(weights < 0.0):
        raise ValueError("weights must be nonnegative")
    if abs(float(np.sum(weights)) - 1.0) > 1e-12:
        raise ValueError("weights must sum to one")
    sum_sq = float(np.sum(weights**2))
    if sum_sq >= 1.0 - 1e-12:
        raise DegenerateWeights(f"sum of squared weights {sum_sq:.17g} leaves no spread")
    mean = weights @ points
    centered = points - mean
    cov = (centered.T * weights) @ centered / (1.0 - sum_sq)
    cov = 0.5 * (cov + cov.T)
    return mean, cov
