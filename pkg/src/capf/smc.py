"""Particle filtering with conjugate artificial process noise.

The filter family implemented here shares one skeleton: resample
(systematically, every step or when the effective sample size drops below
a threshold), propagate, reweight, accumulate the marginal log-likelihood.
Proposals:

  * ``bootstrap``: propagate through the model transition and weight by
    the observation density.
  * ``capf``: propagate through the transition to an intermediate state,
    add artificial Gaussian noise eps^2 * S, and exploit the conjugacy of
    that noise with the linear-Gaussian observation to sample the second
    stage from the exact conditional and weight by the marginal
    N(y | C x', R + C eps^2 S C^T). With eps = 0 the second stage is
    skipped and the bootstrap filter is recovered exactly.
  * ``locally_optimal``: for additive Gaussian transition noise, the same
    conditioning applied to the transition covariance itself.

Random-stream discipline: a run's seed spawns four independent child
streams (initialization, resampling, forward simulation, second stage).
The second-stage stream is consumed only when eps > 0, so a capf run at
eps = 0 replays the bootstrap run bit for bit.
"""

import csv
import json
from dataclasses import dataclass, replace

import numpy as np
from scipy.linalg import cho_solve
from scipy.special import logsumexp

from .errors import AllWeightsZero, DegenerateWeights
from .gaussian import GaussianParams, mvn_logpdf, psd_cholesky, weighted_mean_cov
from .metrics import classify_degenerate

BOOTSTRAP = "bootstrap"
CAPF = "capf"
LOCALLY_OPTIMAL = "locally_optimal"
PROPOSALS = (BOOTSTRAP, CAPF, LOCALLY_OPTIMAL)

BLOCK_DIAGONAL = "block_diagonal"
SAMPLE_COV = "sample_cov"
FIXED = "fixed"
COV_POLICIES = (BLOCK_DIAGONAL, SAMPLE_COV, FIXED)

EVERY_STEP = "every_step"
ADAPTIVE = "adaptive"

# Substitute shape matrix when the weighted sample covariance is undefined
# because the ensemble has collapsed onto one particle.
COLLAPSED_COV_SCALE = 1e-12


@dataclass
class ParticleEnsemble:
    """Weighted particle set at one time step.

    ``log_weights`` are normalized (they logsumexp to zero) except
    transiently inside a step, where the incremental factor has been added
    but the ensemble not yet renormalized. ``intermediate_states`` holds
    the pre-noise states x' of the latest two-stage step, when there was
    one.
    """

    states: np.ndarray
    log_weights: np.ndarray
    t: int = 0
    intermediate_states: np.ndarray | None = None

    def __post_init__(self):
        self.states = np.asarray(self.states, dtype=float)
        self.log_weights = np.asarray(self.log_weights, dtype=float)
        if self.states.ndim != 2:
            raise ValueError("states must be (n, d)")
        if self.log_weights.shape != (self.states.shape[0],):
            raise ValueError("log_weights must be (n,)")

    @property
    def n(self) -> int:
        return self.states.shape[0]

    @property
    def d(self) -> int:
        return self.states.shape[1]

    def weights(self):
        """Natural-scale weights (exp of the log-weights)."""
        return np.exp(self.log_weights)


@dataclass
class FilterConfig:
    """Knobs for one filter run."""

    n_particles: int
    eps: float = 0.0
    cov_policy: str = BLOCK_DIAGONAL
    fixed_cov: np.ndarray | None = None
    resampling: str = EVERY_STEP
    ess_threshold: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.n_particles < 2:
            raise ValueError("need at least 2 particles")
        if self.eps < 0:
            raise ValueError("eps must be nonnegative")
        if self.cov_policy not in COV_POLICIES:
            raise ValueError(f"unknown cov_policy {self.cov_policy!r}")
        if self.cov_policy == FIXED:
            if self.fixed_cov is None:
                raise ValueError("fixed_cov required for the fixed policy")
            self.fixed_cov = np.asarray(self.fixed_cov, dtype=float)
        if self.resampling not in (EVERY_STEP, ADAPTIVE):
            raise ValueError(f"unknown resampling mode {self.resampling!r}")
        if not 0.0 < self.ess_threshold <= 1.0:
            raise ValueError("ess_threshold must be in (0, 1]")


@dataclass
class FilterOutput:
    """Per-run results: log-likelihood estimate, ESS trace, filtered means
    (both length T), and optionally the final ensemble."""

    logZ: float
    ess_trace: np.ndarray
    filtered_means: np.ndarray
    final_ensemble: ParticleEnsemble | None = None


def normalize_and_accumulate(log_weights):
    """Normalize unnormalized log-weights and return the log-likelihood
    increment, entirely in the log domain.

    The input is taken relative to uniform: if every particle's factor is
    exp(c), the input entries are all c and the increment is c. In
    general the increment is logsumexp(input) - log(n).

    Returns:
        (normalized natural-scale weights, increment).

    Raises:
        AllWeightsZero: if every entry is -inf.
    """
    log_weights = np.asarray(log_weights, dtype=float)
    if log_weights.ndim != 1 or log_weights.size == 0:
        raise ValueError("log_weights must be a nonempty vector")
    if not np.any(log_weights > -np.inf):
        raise AllWeightsZero()
    total = logsumexp(log_weights)
    weights = np.exp(log_weights - total)
    return weights, float(total - np.log(log_weights.size))


def ess(weights):
    """Effective sample size 1 / sum(w^2) of normalized weights, clamped
    to [1, n] against rounding."""
    weights = np.asarray(weights, dtype=float)
    return float(np.clip(1.0 / np.sum(weights**2), 1.0, weights.size))


def systematic_resample(weights, rng):
    """Systematic resampling: ancestor indices of the n positions
    (u + k)/n, k = 0..n-1, for a single uniform draw u.

    Expected copy count of particle i is n * w_i; uniform weights yield
    each index exactly once regardless of u.
    """
    weights = np.asarray(weights, dtype=float)
    n = weights.size
    positions = (rng.random() + np.arange(n)) / n
    cum = np.cumsum(weights)
    cum[-1] = 1.0  # guard against rounding in the running sum
    return np.searchsorted(cum, positions, side="right").astype(np.int64)


def _observation_loglik(model, states, y):
    """log N(y | C x, R) for each row of states."""
    innov = y - states @ model.C.T
    return mvn_logpdf(GaussianParams(np.zeros(model.p), model.R), innov)


def conditional_gaussian(prior_cov, C, R, pred_means, y):
    """Condition x ~ N(m_i, prior_cov) on y = C x + e, e ~ N(0, R).

    Factorizes the innovation covariance M = R + C prior_cov C^T once and
    reuses it for both the per-particle marginal log-densities
    log N(y | C m_i, M) and the conditional moments.

    Returns:
        (log_alpha (n,), conditional means (n, d), shared covariance (d, d)).
    """
    prior_cov = 0.5 * (prior_cov + prior_cov.T)
    CS = C @ prior_cov
    M = R + CS @ C.T
    M = 0.5 * (M + M.T)
    marginal = GaussianParams(np.zeros(M.shape[0]), M)
    innov = np.atleast_2d(y - pred_means @ C.T)
    log_alpha = mvn_logpdf(marginal, innov)
    L = marginal.chol
    gain = cho_solve((L, True), CS).T  # prior_cov C^T M^{-1}
    means = pred_means + innov @ gain.T
    half = gain @ L  # Sigma = prior_cov - half half^T, symmetric by construction
    cov = prior_cov - half @ half.T
    return log_alpha, means, 0.5 * (cov + cov.T)


def artificial_cov(config, intermediate_states, weights, n_obs):
    """Shape matrix S of the artificial noise under ``config.cov_policy``.

    Policies: identity on the first ``n_obs`` (observed) coordinates and
    zero elsewhere; weighted sample covariance of the intermediate states
    (with a tiny isotropic substitute if the weights have collapsed); or a
    fixed user matrix.
    """
    d = intermediate_states.shape[1]
    if config.cov_policy == BLOCK_DIAGONAL:
        S = np.zeros((d, d))
        S[:n_obs, :n_obs] = np.eye(n_obs)
        return S
    if config.cov_policy == SAMPLE_COV:
        try:
            return weighted_mean_cov(intermediate_states, weights)[1]
        except DegenerateWeights:
            return COLLAPSED_COV_SCALE * np.eye(d)
    if config.cov_policy == FIXED:
        S = config.fixed_cov
        if S.shape != (d, d):
            raise ValueError(f"fixed_cov must be {(d, d)}, got {S.shape}")
        return S
    raise ValueError(f"unknown cov_policy {config.cov_policy!r}")


def bootstrap_step(model, ensemble, y, rng):
    """One propagate-and-reweight step with the transition as proposal.

    The returned ensemble carries unnormalized log-weights (previous
    log-weights plus the incremental observation log-density).
    """
    states = model.propagate(ensemble.states, rng)
    log_alpha = _observation_loglik(model, states, y)
    return ParticleEnsemble(states, ensemble.log_weights + log_alpha, ensemble.t + 1)


def capf_step(model, ensemble, y, config, rng, rng_second=None):
    """One step of the conjugate artificial-process-noise filter.

    Stage one propagates through the model transition (consuming ``rng``);
    stage two, skipped entirely when ``config.eps == 0``, adds artificial
    noise by sampling the exact conditional given y (consuming
    ``rng_second``) and weights by the marginal evidence of y at the
    intermediate states. Entry log-weights must be normalized when the
    sample-covariance policy is active.
    """
    if rng_second is None:
        rng_second = rng
    x_prime = model.propagate(ensemble.states, rng)
    if config.eps == 0.0:
        log_alpha = _observation_loglik(model, x_prime, y)
        return ParticleEnsemble(
            x_prime, ensemble.log_weights + log_alpha, ensemble.t + 1, x_prime
        )
    S = artificial_cov(config, x_prime, ensemble.weights(), model.p)
    log_alpha, means, cov = conditional_gaussian(
        config.eps**2 * S, model.C, model.R, x_prime, y
    )
    noise = rng_second.standard_normal(means.shape)
    states = means + noise @ psd_cholesky(cov).T
    return ParticleEnsemble(states, ensemble.log_weights + log_alpha, ensemble.t + 1, x_prime)


def locally_optimal_step(model, ensemble, y, rng):
    """One step proposing from p(x_t | x_{t-1}, y_t), available when the
    transition noise is additive Gaussian with known covariance."""
    if not hasattr(model, "transition_mean"):
        raise TypeError(
            "locally optimal proposal needs a model with additive Gaussian "
            "transition noise (transition_mean and Q)"
        )
    pred = model.transition_mean(ensemble.states)
    log_alpha, means, cov = conditional_gaussian(model.Q, model.C, model.R, pred, y)
    noise = rng.standard_normal(means.shape)
    states = means + noise @ psd_cholesky(cov).T
    return ParticleEnsemble(states, ensemble.log_weights + log_alpha, ensemble.t + 1)


def run_filter(model, ys, proposal, config, return_final_ensemble=False):
    """Run a particle filter over an observation sequence.

    Args:
        model: state-space model with ``init``, ``propagate``, ``C``, ``R``
            (and, for the locally optimal proposal, ``transition_mean``
            and ``Q``).
        ys: observations, shape (T, p).
        proposal: one of ``bootstrap``, ``capf``, ``locally_optimal``.
        config: :class:`FilterConfig`.
        return_final_ensemble: keep the terminal ensemble in the output.

    Returns:
        :class:`FilterOutput` with the log-likelihood estimate, the ESS
        trace sampled after each reweighting, and the weighted filtered
        means.

    Raises:
        AllWeightsZero: with the failing step index, if an observation has
            zero density under every particle.
    """
    if proposal not in PROPOSALS:
        raise ValueError(f"unknown proposal {proposal!r}")
    ys = np.asarray(ys, dtype=float)
    if ys.ndim != 2:
        raise ValueError("ys must be (T, p)")
    T = ys.shape[0]
    n = config.n_particles

    streams = [np.random.default_rng(s) for s in np.random.SeedSequence(config.seed).spawn(4)]
    rng_init, rng_resample, rng_propagate, rng_second = streams

    states = model.sample_initial(n, rng_init)
    ens = ParticleEnsemble(states, np.full(n, -np.log(n)), t=0)

    logZ = 0.0
    log_n = np.log(n)
    ess_trace = np.empty(T)
    filtered_means = np.empty((T, ens.d))

    for t in range(1, T + 1):
        if config.resampling == EVERY_STEP or ess(ens.weights()) < config.ess_threshold * n:
            idx = systematic_resample(ens.weights(), rng_resample)
            ens = ParticleEnsemble(ens.states[idx], np.full(n, -log_n), ens.t)

        y = ys[t - 1]
        if proposal == BOOTSTRAP:
            stepped = bootstrap_step(model, ens, y, rng_propagate)
        elif proposal == CAPF:
            stepped = capf_step(model, ens, y, config, rng_propagate, rng_second)
        else:
            stepped = locally_optimal_step(model, ens, y, rng_propagate)

        try:
            weights, increment = normalize_and_accumulate(stepped.log_weights + log_n)
        except AllWeightsZero:
            raise AllWeightsZero(t) from None
        logZ += increment
        # increment == logsumexp(stepped.log_weights), so subtracting it
        # renormalizes in the log domain
        ens = replace(stepped, log_weights=stepped.log_weights - increment)
        ess_trace[t - 1] = ess(weights)
        filtered_means[t - 1] = weights @ ens.states

    return FilterOutput(
        logZ=logZ,
        ess_trace=ess_trace,
        filtered_means=filtered_means,
        final_ensemble=ens if return_final_ensemble else None,
    )


def write_filter_csv(output, config, path):
    """Write a run as CSV: header ``t,ess,mean_0..mean_{d-1}``, one row per
    step, then a ``#``-prefixed JSON footer with the log-likelihood
    estimate, the config echo, and the degeneracy flag."""
    means = np.asarray(output.filtered_means)
    T, d = means.shape
    footer = {
        "logz": output.logZ,
        "config": {
            "n_particles": config.n_particles,
            "eps": config.eps,
            "cov_policy": config.cov_policy,
            "resampling": config.resampling,
            "ess_threshold": config.ess_threshold,
            "seed": config.seed,
        },
        "degenerate": classify_degenerate(output.ess_trace) if T > 0 else False,
    }
    if config.fixed_cov is not None:
        footer["config"]["fixed_cov"] = np.asarray(config.fixed_cov).tolist()
    with open(path, "w", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["t", "ess"] + [f"mean_{i}" for i in range(d)])
        for t in range(T):
            writer.writerow(
                [str(t + 1), f"{output.ess_trace[t]:.17g}"]
                + [f"{v:.17g}" for v in means[t]]
            )
        fh.write("# " + json.dumps(footer) + "\n")


def read_filter_csv(path):
    """Inverse of :func:`write_filter_csv`.

    Returns:
        (:class:`FilterOutput` without an ensemble, footer dict).
    """
    with open(path, newline="") as fh:
        lines = fh.read().splitlines()
    footer_line = lines[-1]
    if not footer_line.startswith("#"):
        raise ValueError("missing JSON footer")
    footer = json.loads(footer_line.lstrip("# "))
    rows = list(csv.reader(lines[1:-1]))
    ess_trace = np.array([float(r[1]) for r in rows])
    means = np.array([[float(v) for v in r[2:]] for r in rows])
    if means.size == 0:
        means = means.reshape(0, 0)
    output = FilterOutput(logZ=float(footer["logz"]), ess_trace=ess_trace, filtered_means=means)
    return output, footer
