"""Benchmark state-space models.

Two concrete models behind the same simulate/propagate surface:

* a linear-Gaussian model with tridiagonal transition matrix and the first
  half of the state observed in low noise, and
* the cyclic Lorenz'96 stochastic differential equation, discretized with
  Euler-Maruyama substeps between observation times.

``propagate`` draws forward-simulation samples for a whole batch (one row
per particle); ``simulate`` generates a ground-truth trajectory with
observations. Both are deterministic given the spec and the generator
state.
"""

import csv

import numpy as np

from .errors import NumericalBlowup
from .gaussian import GaussianParams, mvn_sample, psd_cholesky

# Any state component beyond this magnitude means the discretization blew up;
# the Lorenz'96 attractor lives at |x| of order 10.
BLOWUP_LIMIT = 1e6

# Substep refinement during burn-in. The transient from the unstable
# constant equilibrium overshoots far beyond attractor scale, where the
# production step size diverges; the attractor itself is stable at it.
BURN_IN_REFINE = 10


class Trajectory:
    """Simulated truth: states ``x_0..x_T`` (``(T+1, d)``) and observations
    ``y_1..y_T`` (``(T, p)``)."""

    def __init__(self, states, observations):
        self.states = np.asarray(states, dtype=float)
        self.observations = np.asarray(observations, dtype=float)
        if self.states.shape[0] != self.observations.shape[0] + 1:
            raise ValueError("need exactly one more state than observation")
        if not (np.all(np.isfinite(self.states)) and np.all(np.isfinite(self.observations))):
            raise ValueError("trajectory contains non-finite entries")

    @property
    def T(self):
        return self.observations.shape[0]


class LgssmSpec:
    """Linear-Gaussian state-space model
    ``x_t = A x_{t-1} + v_t``, ``y_t = C x_t + e_t`` with
    ``v ~ N(0, Q)``, ``e ~ N(0, R)`` and ``x_0 ~ init``."""

    def __init__(self, A, C, Q, R, init):
        self.A = np.asarray(A, dtype=float)
        self.C = np.asarray(C, dtype=float)
        self.Q = np.asarray(Q, dtype=float)
        self.R = np.asarray(R, dtype=float)
        self.init = init
        d, p = self.A.shape[0], self.C.shape[0]
        if self.A.shape != (d, d) or self.C.shape != (p, d):
            raise ValueError("inconsistent A/C shapes")
        if self.Q.shape != (d, d) or self.R.shape != (p, p):
            raise ValueError("inconsistent Q/R shapes")
        if init.dim != d:
            raise ValueError("init dimension does not match A")
        # factor eagerly: validates PSD and caches for propagation/observation
        self._chol_q = psd_cholesky(self.Q)
        self._chol_r = psd_cholesky(self.R)

    @property
    def d(self):
        return self.A.shape[0]

    @property
    def p(self):
        return self.C.shape[0]

    def transition_mean(self, states):
        """Deterministic part of the dynamics, ``A x``, for a batch."""
        return states @ self.A.T

    def propagate(self, states, rng):
        """Sample ``x_t | x_{t-1}`` for each row of ``states``."""
        z = rng.standard_normal(states.shape)
        return states @ self.A.T + z @ self._chol_q.T

    def sample_initial(self, n, rng):
        """Draw ``n`` samples of x_0."""
        return mvn_sample(self.init, n, rng)

    def observe(self, states, rng):
        z = rng.standard_normal((states.shape[0], self.p))
        return states @ self.C.T + z @ self._chol_r.T

    def simulate(self, T, rng):
        """Generate a ground-truth :class:`Trajectory` of length ``T``."""
        if T < 0:
            raise ValueError("T must be nonnegative")
        x = mvn_sample(self.init, 1, rng)
        states = np.empty((T + 1, self.d))
        obs = np.empty((T, self.p))
        states[0] = x[0]
        for t in range(1, T + 1):
            x = self.propagate(x, rng)
            states[t] = x[0]
            obs[t - 1] = self.observe(x, rng)[0]
        return Trajectory(states, obs)


def lgssm_standard(d=10):
    """The benchmark linear-Gaussian model.

    Tridiagonal transition matrix (0.6 on the diagonal, 0.2 on the first
    off-diagonals), the first half of the states observed directly, process
    noise ``1e-2 I`` two orders of magnitude above the observation noise
    ``1e-4 I``, and ``x_0 ~ N(0, I)``. ``d`` must be even so exactly half
    the states are observed.
    """
    if d < 2 or d % 2 != 0:
        raise ValueError("d must be even and at least 2")
    p = d // 2
    A = 0.6 * np.eye(d) + 0.2 * (np.eye(d, k=1) + np.eye(d, k=-1))
    C = np.hstack([np.eye(p), np.zeros((p, p))])
    Q = 1e-2 * np.eye(d)
    R = 1e-4 * np.eye(p)
    init = GaussianParams(np.zeros(d), np.eye(d))
    return LgssmSpec(A, C, Q, R, init)


def lorenz96_drift(x, F):
    """Lorenz'96 drift, cyclic in the state index.

    Component k is ``(x_{k+1} - x_{k-2}) x_{k-1} - x_k + F`` with indices
    wrapped modulo d. Works on a single ``(d,)`` state or an ``(N, d)``
    batch (the last axis is the state).
    """
    x = np.asarray(x, dtype=float)
    if x.shape[-1] < 4:
        raise ValueError("cyclic coupling needs state dimension >= 4")
    xp1 = np.roll(x, -1, axis=-1)
    xm2 = np.roll(x, 2, axis=-1)
    xm1 = np.roll(x, 1, axis=-1)
    return (xp1 - xm2) * xm1 - x + F


class Lorenz96Spec:
    """Cyclic Lorenz'96 SDE with linear-Gaussian observations.

    Between observations the state advances by ``M`` Euler-Maruyama substeps
    of size ``dt_obs / M``; each substep adds drift plus ``b * sqrt(h)``
    times a fresh standard-normal vector. There is no closed-form transition
    density, only forward simulation.
    """

    def __init__(self, d, F, b, dt_obs, M, C, R, init, burn_in=0, ensemble_init=None):
        if d < 4:
            raise ValueError("d must be at least 4")
        if M < 1 or dt_obs <= 0 or b < 0 or burn_in < 0:
            raise ValueError("need M >= 1, dt_obs > 0, b >= 0, burn_in >= 0")
        self.d = d
        self.F = float(F)
        self.b = float(b)
        self.dt_obs = float(dt_obs)
        self.M = int(M)
        self.C = np.asarray(C, dtype=float)
        self.R = np.asarray(R, dtype=float)
        self.init = init
        self.burn_in = int(burn_in)
        self.ensemble_init = ensemble_init
        p = self.C.shape[0]
        if self.C.shape != (p, d) or self.R.shape != (p, p) or init.dim != d:
            raise ValueError("inconsistent C/R/init shapes")
        if ensemble_init is not None and ensemble_init.dim != d:
            raise ValueError("ensemble_init dimension mismatch")
        self._chol_r = psd_cholesky(self.R)

    @property
    def p(self):
        return self.C.shape[0]

    def propagate(self, states, rng, substeps=None):
        """Advance a batch one observation interval (``substeps`` Euler-Maruyama
        substeps, defaulting to the spec's M).

        Raises :class:`~capf.errors.NumericalBlowup` as soon as any component
        exceeds ``1e6`` in magnitude. With ``b == 0`` no random draws are
        consumed and the map is deterministic.
        """
        x = np.asarray(states, dtype=float)
        m = self.M if substeps is None else int(substeps)
        h = self.dt_obs / m
        noise_scale = self.b * np.sqrt(h)
        for _ in range(m):
            x = x + h * lorenz96_drift(x, self.F)
            if self.b > 0.0:
                x = x + noise_scale * rng.standard_normal(x.shape)
            if not np.all(np.abs(x) <= BLOWUP_LIMIT):
                raise NumericalBlowup(
                    f"state magnitude exceeded {BLOWUP_LIMIT:g} during propagation"
                )
        return x

    def sample_initial(self, n, rng):
        """Draw ``n`` samples of x_0.

        With ``ensemble_init`` set (a spun-up Gaussian already on the
        attractor, as in a twin experiment) the draws come straight from
        it. Otherwise near-equilibrium draws from ``init`` are pushed
        through the burn-in intervals so they land on the attractor; the
        burn-in uses ``BURN_IN_REFINE``-times finer substeps because the
        transient leaving the (unstable) constant equilibrium overshoots
        attractor scale, where the production step size is divergent.
        """
        if self.ensemble_init is not None:
            return mvn_sample(self.ensemble_init, n, rng)
        x = mvn_sample(self.init, n, rng)
        for _ in range(self.burn_in):
            x = self.propagate(x, rng, substeps=self.M * BURN_IN_REFINE)
        return x

    def with_initial_ensemble(self, ensemble_init):
        """Copy of the spec whose :meth:`sample_initial` draws from the
        given on-attractor Gaussian instead of running a burn-in."""
        return Lorenz96Spec(
            self.d,
            self.F,
            self.b,
            self.dt_obs,
            self.M,
            self.C,
            self.R,
            self.init,
            burn_in=self.burn_in,
            ensemble_init=ensemble_init,
        )

    def observe(self, states, rng):
        z = rng.standard_normal((states.shape[0], self.p))
        return states @ self.C.T + z @ self._chol_r.T

    def simulate(self, T, rng):
        """Generate a :class:`Trajectory`; the recorded x_0 is a post-burn-in
        attractor state (see :meth:`sample_initial`)."""
        if T < 0:
            raise ValueError("T must be nonnegative")
        x = self.sample_initial(1, rng)
        states = np.empty((T + 1, self.d))
        obs = np.empty((T, self.p))
        states[0] = x[0]
        for t in range(1, T + 1):
            x = self.propagate(x, rng)
            states[t] = x[0]
            obs[t - 1] = self.observe(x, rng)[0]
        return Trajectory(states, obs)


def lorenz96_standard():
    """The benchmark Lorenz'96 setup: d=10, chaotic forcing F=12, diffusion
    b=0.1, observations of the first five states every dt=0.1 through noise
    ``1e-4 I``, 15 Euler-Maruyama substeps per interval, and a 10-interval
    burn-in from a near-equilibrium start."""
    d, p = 10, 5
    C = np.hstack([np.eye(p), np.zeros((p, p))])
    R = 1e-4 * np.eye(p)
    init = GaussianParams(12.0 * np.ones(d), 1e-2 * np.eye(d))
    return Lorenz96Spec(
        d=d, F=12.0, b=0.1, dt_obs=0.1, M=15, C=C, R=R, init=init, burn_in=10
    )


def write_trajectory_csv(traj, path):
    """Write a trajectory as CSV: ``t,x_0..x_{d-1},y_0..y_{p-1}``.

    The t=0 row has empty observation cells; floats carry 17 significant
    digits so values round-trip exactly.
    """
    d = traj.states.shape[1]
    p = traj.observations.shape[1]
    header = ["t"] + [f"x_{j}" for j in range(d)] + [f"y_{j}" for j in range(p)]
    with open(path, "w", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerow(["0"] + [f"{v:.17g}" for v in traj.states[0]] + [""] * p)
        for t in range(1, traj.states.shape[0]):
            writer.writerow(
                [str(t)]
                + [f"{v:.17g}" for v in traj.states[t]]
                + [f"{v:.17g}" for v in traj.observations[t - 1]]
            )


def read_trajectory_csv(path):
    """Inverse of :func:`write_trajectory_csv`."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header = rows[0]
    d = sum(1 for name in header if name.startswith("x_"))
    p = sum(1 for name in header if name.startswith("y_"))
    states = np.array([[float(v) for v in row[1 : 1 + d]] for row in rows[1:]])
    obs = np.array([[float(v) for v in row[1 + d :]] for row in rows[2:]])
    if obs.size == 0:
        obs = obs.reshape(0, p)
    return Trajectory(states, obs)
