"""Experiment orchestration: config files, noise-magnitude sweeps with
replications, exact baselines, and incremental CSV emission.

A sweep fixes one simulated trajectory (data is generated once; only the
filter varies), then runs every (eps, covariance policy, replication)
grid point with a seed derived deterministically from (base seed, eps
index, replication index). Policies at the same grid point share the
seed, giving paired comparisons under common random numbers. Kalman
baselines (exact and augmented-model) are computed once for the
linear-Gaussian model and summarized alongside the run records.
"""

import json
import os
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ParseError, ValidationError
from .gaussian import GaussianParams
from .kalman import KalmanOutput, kalman_filter, kalman_filter_augmented
from .metrics import RECORDS_HEADER, RunRecord, classify_degenerate, mse, record_to_row
from .models import (
    Lorenz96Spec,
    lgssm_standard,
    lorenz96_standard,
    write_trajectory_csv,
)
from .smc import (
    BLOCK_DIAGONAL,
    CAPF,
    COV_POLICIES,
    EVERY_STEP,
    FIXED,
    LOCALLY_OPTIMAL,
    PROPOSALS,
    FilterConfig,
    run_filter,
)

LGSSM = "lgssm_standard"
LORENZ96 = "lorenz96_standard"
MODELS = (LGSSM, LORENZ96)

# Per-model defaults: particles, grid upper end, grid size, replications.
# The grids put the sharp degeneracy transition well inside the range.
_MODEL_DEFAULTS = {
    LGSSM: {"n_particles": 1000, "eps_max": 1.5, "eps_count": 100, "runs_per_eps": 10},
    LORENZ96: {"n_particles": 2000, "eps_max": 2.0, "eps_count": 200, "runs_per_eps": 5},
}

_TOP_LEVEL_KEYS = {
    "model",
    "T",
    "n_particles",
    "proposals",
    "cov_policies",
    "fixed_cov",
    "eps_grid",
    "runs_per_eps",
    "base_seed",
    "workers",
    "out_dir",
}
_GRID_KEYS = {"min", "max", "count", "spacing"}

ERRORS_HEADER = ["eps", "cov_policy", "seed", "error"]
BASELINES_HEADER = ["kind", "cov_policy", "eps", "logz", "mse"]


@dataclass
class ExperimentConfig:
    """Fully resolved sweep configuration (defaults applied, grid expanded)."""

    model: str
    model_dim: int
    T: int
    n_particles: int
    proposals: list
    cov_policies: list
    eps_values: np.ndarray
    runs_per_eps: int
    base_seed: int
    workers: int
    out_dir: str
    fixed_cov: np.ndarray | None = None


@dataclass
class SweepError:
    """Grid point whose run raised instead of producing a record."""

    eps: float
    cov_policy: str
    seed: int
    error: str


@dataclass
class BaselinePoint:
    """Scalar summary of one Kalman baseline: exact (``kind='true'``) or
    augmented-model at a given eps (``kind='augmented'``)."""

    kind: str
    cov_policy: str
    eps: float
    logz: float
    mse: float


@dataclass
class SweepResult:
    """Everything a sweep produced: one record or error entry per grid
    point, baseline summaries, and (in memory) the full Kalman outputs."""

    records: list
    errors: list
    baselines: list
    kf_true: KalmanOutput | None = None
    kf_augmented: dict = field(default_factory=dict)


def _is_int(value, minimum):
    # bool is an int subclass; JSON true/false must not pass as counts
    return isinstance(value, int) and not isinstance(value, bool) and value >= minimum


def _reject_duplicate_keys(pairs):
    seen = {}
    for key, value in pairs:
        if key in seen:
            raise ParseError(f"duplicate key {key!r}")
        seen[key] = value
    return seen


def _resolve_grid(grid, violations):
    """Expand an eps grid spec (mapping or explicit list) into an array."""
    if isinstance(grid, list):
        values = np.asarray(grid, dtype=float)
        if values.size == 0:
            violations.append("eps_grid: explicit list must be nonempty")
        elif np.any(values < 0):
            violations.append("eps_grid: all values must be >= 0")
        return values
    if not isinstance(grid, dict):
        violations.append("eps_grid must be a list of values or a {min,max,count,spacing} object")
        return np.zeros(0)
    for key in grid:
        if key not in _GRID_KEYS:
            violations.append(f"eps_grid: unknown key {key!r}")
    lo = grid.get("min", 0.0)
    hi = grid.get("max")
    count = grid.get("count")
    spacing = grid.get("spacing", "linear")
    if hi is None or count is None:
        violations.append("eps_grid: 'max' and 'count' are required")
        return np.zeros(0)
    if not isinstance(lo, (int, float)) or lo < 0:
        violations.append("eps_grid.min must be >= 0")
        return np.zeros(0)
    if not isinstance(hi, (int, float)) or hi < lo:
        violations.append("eps_grid.max must be >= eps_grid.min")
        return np.zeros(0)
    if not _is_int(count, 1):
        violations.append("eps_grid.count must be a positive integer")
        return np.zeros(0)
    if spacing == "linear":
        return np.linspace(lo, hi, count)
    if spacing == "log":
        if lo <= 0:
            violations.append("eps_grid.min must be > 0 for log spacing")
            return np.zeros(0)
        return np.geomspace(lo, hi, count)
    violations.append("eps_grid.spacing must be 'linear' or 'log'")
    return np.zeros(0)


def validate_config(raw):
    """Turn a parsed JSON mapping into an :class:`ExperimentConfig`.

    Collects every violation before raising, so a bad file reports all
    its problems at once.

    Raises:
        ValidationError: listing all violations.
    """
    violations = []
    if not isinstance(raw, dict):
        raise ValidationError(["config must be a JSON object"])
    for key in raw:
        if key not in _TOP_LEVEL_KEYS:
            violations.append(f"unknown key {key!r}")

    model_entry = raw.get("model")
    model, model_dim = None, 10
    if isinstance(model_entry, str):
        model = model_entry
    elif isinstance(model_entry, dict):
        model = model_entry.get("name")
        model_dim = model_entry.get("d", 10)
        for key in model_entry:
            if key not in ("name", "d"):
                violations.append(f"model: unknown key {key!r}")
    if model not in MODELS:
        violations.append(f"model must be one of {list(MODELS)}")
        model = LGSSM  # placeholder so default lookups below still work
    if model == LGSSM and (not _is_int(model_dim, 2) or model_dim % 2):
        violations.append("model.d must be an even integer >= 2")
        model_dim = 10
    if model == LORENZ96:
        model_dim = 10

    defaults = _MODEL_DEFAULTS[model]

    T = raw.get("T", 200)
    if not _is_int(T, 1):
        violations.append("T must be a positive integer")
    n_particles = raw.get("n_particles", defaults["n_particles"])
    if not _is_int(n_particles, 2):
        violations.append("n_particles must be an integer >= 2")

    proposals = raw.get("proposals", [CAPF])
    if not isinstance(proposals, list) or not proposals:
        violations.append("proposals must be a nonempty list")
        proposals = [CAPF]
    for p in proposals:
        if p not in PROPOSALS:
            violations.append(f"proposals: unknown proposal {p!r}")
    if LOCALLY_OPTIMAL in proposals and model != LGSSM:
        violations.append("proposals: locally_optimal requires the linear-Gaussian model")

    cov_policies = raw.get("cov_policies", [BLOCK_DIAGONAL])
    if not isinstance(cov_policies, list) or not cov_policies:
        violations.append("cov_policies must be a nonempty list")
        cov_policies = [BLOCK_DIAGONAL]
    for p in cov_policies:
        if p not in COV_POLICIES:
            violations.append(f"cov_policies: unknown policy {p!r}")

    fixed_cov = raw.get("fixed_cov")
    if FIXED in cov_policies and fixed_cov is None:
        violations.append("fixed_cov is required when cov_policies includes 'fixed'")
    if fixed_cov is not None:
        fixed_cov = np.asarray(fixed_cov, dtype=float)
        if fixed_cov.ndim != 2 or fixed_cov.shape != (model_dim, model_dim):
            violations.append(f"fixed_cov must be a {model_dim}x{model_dim} matrix")
        elif not np.allclose(fixed_cov, fixed_cov.T):
            violations.append("fixed_cov must be symmetric")

    grid = raw.get(
        "eps_grid",
        {"min": 0.0, "max": defaults["eps_max"], "count": defaults["eps_count"]},
    )
    eps_values = _resolve_grid(grid, violations)

    runs_per_eps = raw.get("runs_per_eps", defaults["runs_per_eps"])
    if not _is_int(runs_per_eps, 1):
        violations.append("runs_per_eps must be an integer >= 1")
    base_seed = raw.get("base_seed", 0)
    if not _is_int(base_seed, 0):
        violations.append("base_seed must be a nonnegative integer")
    workers = raw.get("workers", os.cpu_count() or 1)
    if not _is_int(workers, 1):
        violations.append("workers must be a positive integer")
    out_dir = raw.get("out_dir", "results")
    if not isinstance(out_dir, str) or not out_dir:
        violations.append("out_dir must be a nonempty string")

    if violations:
        raise ValidationError(violations)
    return ExperimentConfig(
        model=model,
        model_dim=model_dim,
        T=T,
        n_particles=n_particles,
        proposals=list(proposals),
        cov_policies=list(cov_policies),
        eps_values=eps_values,
        runs_per_eps=runs_per_eps,
        base_seed=base_seed,
        workers=workers,
        out_dir=out_dir,
        fixed_cov=fixed_cov,
    )


def load_config(path):
    """Read, parse, and validate a strict-JSON config file.

    Raises:
        ParseError: malformed JSON or duplicate keys.
        ValidationError: schema violations, all listed.
    """
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        raw = json.loads(text, object_pairs_hook=_reject_duplicate_keys)
    except ParseError:
        raise
    except json.JSONDecodeError as exc:
        raise ParseError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return validate_config(raw)


def make_model(config):
    """Instantiate the benchmark model the config names."""
    if config.model == LGSSM:
        return lgssm_standard(config.model_dim)
    return lorenz96_standard()


# Per-coordinate variance of the filter's initial ensemble around the
# trajectory's recorded x_0 in the chaotic twin experiment. Unit scale:
# the start is known only to within O(1) per coordinate, so acquisition
# itself stresses the proposal.
ANCHOR_VAR = 1.0


def filter_model_for(model, trajectory):
    """Model the filters should run with, given the simulated trajectory.

    For the linear-Gaussian model the simulation prior is the correct
    filter prior, so the model passes through unchanged. For the chaotic
    model the simulation init describes the pre-burn-in transient, not
    x_0; filters instead start from a tight Gaussian around the recorded
    x_0 (a spun-up ensemble). Without that anchor the initial cloud is
    attractor-wide and every run loses nearly all its weight while
    locking on, which says nothing about the proposal being studied.
    """
    if not isinstance(model, Lorenz96Spec):
        return model
    anchor = GaussianParams(trajectory.states[0], ANCHOR_VAR * np.eye(model.d))
    return model.with_initial_ensemble(anchor)


def derive_seed(base_seed, eps_idx, rep_idx):
    """Deterministic 64-bit seed for one grid point, disjoint across
    replications and eps indices."""
    words = np.random.SeedSequence([int(base_seed), 1, int(eps_idx), int(rep_idx)]).generate_state(2)
    return int(words[0]) << 32 | int(words[1])


def trajectory_rng(base_seed):
    """Stream for the shared trajectory, disjoint from every run seed."""
    return np.random.default_rng(np.random.SeedSequence([int(base_seed), 0]))


@dataclass
class _Job:
    index: int
    proposal: str
    label: str  # records' cov_policy column; proposal name for non-capf runs
    eps: float
    cov_policy: str
    seed: int


def _execute_job(job, model, ys, truth, n_particles, fixed_cov):
    try:
        filter_config = FilterConfig(
            n_particles=n_particles,
            eps=job.eps,
            cov_policy=job.cov_policy,
            fixed_cov=fixed_cov,
            resampling=EVERY_STEP,
            seed=job.seed,
        )
        output = run_filter(model, ys, job.proposal, filter_config)
    except Exception as exc:  # per-run failures become error entries
        return job.index, SweepError(
            eps=job.eps,
            cov_policy=job.label,
            seed=job.seed,
            error=f"{type(exc).__name__}: {exc}",
        )
    return job.index, RunRecord(
        eps=job.eps,
        cov_policy=job.label,
        seed=job.seed,
        logz=output.logZ,
        mse=mse(output.filtered_means, truth),
        min_ess=float(np.min(output.ess_trace)),
        degenerate=classify_degenerate(output.ess_trace),
    )


def _build_jobs(config):
    """Canonically ordered grid: proposal, then eps index, then policy,
    then replication. Non-capf proposals are reference runs pinned to the
    eps-index-0 seeds with the proposal name in the policy column."""
    jobs = []
    for proposal in config.proposals:
        if proposal == CAPF:
            for eps_idx, eps in enumerate(config.eps_values):
                for policy in config.cov_policies:
                    for rep in range(config.runs_per_eps):
                        jobs.append(
                            _Job(
                                index=len(jobs),
                                proposal=CAPF,
                                label=policy,
                                eps=float(eps),
                                cov_policy=policy,
                                seed=derive_seed(config.base_seed, eps_idx, rep),
                            )
                        )
        else:
            for rep in range(config.runs_per_eps):
                jobs.append(
                    _Job(
                        index=len(jobs),
                        proposal=proposal,
                        label=proposal,
                        eps=0.0,
                        cov_policy=BLOCK_DIAGONAL,
                        seed=derive_seed(config.base_seed, 0, rep),
                    )
                )
    return jobs


def _policy_shape_matrix(policy, config, model):
    """Shape matrix S for policies where S is state-independent."""
    if policy == BLOCK_DIAGONAL:
        S = np.zeros((model.d, model.d))
        S[: model.p, : model.p] = np.eye(model.p)
        return S
    if policy == FIXED:
        return config.fixed_cov
    return None


def _compute_baselines(config, model, ys, truth):
    """Exact and augmented-model Kalman summaries (linear-Gaussian only)."""
    baselines, kf_augmented = [], {}
    kf_true = kalman_filter(model, ys)
    baselines.append(
        BaselinePoint("true", "", 0.0, kf_true.logZ, mse(kf_true.means, truth))
    )
    for policy in config.cov_policies:
        S = _policy_shape_matrix(policy, config, model)
        if S is None:  # sample-covariance policy has no closed-form baseline
            continue
        for eps in np.unique(config.eps_values):
            out = kalman_filter_augmented(model, float(eps), S, ys)
            kf_augmented[(policy, float(eps))] = out
            baselines.append(
                BaselinePoint("augmented", policy, float(eps), out.logZ, mse(out.means, truth))
            )
    return kf_true, kf_augmented, baselines


def write_baselines_csv(baselines, path):
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(BASELINES_HEADER) + "\n")
        for b in baselines:
            fh.write(f"{b.kind},{b.cov_policy},{b.eps:.17g},{b.logz:.17g},{b.mse:.17g}\n")


def read_baselines_csv(path):
    baselines = []
    with open(path) as fh:
        lines = fh.read().splitlines()
    for line in lines[1:]:
        parts = line.split(",")
        if len(parts) == len(BASELINES_HEADER):
            baselines.append(
                BaselinePoint(parts[0], parts[1], float(parts[2]), float(parts[3]), float(parts[4]))
            )
    return baselines


def run_sweep(config):
    """Run the full sweep a config describes.

    Writes into ``config.out_dir``: the shared trajectory, the run records
    (incrementally, in canonical order, so an interrupted sweep leaves a
    valid prefix), per-run error entries, and baseline summaries.

    Returns:
        :class:`SweepResult`.
    """
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    model = make_model(config)
    trajectory = model.simulate(config.T, trajectory_rng(config.base_seed))
    write_trajectory_csv(trajectory, out_dir / "trajectory.csv")
    ys = trajectory.observations
    truth = trajectory.states[1:]  # drop x_0; filtered means cover x_1..x_T
    model = filter_model_for(model, trajectory)

    kf_true, kf_augmented, baselines = None, {}, []
    if config.model == LGSSM:
        kf_true, kf_augmented, baselines = _compute_baselines(config, model, ys, truth)
        write_baselines_csv(baselines, out_dir / "baselines.csv")

    jobs = _build_jobs(config)
    records, errors = [], []
    with open(out_dir / "records.csv", "w", newline="\n") as rec_fh, open(
        out_dir / "errors.csv", "w", newline="\n"
    ) as err_fh:
        rec_fh.write(",".join(RECORDS_HEADER) + "\n")
        rec_fh.flush()
        err_fh.write(",".join(ERRORS_HEADER) + "\n")
        err_fh.flush()

        pending = {}
        next_index = 0

        def drain():
            # emit results in canonical order as soon as the prefix is complete
            nonlocal next_index
            while next_index in pending:
                outcome = pending.pop(next_index)
                if isinstance(outcome, RunRecord):
                    records.append(outcome)
                    rec_fh.write(",".join(record_to_row(outcome)) + "\n")
                    rec_fh.flush()
                else:
                    errors.append(outcome)
                    message = outcome.error.replace("\n", " ").replace(",", ";")
                    err_fh.write(
                        f"{outcome.eps:.17g},{outcome.cov_policy},{outcome.seed},{message}\n"
                    )
                    err_fh.flush()
                next_index += 1

        if config.workers == 1:
            for job in jobs:
                index, outcome = _execute_job(
                    job, model, ys, truth, config.n_particles, config.fixed_cov
                )
                pending[index] = outcome
                drain()
        else:
            with ProcessPoolExecutor(max_workers=config.workers) as pool:
                futures = [
                    pool.submit(
                        _execute_job, job, model, ys, truth, config.n_particles, config.fixed_cov
                    )
                    for job in jobs
                ]
                for future in as_completed(futures):
                    index, outcome = future.result()
                    pending[index] = outcome
                    drain()

    return SweepResult(
        records=records,
        errors=errors,
        baselines=baselines,
        kf_true=kf_true,
        kf_augmented=kf_augmented,
    )
