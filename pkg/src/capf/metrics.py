"""Run-level performance measures and degeneracy bookkeeping.

A run is summarized by its marginal log-likelihood estimate, the mean
square error of the filtered means, and the minimum effective sample size
over the run; it counts as degenerate when the ESS dropped strictly below
two at least once. Collections of runs over a noise-magnitude grid are
reduced to per-bin degeneracy probabilities.
"""

import csv
from dataclasses import dataclass

import numpy as np

# Strictly-below-two reading of "the ESS dropped below two".
DEGENERACY_ESS_THRESHOLD = 2.0


@dataclass
class RunRecord:
    """One filter run's summary row."""

    eps: float
    cov_policy: str
    seed: int
    logz: float
    mse: float
    min_ess: float
    degenerate: bool


def mse(filtered_means, truth):
    """Mean square error averaged over all time steps and all dimensions."""
    filtered_means = np.asarray(filtered_means, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if filtered_means.shape != truth.shape:
        raise ValueError("filtered means and truth shapes differ")
    return float(np.mean((filtered_means - truth) ** 2))


def classify_degenerate(ess_trace):
    """True iff the ESS dropped strictly below two at any step."""
    ess_trace = np.asarray(ess_trace, dtype=float)
    if ess_trace.size == 0:
        raise ValueError("empty ESS trace")
    return bool(np.min(ess_trace) < DEGENERACY_ESS_THRESHOLD)


@dataclass
class BinnedDegeneracy:
    """Equal-width binning of runs over the noise magnitude: ``n_bins + 1``
    edges, per-bin degeneracy fraction (NaN where a bin is empty), and
    per-bin run counts."""

    bin_edges: np.ndarray
    probabilities: np.ndarray
    counts: np.ndarray


def bin_degeneracy(records, n_bins=100, eps_range=None):
    """Estimate degeneracy probability per noise-magnitude bin.

    Args:
        records: nonempty iterable of :class:`RunRecord`.
        n_bins: number of equal-width bins.
        eps_range: (lo, hi) covering every record's eps; defaults to the
            records' own range.
    """
    records = list(records)
    if not records:
        raise ValueError("no records to bin")
    eps_vals = np.array([r.eps for r in records])
    deg = np.array([r.degenerate for r in records], dtype=bool)
    if eps_range is None:
        lo, hi = float(np.min(eps_vals)), float(np.max(eps_vals))
    else:
        lo, hi = float(eps_range[0]), float(eps_range[1])
        if np.min(eps_vals) < lo or np.max(eps_vals) > hi:
            raise ValueError("eps_range does not cover all records")
    edges = np.linspace(lo, hi, n_bins + 1)
    width = (hi - lo) / n_bins
    if width > 0:
        idx = np.clip(((eps_vals - lo) / width).astype(int), 0, n_bins - 1)
    else:
        idx = np.zeros(len(records), dtype=int)
    counts = np.bincount(idx, minlength=n_bins)
    deg_counts = np.bincount(idx, weights=deg.astype(float), minlength=n_bins)
    with np.errstate(invalid="ignore"):
        probabilities = np.where(counts > 0, deg_counts / np.maximum(counts, 1), np.nan)
    return BinnedDegeneracy(edges, probabilities, counts)


def jensen_gap_check(logz_estimates, logz_true):
    """Compare the empirical bias of log-likelihood estimates with the
    log-normal prediction.

    An unbiased natural-scale estimator has E[log Zhat] <= log Z by
    Jensen's inequality; for large ensembles the gap is approximately
    minus half the Monte Carlo variance of log Zhat.

    Returns:
        (mean gap, sample variance of the estimates, predicted gap).
    """
    logz_estimates = np.asarray(logz_estimates, dtype=float)
    if logz_estimates.size < 30:
        raise ValueError("need at least 30 estimates")
    mean_gap = float(np.mean(logz_estimates) - logz_true)
    variance = float(np.var(logz_estimates, ddof=1))
    return mean_gap, variance, -variance / 2.0


RECORDS_HEADER = ["eps", "cov_policy", "seed", "logz", "mse", "min_ess", "degenerate"]


def record_to_row(record):
    return [
        f"{record.eps:.17g}",
        record.cov_policy,
        str(record.seed),
        f"{record.logz:.17g}",
        f"{record.mse:.17g}",
        f"{record.min_ess:.17g}",
        "1" if record.degenerate else "0",
    ]


def row_to_record(row):
    return RunRecord(
        eps=float(row[0]),
        cov_policy=row[1],
        seed=int(row[2]),
        logz=float(row[3]),
        mse=float(row[4]),
        min_ess=float(row[5]),
        degenerate=row[6] == "1",
    )


def write_records_csv(records, path):
    """Write run records as CSV with header ``eps,cov_policy,seed,logz,mse,
    min_ess,degenerate`` (degenerate as 0/1)."""
    with open(path, "w", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(RECORDS_HEADER)
        for record in records:
            writer.writerow(record_to_row(record))


def read_records_csv(path):
    """Inverse of :func:`write_records_csv`; skips a trailing partial line."""
    records = []
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    for row in rows[1:]:
        if len(row) == len(RECORDS_HEADER):
            records.append(row_to_record(row))
    return records
