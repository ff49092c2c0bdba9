"""Plot emission for sweep results.

Per covariance policy: log-likelihood and MSE scatters over the noise
magnitude with degenerate runs drawn as red crosses, exact and
augmented-model Kalman overlays where available, and a step plot of the
binned degeneracy probability. Every figure is written as a standalone
SVG next to a CSV of exactly the plotted data, so figures regenerate
without rerunning the sweep.
"""

import csv

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .metrics import bin_degeneracy

OK_STYLE = {"marker": "o", "s": 12, "color": "tab:blue", "label": "runs"}
DEGENERATE_STYLE = {"marker": "x", "s": 24, "color": "tab:red", "label": "degenerate runs"}


def _split(records, policy):
    sel = [r for r in records if r.cov_policy == policy]
    ok = [r for r in sel if not r.degenerate]
    bad = [r for r in sel if r.degenerate]
    return sel, ok, bad


def _scatter_figure(path_base, title, ylabel, ok, bad, value, kf_true_value, kf_curve):
    """One scatter panel plus its data CSV. ``value`` picks the record
    field; overlays are a horizontal exact-KF line and an augmented-KF
    curve, either of which may be absent."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    if ok:
        ax.scatter([r.eps for r in ok], [value(r) for r in ok], **OK_STYLE)
    if bad:
        ax.scatter([r.eps for r in bad], [value(r) for r in bad], **DEGENERATE_STYLE)
    if kf_true_value is not None:
        ax.axhline(kf_true_value, color="black", lw=1.5, label="exact KF")
    if kf_curve:
        xs, vs = zip(*sorted(kf_curve))
        ax.plot(xs, vs, color="black", ls="--", lw=1.0, label="augmented KF")
    ax.set_xlabel("artificial noise magnitude")
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    svg = f"{path_base}.svg"
    fig.savefig(svg)
    plt.close(fig)

    data = f"{path_base}.csv"
    with open(data, "w", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["kind", "eps", "value", "degenerate"])
        for r in ok:
            writer.writerow(["run", f"{r.eps:.17g}", f"{value(r):.17g}", "0"])
        for r in bad:
            writer.writerow(["run", f"{r.eps:.17g}", f"{value(r):.17g}", "1"])
        if kf_true_value is not None:
            writer.writerow(["kf_true", "0", f"{kf_true_value:.17g}", ""])
        for eps, v in sorted(kf_curve):
            writer.writerow(["kf_augmented", f"{eps:.17g}", f"{v:.17g}", ""])
    return [svg, data]


def _degeneracy_figure(path_base, title, records, eps_range, n_bins):
    binned = bin_degeneracy(records, n_bins=n_bins, eps_range=eps_range)
    fig, ax = plt.subplots(figsize=(7, 4.5))
    # NaN probabilities (empty bins) leave gaps in the step curve
    ax.stairs(binned.probabilities, binned.bin_edges, color="tab:blue")
    ax.set_xlabel("artificial noise magnitude")
    ax.set_ylabel("degeneracy probability")
    ax.set_ylim(-0.02, 1.02)
    ax.set_title(title)
    fig.tight_layout()
    svg = f"{path_base}.svg"
    fig.savefig(svg)
    plt.close(fig)

    data = f"{path_base}.csv"
    with open(data, "w", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["bin_left", "bin_right", "probability", "count"])
        for k in range(len(binned.counts)):
            prob = binned.probabilities[k]
            writer.writerow(
                [
                    f"{binned.bin_edges[k]:.17g}",
                    f"{binned.bin_edges[k + 1]:.17g}",
                    "" if np.isnan(prob) else f"{prob:.17g}",
                    str(int(binned.counts[k])),
                ]
            )
    return [svg, data]


def emit_figures(result, out_dir, n_bins=100):
    """Render every figure a sweep result supports into ``out_dir``.

    Returns:
        list of written file paths.
    """
    records = result.records
    if not records:
        raise ValueError("no records to plot")
    kf_true_logz = kf_true_mse = None
    curves = {}  # policy -> list of (eps, logz, mse)
    for b in result.baselines:
        if b.kind == "true":
            kf_true_logz, kf_true_mse = b.logz, b.mse
        else:
            curves.setdefault(b.cov_policy, []).append((b.eps, b.logz, b.mse))

    eps_all = [r.eps for r in records]
    lo, hi = min(eps_all), max(eps_all)
    if hi == lo:
        hi = lo + 1.0  # avoid a zero-width binned axis for single-eps results

    written = []
    for policy in sorted({r.cov_policy for r in records}):
        sel, ok, bad = _split(records, policy)
        curve = curves.get(policy, [])
        written += _scatter_figure(
            f"{out_dir}/logz_{policy}",
            f"log-likelihood estimates ({policy})",
            "log-likelihood estimate",
            ok,
            bad,
            lambda r: r.logz,
            kf_true_logz,
            [(eps, logz) for eps, logz, _ in curve],
        )
        written += _scatter_figure(
            f"{out_dir}/mse_{policy}",
            f"filtered-mean MSE ({policy})",
            "MSE",
            ok,
            bad,
            lambda r: r.mse,
            kf_true_mse,
            [(eps, m) for eps, _, m in curve],
        )
        written += _degeneracy_figure(
            f"{out_dir}/degeneracy_{policy}",
            f"degeneracy probability ({policy})",
            sel,
            (lo, hi),
            n_bins,
        )
    return written
