"""Run summaries: error measures, degeneracy classification, binning."""

import numpy as np
import pytest

from capf.kalman import kalman_filter
from capf.metrics import (
    BinnedDegeneracy,
    RunRecord,
    bin_degeneracy,
    classify_degenerate,
    jensen_gap_check,
    mse,
    read_records_csv,
    write_records_csv,
)
from capf.models import lgssm_standard


def test_mse_hand_example():
    assert mse(np.array([[1.0], [3.0]]), np.zeros((2, 1))) == pytest.approx(5.0)
    assert mse(np.ones((4, 3)), np.ones((4, 3))) == 0.0


def test_mse_shape_mismatch():
    with pytest.raises(ValueError):
        mse(np.zeros((3, 2)), np.zeros((2, 3)))


def test_mse_of_kalman_beats_zero_predictor():
    model = lgssm_standard(d=4)
    wins = 0
    for seed in range(20):
        traj = model.simulate(50, np.random.default_rng(seed))
        out = kalman_filter(model, traj.observations)
        if mse(out.means, traj.states[1:]) < mse(
            np.zeros_like(traj.states[1:]), traj.states[1:]
        ):
            wins += 1
    assert wins >= 15


def test_classify_degenerate_strict_boundary():
    assert classify_degenerate([10.0, 2.0, 5.0]) is False  # exactly two is healthy
    assert classify_degenerate([10.0, 1.999, 5.0]) is True
    assert classify_degenerate([1.0]) is True
    with pytest.raises(ValueError):
        classify_degenerate([])


def _record(eps, degenerate):
    return RunRecord(
        eps=eps, cov_policy="block_diagonal", seed=0, logz=0.0, mse=0.0,
        min_ess=1.0 if degenerate else 100.0, degenerate=degenerate,
    )


def test_bin_degeneracy_counts():
    records = [
        _record(0.05, True),
        _record(0.05, False),
        _record(0.95, False),
        _record(0.55, True),
    ]
    out = bin_degeneracy(records, n_bins=2, eps_range=(0.0, 1.0))
    assert isinstance(out, BinnedDegeneracy)
    assert np.allclose(out.bin_edges, [0.0, 0.5, 1.0])
    assert np.array_equal(out.counts, [2, 2])
    assert np.allclose(out.probabilities, [0.5, 0.5])


def test_bin_degeneracy_empty_bins_are_nan():
    records = [_record(0.0, True), _record(1.0, False)]
    out = bin_degeneracy(records, n_bins=4, eps_range=(0.0, 1.0))
    assert out.probabilities[0] == 1.0
    # the top edge folds into the last bin
    assert out.probabilities[3] == 0.0
    assert np.isnan(out.probabilities[1]) and np.isnan(out.probabilities[2])
    assert np.array_equal(out.counts, [1, 0, 0, 1])


def test_bin_degeneracy_default_range_from_records():
    records = [_record(0.2, False), _record(0.8, True)]
    out = bin_degeneracy(records, n_bins=3)
    assert out.bin_edges[0] == 0.2 and out.bin_edges[-1] == 0.8


def test_bin_degeneracy_range_must_cover():
    with pytest.raises(ValueError):
        bin_degeneracy([_record(2.0, False)], n_bins=2, eps_range=(0.0, 1.0))
    with pytest.raises(ValueError):
        bin_degeneracy([], n_bins=2)


def test_bin_degeneracy_single_eps_value():
    records = [_record(0.5, True), _record(0.5, False), _record(0.5, False)]
    out = bin_degeneracy(records, n_bins=5)
    # zero-width range: everything lands in the first bin
    assert out.counts[0] == 3
    assert out.probabilities[0] == pytest.approx(1 / 3)


def test_jensen_gap_synthetic_lognormal():
    # log Zhat - log Z ~ N(-s^2/2, s^2) is the model for an unbiased
    # natural-scale estimator; with s = 1 both the empirical mean gap and
    # the predicted gap should be near -1/2
    rng = np.random.default_rng(123)
    gaps = rng.normal(-0.5, 1.0, size=10_000)
    mean_gap, variance, predicted = jensen_gap_check(gaps + 42.0, 42.0)
    assert mean_gap == pytest.approx(-0.5, abs=0.05)
    assert variance == pytest.approx(1.0, abs=0.05)
    assert predicted == pytest.approx(-0.5, abs=0.025)
    assert abs(mean_gap - predicted) < 0.1


def test_jensen_gap_needs_enough_estimates():
    with pytest.raises(ValueError):
        jensen_gap_check(np.zeros(29), 0.0)


def test_records_csv_roundtrip(tmp_path):
    records = [
        RunRecord(0.5, "sample_cov", 17, -12.25, 0.003, 1.5, True),
        RunRecord(0.0, "block_diagonal", 3, 60.125, 1e-4, 990.0, False),
    ]
    path = tmp_path / "records.csv"
    write_records_csv(records, path)
    back = read_records_csv(path)
    assert back == records

    # rewriting what was read back must be byte-identical
    path2 = tmp_path / "records2.csv"
    write_records_csv(back, path2)
    assert path.read_bytes() == path2.read_bytes()


def test_records_csv_header_and_flags(tmp_path):
    path = tmp_path / "records.csv"
    write_records_csv([RunRecord(1.0, "fixed", 0, 1.0, 1.0, 1.0, True)], path)
    lines = path.read_text().splitlines()
    assert lines[0] == "eps,cov_policy,seed,logz,mse,min_ess,degenerate"
    assert lines[1].endswith(",1")


def test_records_csv_skips_partial_tail(tmp_path):
    path = tmp_path / "records.csv"
    write_records_csv([RunRecord(0.5, "fixed", 1, 2.0, 3.0, 4.0, False)], path)
    with open(path, "a") as fh:
        fh.write("0.75,block_diagonal,2,-1.0")  # interrupted write
    back = read_records_csv(path)
    assert len(back) == 1 and back[0].seed == 1
