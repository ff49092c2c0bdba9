"""Particle filtering with conjugate artificial process noise: proposals
and weights that exploit added Gaussian state noise against a linear
Gaussian observation model, exact Kalman baselines, benchmark models, and
a sweep harness over the noise magnitude."""

from .errors import (
    AllWeightsZero,
    DegenerateWeights,
    NotPositiveDefinite,
    NumericalBlowup,
    ParseError,
    ValidationError,
)
from .gaussian import (
    GaussianParams,
    cholesky,
    mvn_logpdf,
    mvn_sample,
    psd_cholesky,
    weighted_mean_cov,
)
from .kalman import KalmanOutput, kalman_filter, kalman_filter_augmented
from .metrics import (
    BinnedDegeneracy,
    RunRecord,
    bin_degeneracy,
    classify_degenerate,
    jensen_gap_check,
    mse,
    read_records_csv,
    write_records_csv,
)
from .models import (
    LgssmSpec,
    Lorenz96Spec,
    Trajectory,
    lgssm_standard,
    lorenz96_drift,
    lorenz96_standard,
    read_trajectory_csv,
    write_trajectory_csv,
)
from .smc import (
    ADAPTIVE,
    BLOCK_DIAGONAL,
    BOOTSTRAP,
    CAPF,
    EVERY_STEP,
    FIXED,
    LOCALLY_OPTIMAL,
    SAMPLE_COV,
    FilterConfig,
    FilterOutput,
    ParticleEnsemble,
    artificial_cov,
    bootstrap_step,
    capf_step,
    conditional_gaussian,
    ess,
    locally_optimal_step,
    normalize_and_accumulate,
    read_filter_csv,
    run_filter,
    systematic_resample,
    write_filter_csv,
)
from .experiment import (
    BaselinePoint,
    ExperimentConfig,
    SweepResult,
    filter_model_for,
    load_config,
    make_model,
    run_sweep,
    validate_config,
)
from .figures import emit_figures

__version__ = "0.1.0"

__all__ = [
    "ADAPTIVE",
    "AllWeightsZero",
    "BLOCK_DIAGONAL",
    "BOOTSTRAP",
    "BaselinePoint",
    "BinnedDegeneracy",
    "CAPF",
    "DegenerateWeights",
    "EVERY_STEP",
    "ExperimentConfig",
    "FIXED",
    "FilterConfig",
    "FilterOutput",
    "GaussianParams",
    "KalmanOutput",
    "LOCALLY_OPTIMAL",
    "LgssmSpec",
    "Lorenz96Spec",
    "NotPositiveDefinite",
    "NumericalBlowup",
    "ParseError",
    "ParticleEnsemble",
    "RunRecord",
    "SAMPLE_COV",
    "SweepResult",
    "Trajectory",
    "ValidationError",
    "artificial_cov",
    "bin_degeneracy",
    "bootstrap_step",
    "capf_step",
    "cholesky",
    "classify_degenerate",
    "conditional_gaussian",
    "emit_figures",
    "ess",
    "filter_model_for",
    "jensen_gap_check",
    "kalman_filter",
    "kalman_filter_augmented",
    "lgssm_standard",
    "load_config",
    "locally_optimal_step",
    "lorenz96_drift",
    "lorenz96_standard",
    "make_model",
    "mse",
    "mvn_logpdf",
    "mvn_sample",
    "normalize_and_accumulate",
    "psd_cholesky",
    "read_filter_csv",
    "read_records_csv",
    "read_trajectory_csv",
    "run_filter",
    "run_sweep",
    "systematic_resample",
    "validate_config",
    "weighted_mean_cov",
    "write_filter_csv",
    "write_records_csv",
    "write_trajectory_csv",
]
