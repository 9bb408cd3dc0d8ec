"""Delampertized fractional Brownian motion: simulation and estimation.

A delampertized fBm is the stationary inverse Lamperti transform of a
fractional Brownian motion, with a time-contraction rate acting like a
mean-reversion strength.  The package simulates it exactly, evaluates its
Gaussian likelihood, and estimates (H, theta) by exact maximum likelihood
or by an absolute-moment method run on the Lamperti-transformed data.
"""

from .aam import (
    KernelSpec,
    LogLogPlot,
    ScaleGrid,
    aam_objective,
    absolute_moment_constant,
    asymptotic_moment,
    build_scale_grid,
    empirical_absolute_moment,
    fit_aam,
    increment_variance,
    kernel_smoothed_moments,
    loglog_regressions,
    raw_increment_loglog,
    theoretical_moment,
)
from .errors import (
    ConditioningError,
    DelfbmError,
    EstimationError,
    GridError,
    ParameterError,
    SeriesFormatError,
    TransformRangeError,
)
from .lamperti import (
    composed_process_time_map,
    lamperti_direct_series,
    lamperti_inverse_series,
)
from .likelihood import (
    EstimationResult,
    LikelihoodValue,
    fit_ml,
    log_likelihood,
    log_likelihood_affine,
)
from .process import (
    ModelParams,
    TimeGrid,
    TimeSeries,
    add_white_noise,
    build_covariance_matrix,
    delamperti_covariance,
    fbm_covariance,
    make_rng,
    read_series_csv,
    replication_rng,
    sample_path,
    write_series_csv,
)
from .simplex import (
    DEFAULT_INIT_SIMPLEX,
    constrain_box,
    inverse_transform_params,
    nelder_mead,
    transform_params,
)
from .study import (
    DiagnosisReport,
    StudyConfig,
    StudyResult,
    diagnose_series,
    evaluate_landscape,
    run_study,
)

__version__ = "0.1.0"
