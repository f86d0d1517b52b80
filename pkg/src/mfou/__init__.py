"""Drift estimation for Ornstein-Uhlenbeck processes driven by mixed
fractional Brownian motion, with numerical verification of the estimator's
asymptotic theory at desk scale.
"""

from .cov import (
    IncrementCovariance,
    PathSample,
    fbm_covariance,
    fgn_autocovariance,
    increment_covariance,
    path_rng,
    simulate_noise,
    simulate_ou,
    simulate_path,
)
from .estimator import (
    DriftMLE,
    EstimateRecord,
    TrendMLE,
    drift_mle,
    drift_regressor,
    log_likelihood,
    martingale_transform,
    oracle_mle,
    regression_mle,
)
from .exceptions import DegenerateSampleError, NumericalError
from .grid import TimeGrid
from .harness import (
    CampaignSummary,
    ExperimentConfig,
    ks_statistic,
    make_config,
    read_campaign,
    run_campaign,
    run_laplace_sweep,
    summarize,
)
from .kernel import (
    CanonicalKernel,
    InverseKernel,
    NystromKernel,
    bracket_identity_residual,
    inverse_kernel,
    make_kernel,
    nystrom_kernel,
    projection_kernel,
)
from .laplace import (
    ConditionDiagnostics,
    LaplaceReport,
    LogdetReport,
    MonteCarloLaplace,
    condition_diagnostics,
    logdet_laplace,
    montecarlo_laplace,
    riccati_laplace,
)
from .spectral import (
    AsymptoticsFit,
    OperatorMatrix,
    PerturbedSolution,
    SpectralAsymptotics,
    bracket_slope_asymptotics,
    build_operator,
    eigen_asymptotics,
    graded_operator,
    loglog_fit,
    perturbed_endpoint_scaling,
    perturbed_slope_crosscheck,
    solve_perturbed,
)

__version__ = "0.1.0"
