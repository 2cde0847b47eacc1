"""Adaptive estimation of linear functionals of the slope in
scalar-on-function linear regression.

The package bundles the data-driven estimator (thresholded projection plus
penalized-contrast dimension selection), a Gaussian simulator, theoretical
risk and rate oracles, and a Monte Carlo harness that probes the convergence
rates at desk scale.
"""
from .sequences import (
    Regime,
    SequenceModel,
    TabulatedSequenceModel,
    SaturationError,
    UnderflowWarning,
    beta,
    gamma,
    check_assumption,
)
from .functionals import (
    PointEval,
    DerivativeEval,
    LocalAverage,
    Custom,
    coefficients,
    gram,
)
from .simulate import (
    Covariance,
    SimConfig,
    SlopeSpec,
    Dataset,
    make_slope,
    draw_dataset,
    true_value,
    save_dataset_csv,
    load_dataset_csv,
)
from .estimator import (
    Moments,
    GalerkinFit,
    empirical_moments,
    spectral_norm_inverse,
    galerkin_estimate,
    plug_in,
)
from .adaptive import (
    AdaptiveResult,
    AdaptiveEstimationError,
    cap_m_ell,
    cap_m_hat,
    penalties,
    contrasts,
    select,
    adaptive_estimate,
    check_selection_bound,
    selection_bound_suite,
)
from .oracle import (
    OracleRisk,
    TheoreticalPenalty,
    RateDescriptor,
    DivergentTailError,
    RegimeConditionError,
    risk_term,
    risk_profile,
    minimax_dimension,
    theoretical_penalty,
    rate_exponent,
    check_link_bounds,
)
from .harness import (
    StudyConfig,
    StudyReport,
    StudyError,
    run_study,
    fit_rate,
    sandwich_frequency,
)

__version__ = "0.1.0"
