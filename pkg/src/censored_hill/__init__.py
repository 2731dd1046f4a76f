"""Tail-index and excess-of-loss premium estimation for randomly censored
heavy-tailed data, with Monte Carlo checks against the Gaussian limit laws."""
from .errors import CensoredHillError, DomainError, EstimationError, NumericError
from .estimators import (
    PremiumFit,
    SortedSample,
    TailFit,
    adapted_hill,
    asymptotic_ci,
    hill,
    hill_plot,
    kaplan_meier_survival,
    premium_estimate,
    premium_se,
    sort_with_concomitants,
    uncensored_fraction,
)
from .gausslimit import LimitParams, simulate_bridge, simulate_bridges
from .models import (
    CensoredSample,
    CensoringSetup,
    Family,
    TailModel,
    derived_params,
    h_quantile,
    sample_censored,
    subdist_ratio,
    theta,
)
from .montecarlo import (
    ExperimentConfig,
    ks_normality,
    run_estimation_experiment,
    run_limit_experiment,
)

__version__ = "0.1.0"
