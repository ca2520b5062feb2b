"""Simulation and likelihood inference for conditional duration models
observed over a fixed time span."""

from .harness import (ExperimentConfig, ExperimentReport, ks_statistic,
                      qq_against_normal, qq_correlation,
                      reference_limit_sample, run_counting_experiment,
                      run_qmle_experiment)
from .mle import (EstimationResult, FitOptions, LikelihoodWorkspace, fit,
                  information, log_likelihood, score, t_ratio)
from .model import (AcdParams, LimitLawSpec, MonteCarloBudget, TailProfile,
                    TruncationRule, alpha_for_kappa, estimate_c_kappa,
                    estimate_limit_constants, psi_next, sample_t_infinity,
                    stationarity_bound, stationary_mean, tail_index,
                    tail_profile)
from .rng import (InnovationSpec, RandomStream, custom_innovations,
                  make_stream, sample_positive_stable, sample_skewed_stable,
                  sample_unit_exponential, unit_exponential)
from .sim import (CountingPath, DurationSeries, calibrate_omega_unit_median,
                  counting_path, simulate_fixed_count, simulate_fixed_span)
from .tail import TailEstimate, hill_estimator, hill_path, survival_slope

__version__ = "0.1.0"

__all__ = [
    "AcdParams", "CountingPath", "DurationSeries", "EstimationResult",
    "ExperimentConfig", "ExperimentReport", "FitOptions", "InnovationSpec",
    "LikelihoodWorkspace", "LimitLawSpec", "MonteCarloBudget", "RandomStream",
    "TailEstimate", "TailProfile", "TruncationRule", "alpha_for_kappa",
    "calibrate_omega_unit_median", "counting_path", "custom_innovations",
    "estimate_c_kappa", "estimate_limit_constants", "fit", "hill_estimator",
    "hill_path", "information", "ks_statistic", "log_likelihood",
    "make_stream", "psi_next", "qq_against_normal", "qq_correlation",
    "reference_limit_sample", "run_counting_experiment",
    "run_qmle_experiment", "sample_positive_stable", "sample_skewed_stable",
    "sample_t_infinity", "sample_unit_exponential", "score",
    "simulate_fixed_count", "simulate_fixed_span", "stationarity_bound",
    "stationary_mean", "survival_slope", "t_ratio", "tail_index",
    "tail_profile", "unit_exponential",
]
