"""Monte Carlo laboratory for the iterated Lévy transform of Brownian motion."""
from .grid_rng import Path, SeedSpec, TimeGrid, make_grid, sample_path, sample_paths
from .transform import (PathStack, SignSeries, LocalTimeSeries, sign_conv, levy_transform_integral,
                        levy_transform_tanaka, iterate_transforms, local_time_occupation,
                        sign_product)
from .hitting import TauResult, tau_estimate, zero_crossing_intervals
from .estimators import (EstimateWithCI, CovarianceSeries, TauScan, estimate_sign_covariance,
                         estimate_tau_scan, ks_test, mixing_bound_check, sign_cov_closed_form,
                         sup_abs_tail_analytic)
from .harness import ExperimentConfig, ResultSet, load_config, run_experiment, write_results

__all__ = [
    "Path", "SeedSpec", "TimeGrid", "make_grid", "sample_path", "sample_paths",
    "PathStack", "SignSeries", "LocalTimeSeries", "sign_conv", "levy_transform_integral",
    "levy_transform_tanaka", "iterate_transforms", "local_time_occupation", "sign_product",
    "TauResult", "tau_estimate", "zero_crossing_intervals",
    "EstimateWithCI", "CovarianceSeries", "TauScan", "estimate_sign_covariance",
    "estimate_tau_scan", "ks_test", "mixing_bound_check", "sign_cov_closed_form",
    "sup_abs_tail_analytic",
    "ExperimentConfig", "ResultSet", "load_config", "run_experiment", "write_results",
]
__version__ = "0.1.0"
