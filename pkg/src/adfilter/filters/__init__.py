"""Filter steps, gain families and the exact Kalman oracle."""
from .gains import (direct_gain, enkf_cov, ens3dvar_cov, ensemble_mean, ensemble_stats, gaspari_cohn,
                    gaspari_cohn_value, innovation_cov, kalman_gain, ring_distance, static_cov)
from .kalman import KalmanResult, kalman_filter, steady_state_gain
from .run import FilterRun, run_filter
from .step import (ENSEMBLE_FAMILIES, FAMILIES, EnsembleState, ForecastStats, GainSpec, filter_step,
                   forecast_covariance, forecast_ensemble, perturb_observations)

__all__ = [
    "ENSEMBLE_FAMILIES", "FAMILIES", "EnsembleState", "FilterRun", "ForecastStats", "GainSpec",
    "KalmanResult", "direct_gain", "enkf_cov", "ens3dvar_cov", "ensemble_mean", "ensemble_stats",
    "filter_step", "forecast_covariance", "forecast_ensemble", "gaspari_cohn", "gaspari_cohn_value",
    "innovation_cov", "kalman_filter", "kalman_gain", "perturb_observations", "ring_distance",
    "run_filter", "static_cov", "steady_state_gain",
]
