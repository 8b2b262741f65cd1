"""Forecast/filter/parameter metrics and evaluation reports."""
from .report import EvalReport, evaluate, filter_trajectories, parameter_errors, write_analysis, write_trace
from .scores import (LOG_2PI, attractor_states, eval_loglik_trace, filter_rmse, forecast_rmse, loglik_terms,
                     param_mae)

__all__ = [
    "EvalReport", "LOG_2PI", "attractor_states", "eval_loglik_trace", "evaluate", "filter_rmse",
    "filter_trajectories", "forecast_rmse", "loglik_terms", "param_mae", "parameter_errors", "write_analysis",
    "write_trace",
]
