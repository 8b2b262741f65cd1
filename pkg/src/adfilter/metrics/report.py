"""Evaluation of learned parameters on held-out trajectories."""
import csv
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from ..datagen import stream
from ..exceptions import BlowUp, NotPositiveDefinite
from ..learning.params import split_params
from ..filters import run_filter
from .scores import eval_loglik_trace, filter_rmse, forecast_rmse, param_mae

_KEY_EVAL = 30


@dataclass
class EvalReport:
    forecast_rmse: float
    filter_rmse: float
    param_mae: dict
    loglik: list          # per-t trace of the first test trajectory
    logdet_term: list
    residual_term: list
    mean_loglik: float    # per-step mean over all test trajectories
    config: dict = field(default_factory=dict)
    diverged: bool = False

    def to_dict(self):
        return asdict(self)

    def write(self, out_dir):
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "report.json", "w", encoding="utf-8") as fh:
            json.dump(_jsonable(self.to_dict()), fh, indent=2, sort_keys=True)
            fh.write("\n")
        write_trace(out / "trace.csv", self.loglik, self.logdet_term, self.residual_term)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, float) and not np.isfinite(obj):
        return None if np.isnan(obj) else ("inf" if obj > 0 else "-inf")
    if isinstance(obj, np.generic):
        return _jsonable(obj.item())
    return obj


def write_trace(path, loglik, logdet_term, residual_term):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "loglik", "logdet_term", "residual_term"])
        for t, row in enumerate(zip(loglik, logdet_term, residual_term), start=1):
            w.writerow([t] + [repr(float(v)) for v in row])


def write_analysis(path, means):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t"] + [f"x{j}" for j in range(means.shape[1])])
        for t, row in enumerate(means, start=1):
            w.writerow([t] + [repr(float(v)) for v in row])


def parameter_errors(model_system, true_system, values):
    """MAE per parameter group; empty for systems learned through a network."""
    theta1, _ = split_params(values)
    if model_system.name == "l96":
        return {}
    hat = model_system.param_vector(theta1)
    star = true_system.param_vector(true_system.true_theta())
    if model_system.name == "glv":
        n = len(true_system.a_true)
        return {"A": param_mae(hat[:n], star[:n]), "r": param_mae(hat[n:], star[n:])}
    return {"theta": param_mae(hat, star)}


def filter_trajectories(setup, params, trajectories, key=_KEY_EVAL):
    """Untaped filter runs of ``trajectories`` with the given parameters."""
    theta1, filt = split_params(params.constrained(), params.fixed)
    model = setup.system.build_model(theta1)
    runs = []
    for i, traj in enumerate(trajectories):
        with np.errstate(over="ignore", invalid="ignore"):
            runs.append(run_filter(setup.x0, traj.obs, traj.indices, traj.R_list, setup.spec, model, filt,
                                   stream(setup.seed, key, i)))
    return runs


def evaluate(setup, params, trajectories, true_system, states, config=None):
    """Metrics of ``params`` on ``trajectories`` plus the forecast skill on ``states``."""
    theta1, _ = split_params(params.constrained())
    model_hat = setup.system.build_model(theta1)
    f_rmse = forecast_rmse(model_hat, true_system.true_model(), states)
    maes = parameter_errors(setup.system, true_system, params.values())
    try:
        runs = filter_trajectories(setup, params, trajectories)
    except (BlowUp, NotPositiveDefinite):
        nan = float("nan")
        return EvalReport(f_rmse, float("inf"), maes, [], [], [], nan, config or {}, diverged=True)
    means = np.concatenate([r.analysis_means for r in runs])
    truth = np.concatenate([tr.truth[1:] for tr in trajectories])
    traces = [eval_loglik_trace(r.stats, tr.obs, tr.indices) for r, tr in zip(runs, trajectories)]
    ll, ld, rs = traces[0]
    mean_ll = float(np.mean(np.concatenate([t[0] for t in traces])))
    report = EvalReport(f_rmse, filter_rmse(means, truth), maes, ll.tolist(), ld.tolist(), rs.tolist(), mean_ll,
                        config or {})
    report.runs = runs
    return report
