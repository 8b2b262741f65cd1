"""Filtering a whole observation sequence (or a window of it)."""
from dataclasses import dataclass

import numpy as np

from .. import autodiff as ad
from ..exceptions import StaticObservationRequired
from .step import EnsembleState, filter_step


@dataclass
class FilterRun:
    final: EnsembleState
    stats: list          # ForecastStats per step
    analysis_means: np.ndarray  # steps x d_x


def run_filter(x0, obs, idx, r, spec, model, params, rng, static=None):
    """Filter ``obs`` (list of vectors) from the initial ensemble ``x0``.

    ``idx`` / ``r`` are per-step lists. Works both on and off a tape: pass
    taped parameter nodes to record the run, plain arrays to evaluate it.
    """
    if static is None:
        static = all(np.array_equal(idx[0], i) for i in idx)
    if spec.family == "3dvar-k" and not static:
        raise StaticObservationRequired("3DVar-K cannot filter time-varying observation operators")
    ens = x0 if isinstance(x0, EnsembleState) else EnsembleState(x0)
    stats = []
    means = np.empty((len(obs), ens.dim))
    for t, y in enumerate(obs):
        ens, st = filter_step(ens, y, idx[t], r[t], spec, model, params, rng, static)
        stats.append(st)
        means[t] = ens.mean()
    return FilterRun(ens, stats, means)
