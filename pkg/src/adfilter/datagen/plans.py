"""Observation plans: which state components are observed at each time."""
from dataclasses import dataclass

import numpy as np

from ..exceptions import EmptyObservation

MODES = ("static", "time-varying", "leading")


@dataclass
class ObservationPlan:
    mode: str
    ratio: float
    indices: list  # one int array per time step 1..T

    @property
    def static(self):
        return self.mode != "time-varying"

    def __len__(self):
        return len(self.indices)


def systematic_indices(dim, ratio):
    """Keep ``i`` iff ``floor(i * ratio) > floor((i - 1) * ratio)``."""
    i = np.arange(dim)
    keep = np.floor(i * ratio) > np.floor((i - 1) * ratio)
    return np.flatnonzero(keep)


def make_plan(mode, dim, ratio, T, rng=None):
    """Observation indices for ``T`` steps.

    ``static`` spreads the observed rows evenly; ``leading`` keeps the first
    ``round(ratio * dim)`` components (CW positions); ``time-varying`` draws a
    fresh set of ``round(ratio * dim)`` distinct components every step.
    """
    if not 0 < ratio <= 1:
        raise ValueError(f"ratio must lie in (0, 1], got {ratio}")
    d_y = int(round(ratio * dim))
    if d_y < 1:
        raise EmptyObservation(f"ratio {ratio} observes no component of a {dim}-dimensional state")
    if mode == "static":
        idx = systematic_indices(dim, ratio)
        return ObservationPlan(mode, ratio, [idx] * T)
    if mode == "leading":
        idx = np.arange(d_y)
        return ObservationPlan(mode, ratio, [idx] * T)
    if mode == "time-varying":
        if rng is None:
            raise ValueError("time-varying plans need an rng")
        return ObservationPlan(mode, ratio, [np.sort(rng.choice(dim, d_y, replace=False)) for _ in range(T)])
    raise ValueError(f"unknown plan mode {mode!r}; expected one of {MODES}")
