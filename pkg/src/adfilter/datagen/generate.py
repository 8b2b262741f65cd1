"""Twin-experiment data: truth rollouts, noisy observations and splits."""
from dataclasses import dataclass, field

import numpy as np

from .. import autodiff as ad
from ..dynamics.systems import DEFAULTS, CWSystem, GLVSystem, L96System
from .plans import ObservationPlan, make_plan

SPLITS = ("train", "val", "test")
SPINUP_STEPS = 500
_SPLIT_KEY = {"train": 0, "val": 1, "test": 2}


@dataclass
class Trajectory:
    truth: np.ndarray  # (T+1) x d_x, row 0 is the initial state
    obs: list          # y_1..y_T
    plan: ObservationPlan
    r_scale: float

    @property
    def T(self):
        return len(self.obs)

    @property
    def indices(self):
        return self.plan.indices

    def R(self, t):
        return self.r_scale * np.eye(len(self.plan.indices[t]))

    @property
    def R_list(self):
        return [self.R(t) for t in range(self.T)]


@dataclass
class Dataset:
    system: object
    train: list
    val: list
    test: list
    meta: dict = field(default_factory=dict)

    def split(self, name):
        return getattr(self, name)


def stream(seed, *keys):
    """Independent generator keyed by ``(seed, *keys)``."""
    return np.random.default_rng([int(seed), *[int(k) for k in keys]])


def make_true_system(cfg):
    """The ground-truth system for a config (GLV's steady state is seeded)."""
    if cfg.system == "cw":
        return CWSystem()
    if cfg.system == "l96":
        return L96System(dim=cfg.dim)
    return GLVSystem.sample(cfg.dim, stream(cfg.seed, 99))


def simulate_truth(system, x0, T):
    """Noise-free rollout of the true flow; returns ``(T+1) x d_x``."""
    step = system.true_model()
    x = np.asarray(x0, dtype=float).reshape(-1, 1)
    out = np.empty((T + 1, x.shape[0]))
    out[0] = x[:, 0]
    for t in range(1, T + 1):
        x = ad.value_of(step(x))
        out[t] = x[:, 0]
    return out


def truth_initial_state(system, rng):
    if isinstance(system, CWSystem):
        return system.x0.copy()
    if isinstance(system, L96System):
        x = rng.standard_normal(system.dim)
        return simulate_truth(system, x, SPINUP_STEPS)[-1]
    return np.abs(system.x_s_true[:, 0] + 0.1 * rng.standard_normal(system.dim))


def observe(truth, plan, r_scale, rng):
    """``y_t = x_t[idx_t] + eta_t`` for the states ``x_1..x_T`` (rows of ``truth``)."""
    sd = np.sqrt(r_scale)
    return [truth[t][plan.indices[t]] + sd * rng.standard_normal(len(plan.indices[t]))
            for t in range(len(plan.indices))]


def make_trajectory(system, cfg, split, i):
    rng = stream(cfg.seed, _SPLIT_KEY[split], i)
    truth = simulate_truth(system, truth_initial_state(system, rng), cfg.T)
    plan = make_plan(cfg.obs_mode, system.dim, cfg.ratio, cfg.T, rng)
    obs = observe(truth[1:], plan, cfg.r_scale, rng)
    return Trajectory(truth, obs, plan, cfg.r_scale)


def build_dataset(cfg, system=None):
    """Independent train/val/test trajectories; each has its own keyed stream."""
    system = system if system is not None else make_true_system(cfg)
    groups = {s: [make_trajectory(system, cfg, s, i) for i in range(getattr(cfg, f"n_{s}"))]
              for s in SPLITS}
    return Dataset(system, groups["train"], groups["val"], groups["test"], meta=dataset_meta(cfg, system))


def dataset_meta(cfg, system):
    meta = {
        "system": cfg.system, "dim": cfg.dim, "dt": system.dt, "ratio": cfg.ratio, "obs_mode": cfg.obs_mode,
        "r_scale": cfg.r_scale, "R": f"{cfg.r_scale} * I", "T": cfg.T, "seed": cfg.seed,
        "splits": {s: getattr(cfg, f"n_{s}") for s in SPLITS},
        "streams": "numpy default_rng([seed, split, index]); split: train=0, val=1, test=2",
    }
    if cfg.system == "glv":
        meta["x_s_true"] = system.x_s_true[:, 0].tolist()
    return meta


def initial_ensemble(system, n, rng, var=None, mean=None):
    """Initial ensemble ``d_x x n`` drawn around the system's nominal initial state."""
    sysname = system.name
    var = DEFAULTS[sysname]["ens_var"] if var is None else var
    if mean is None:
        mean = system.x0 if sysname == "cw" else np.full(system.dim, DEFAULTS[sysname]["ens_mean"])
    mean = np.asarray(mean, dtype=float).reshape(-1, 1)
    x = mean + np.sqrt(var) * rng.standard_normal((system.dim, n))
    return np.abs(x) if system.positive else x
