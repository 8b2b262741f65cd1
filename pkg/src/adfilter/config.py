"""Experiment configuration: one flat, validated record per run."""
import dataclasses
import json
import os
from dataclasses import dataclass

from .exceptions import ConfigError, EmptyObservation

SYSTEMS = ("cw", "l96", "glv")
METHODS = ("ad3dvar-c", "ad3dvar-k", "adenkf", "adens3dvar")
OBS_MODES = ("static", "time-varying", "leading")
METHOD_FAMILY = {"ad3dvar-c": "3dvar-c", "ad3dvar-k": "3dvar-k", "adenkf": "enkf", "adens3dvar": "ens3dvar"}

# Per-system defaults; ``None`` entries are resolved from other fields.
SYSTEM_DEFAULTS = {
    "cw": dict(dim=6, ratio=0.5, obs_mode="leading", sigma0_sq=0.03, r_scale=0.1, T=800,
               n_members=25, taper_radius=None),
    "l96": dict(dim=40, ratio=1.0, obs_mode="static", sigma0_sq=1.0, r_scale=1.0, T=1200,
                n_members=25, taper_radius=5.0),
    "glv": dict(dim=100, ratio=0.5, obs_mode="time-varying", sigma0_sq=0.1, r_scale=0.05, T=500,
                n_members=None, taper_radius=None),
}

# Learning rates (theta, phi) per system and method, picked on validation likelihood.
DEFAULT_LR = {
    "cw": {"ad3dvar-c": (5e-2, 1e-2), "ad3dvar-k": (5e-2, 1e-2), "adenkf": (5e-2, 1e-2), "adens3dvar": (5e-2, 1e-2)},
    "l96": {"ad3dvar-c": (1e-3, 1e-2), "ad3dvar-k": (1e-3, 1e-2), "adenkf": (1e-3, 1e-2, 5e-2),
            "adens3dvar": (1e-3, 1e-2, 5e-2)},
    "glv": {"ad3dvar-c": (1e-3, 1e-2), "ad3dvar-k": (1e-3, 1e-2), "adenkf": (1e-3, 1e-2), "adens3dvar": (1e-3, 1e-2)},
}


@dataclass
class ExperimentConfig:
    system: str = "cw"
    method: str = "adenkf"
    dim: int = None
    ratio: float = None
    obs_mode: str = None
    sigma0_sq: float = None
    r_scale: float = None
    T: int = None
    n_members: int = None
    L: int = 20
    epochs: int = 40
    lr_theta: float = None
    lr_phi: float = None
    lr_q: float = None
    taper_radius: float = None
    lowrank_p: int = None
    seed: int = 0
    n_train: int = 8
    n_val: int = 4
    n_test: int = 4
    ens_inflation: float = 0.0
    patience: int = 5
    output_dir: str = "."

    @property
    def family(self):
        return METHOD_FAMILY[self.method]

    def to_dict(self):
        return dataclasses.asdict(self)

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _fields():
    return {f.name for f in dataclasses.fields(ExperimentConfig)}


def resolve(raw=None, **overrides):
    """Build a validated config from a dict plus keyword overrides.

    ``None`` values fall back to the system defaults. ``ADFILTER_SEED`` in the
    environment overrides the seed.
    """
    data = dict(raw or {})
    data.update({k: v for k, v in overrides.items() if v is not None})
    unknown = sorted(set(data) - _fields())
    if unknown:
        raise ConfigError(f"unknown config field(s): {', '.join(unknown)}")
    system = data.get("system", "cw")
    if system not in SYSTEMS:
        raise ConfigError(f"system: expected one of {SYSTEMS}, got {system!r}")
    taper_given = "taper_radius" in data
    for key, value in SYSTEM_DEFAULTS[system].items():
        if data.get(key) is None and not (key == "taper_radius" and taper_given):
            data[key] = value
    if data.get("n_members") is None:
        data["n_members"] = int(data["dim"])
    env_seed = os.environ.get("ADFILTER_SEED")
    if env_seed not in (None, ""):
        try:
            data["seed"] = int(env_seed)
        except ValueError:
            raise ConfigError(f"ADFILTER_SEED must be an integer, got {env_seed!r}") from None
    cfg = ExperimentConfig(**data)
    lr = DEFAULT_LR[cfg.system].get(cfg.method, (1e-3, 1e-2))
    if cfg.lr_theta is None:
        cfg.lr_theta = lr[0]
    if cfg.lr_phi is None:
        cfg.lr_phi = lr[1]
    if cfg.lr_q is None and len(lr) > 2:
        cfg.lr_q = lr[2]
    validate(cfg)
    return cfg


def _check(cond, fields, msg):
    if not cond:
        raise ConfigError(f"{'/'.join(fields)}: {msg}")


def validate(cfg):
    """Reject illegal field values and combinations; messages name the fields."""
    _check(cfg.system in SYSTEMS, ["system"], f"expected one of {SYSTEMS}")
    _check(cfg.method in METHODS, ["method"], f"expected one of {METHODS}")
    _check(cfg.obs_mode in OBS_MODES, ["obs_mode"], f"expected one of {OBS_MODES}")
    _check(isinstance(cfg.dim, int) and cfg.dim >= 1, ["dim"], "must be a positive integer")
    if cfg.system == "cw":
        _check(cfg.dim == 6, ["system", "dim"], "the CW state has dimension 6")
    if cfg.system == "l96":
        _check(cfg.dim >= 4, ["system", "dim"], "Lorenz-96 needs dim >= 4")
    _check(0 < cfg.ratio <= 1, ["ratio"], "must lie in (0, 1]")
    if round(cfg.ratio * cfg.dim) < 1:
        raise EmptyObservation(f"ratio/dim: ratio {cfg.ratio} observes no component of a {cfg.dim}-state")
    _check(cfg.sigma0_sq >= 0, ["sigma0_sq"], "must be nonnegative")
    _check(cfg.r_scale > 0, ["r_scale"], "observation noise variance must be positive")
    _check(isinstance(cfg.T, int) and cfg.T >= 1, ["T"], "must be a positive integer")
    _check(isinstance(cfg.L, int) and cfg.L >= 1, ["L"], "must be a positive integer")
    _check(isinstance(cfg.epochs, int) and cfg.epochs >= 0, ["epochs"], "must be a nonnegative integer")
    _check(cfg.lr_theta >= 0 and cfg.lr_phi >= 0 and (cfg.lr_q is None or cfg.lr_q >= 0),
           ["lr_theta", "lr_phi", "lr_q"], "learning rates must be nonnegative")
    for name in ("n_train", "n_val", "n_test"):
        _check(getattr(cfg, name) >= 0, [name], "must be nonnegative")
    _check(cfg.n_train >= 1, ["n_train"], "need at least one training trajectory")
    if cfg.family in ("enkf", "ens3dvar"):
        _check(cfg.n_members >= 2, ["method", "n_members"], "ensemble methods need n_members >= 2")
    if cfg.taper_radius is not None:
        _check(cfg.taper_radius > 0, ["taper_radius"], "must be positive")
    if cfg.lowrank_p is not None:
        _check(cfg.method in ("ad3dvar-c", "adens3dvar"), ["method", "lowrank_p"],
               "a low-rank background factor needs a method with a static covariance")
        _check(1 <= cfg.lowrank_p < cfg.dim, ["lowrank_p", "dim"], "need 1 <= lowrank_p < dim")
    _check(0 <= cfg.ens_inflation, ["ens_inflation"], "must be nonnegative")
    _check(cfg.patience >= 1, ["patience"], "must be at least 1")
    if cfg.method == "ad3dvar-k":
        _check(cfg.obs_mode != "time-varying", ["method", "obs_mode"],
               "ad3dvar-k learns a fixed gain and cannot use time-varying observation operators")
    return cfg


def load_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as err:
        raise ConfigError(f"{path}: line {err.lineno}: {err.msg}") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    return raw
