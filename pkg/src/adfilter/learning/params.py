"""Learnable parameter sets and their initialization per filter family."""
import json
from dataclasses import dataclass, field

import numpy as np

from .. import autodiff as ad
from ..dynamics.systems import DEFAULTS
from . import transforms

THETA, NOISE, PHI = "theta", "noise", "phi"

# Initial filter-parameter values shared by all systems.
INFLATION0 = 0.1
MIXING0 = 0.5


@dataclass
class Param:
    latent: np.ndarray
    transform: str
    group: str  # "theta", "noise" or "phi"

    @property
    def value(self):
        return transforms.forward(self.transform, self.latent)


@dataclass
class ParameterSet:
    """Named latent parameters plus fixed (non-learned) arrays.

    Names are ``theta1/<dynamics name>``, ``theta2/q`` and ``phi/<name>``.
    """

    params: dict = field(default_factory=dict)
    fixed: dict = field(default_factory=dict)

    def add(self, name, value, transform="identity", group=THETA):
        value = ad.as_matrix(value)
        self.params[name] = Param(transforms.inverse(transform, value).copy(), transform, group)

    def names(self):
        return list(self.params)

    def copy(self):
        return ParameterSet({k: Param(p.latent.copy(), p.transform, p.group) for k, p in self.params.items()},
                            {k: v.copy() for k, v in self.fixed.items()})

    def leaves(self, tape):
        return {k: tape.leaf(p.latent, name=k) for k, p in self.params.items()}

    def constrained(self, leaves=None):
        """Constrained values as nodes (taped when ``leaves`` are given)."""
        out = {}
        for k, p in self.params.items():
            latent = leaves[k] if leaves is not None else ad.constant(p.latent)
            out[k] = transforms.forward(p.transform, latent)
        return out

    def values(self):
        return {k: p.value for k, p in self.params.items()}

    def latents(self):
        return {k: p.latent for k, p in self.params.items()}

    def set_latents(self, new):
        for k, v in new.items():
            self.params[k].latent = np.asarray(v, dtype=float)

    def groups(self):
        return {k: p.group for k, p in self.params.items()}

    # -- checkpoint -----------------------------------------------------------------
    def to_dict(self):
        return {
            "params": {k: {"shape": list(p.latent.shape), "transform": p.transform, "group": p.group,
                           "latent": p.latent.tolist()} for k, p in self.params.items()},
            "fixed": {k: {"shape": list(v.shape), "value": v.tolist()} for k, v in self.fixed.items()},
        }

    @classmethod
    def from_dict(cls, data):
        out = cls()
        for k, p in data["params"].items():
            latent = np.asarray(p["latent"], dtype=float).reshape(p["shape"])
            out.params[k] = Param(latent, p["transform"], p["group"])
        for k, v in data.get("fixed", {}).items():
            out.fixed[k] = np.asarray(v["value"], dtype=float).reshape(v["shape"])
        return out

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)


def split_params(values, fixed=None):
    """Split a constrained-value dict into dynamics and filter parameter dicts."""
    theta1, filt = {}, {}
    for k, v in values.items():
        group, name = k.split("/", 1)
        (theta1 if group == "theta1" else filt)[name] = v
    for k, v in (fixed or {}).items():
        filt[k] = ad.constant(v)
    return theta1, filt


def init_parameters(system, family, rng, sigma0_sq, obs_idx=None, lowrank_p=None, q0=None, b0=None, k0=None):
    """Initial parameter set for ``family`` on ``system``.

    ``obs_idx`` (static observed rows) shapes the 3DVar-K gain.
    ``lowrank_p`` switches the background factor to ``C = I + B B^T`` with
    ``B`` of shape ``d_x x p``.
    """
    d = DEFAULTS[system.name]
    ps = ParameterSet()
    for name, (value, tf) in system.init_theta(rng, sigma0_sq).items():
        ps.add(f"theta1/{name}", value, tf, THETA)
    dim = system.dim
    if family in ("enkf", "ens3dvar"):
        ps.add("theta2/q", np.full((dim, 1), d["q0"] if q0 is None else q0), "softplus", NOISE)
    b0 = d["b0"] if b0 is None else b0
    if family in ("3dvar-c", "ens3dvar"):
        if lowrank_p is None:
            ps.add("phi/B", b0 * np.eye(dim), "identity", PHI)
        else:
            ps.add("phi/B", b0 * np.eye(dim, lowrank_p), "identity", PHI)
            ps.fixed["C0"] = np.eye(dim)
    if family == "3dvar-k":
        obs_idx = np.arange(dim) if obs_idx is None else np.asarray(obs_idx)
        k = np.zeros((dim, len(obs_idx)))
        k[obs_idx, np.arange(len(obs_idx))] = d["k0"] if k0 is None else k0
        ps.add("phi/K", k, "identity", PHI)
    if family == "enkf":
        ps.add("phi/inflation", INFLATION0, "sigmoid", PHI)
    if family == "ens3dvar":
        ps.add("phi/mixing", MIXING0, "sigmoid", PHI)
    return ps
