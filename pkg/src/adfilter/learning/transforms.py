"""Latent <-> constrained maps for bounded parameters."""
import numpy as np
from scipy.special import expit, logit

from .. import autodiff as ad


def _softplus_inv(y):
    y = np.asarray(y, dtype=float)
    # log(expm1(y)) without overflow for large y
    return y + np.log(-np.expm1(-y))


# name -> (taped forward, numpy forward, numpy inverse)
TRANSFORMS = {
    "identity": (lambda n: n, lambda x: np.asarray(x, dtype=float), lambda y: np.asarray(y, dtype=float)),
    "sigmoid": (ad.sigmoid, expit, logit),
    "softplus": (ad.softplus, lambda x: np.logaddexp(0.0, x), _softplus_inv),
}


def forward(name, latent):
    """Constrained value of ``latent`` (node or array)."""
    node_fn, np_fn, _ = TRANSFORMS[name]
    if isinstance(latent, ad.Node):
        return node_fn(latent)
    return np_fn(latent)


def inverse(name, value):
    return TRANSFORMS[name][2](value)
