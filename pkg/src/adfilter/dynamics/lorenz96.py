"""Lorenz-96 right-hand sides and the imperfect polynomial surrogate."""
import numpy as np

from .. import autodiff as ad
from ..exceptions import DimError, DimTooSmall

FORCING = 8.0

#: Coefficients that make the quadratic basis reproduce Lorenz-96 with F=8.
BETA_TRUE = np.zeros(18)
BETA_TRUE[0] = 8.0
BETA_TRUE[3] = -1.0
BETA_TRUE[11] = -1.0
BETA_TRUE[16] = 1.0

# per-coefficient perturbation variance, as a multiple of sigma0^2
_BETA_VARIANCE_TIER = np.array([1.0] + [0.1] * 5 + [0.01] * 12)


def ring_shift(dim, k):
    """Row indices that pick ``x[i + k]`` (periodic) for every ``i``."""
    return (np.arange(dim) + k) % dim


def _shifts(x, offsets):
    dim = x.shape[0]
    return {k: (x if k == 0 else ad.gather_rows(x, ring_shift(dim, k))) for k in offsets}


def lorenz96_rhs(x, forcing=FORCING):
    """``dx_i/dt = (x_{i+1} - x_{i-2}) x_{i-1} - x_i + F`` on a periodic ring."""
    dim = x.shape[0]
    if dim < 4:
        raise DimTooSmall(f"Lorenz-96 needs at least 4 components, got {dim}")
    s = _shifts(x, (-2, -1, 1))
    return (s[1] - s[-2]) * s[-1] - x + float(forcing)


def l96_poly_rhs(x, beta):
    """Quadratic-library surrogate of Lorenz-96.

    Basis per component ``i``, in coefficient order::

        1, x[i-2], x[i-1], x[i], x[i+1], x[i+2],
        squares of the same five terms,
        x[i-2]x[i-1], x[i-1]x[i], x[i]x[i+1], x[i+1]x[i+2],
        x[i-2]x[i], x[i-1]x[i+1], x[i]x[i+2]

    ``beta`` is an 18-vector (array, or an 18x1 node to learn it).
    """
    dim = x.shape[0]
    if dim < 4:
        raise DimTooSmall(f"Lorenz-96 needs at least 4 components, got {dim}")
    learnable = isinstance(beta, ad.Node) and beta.tape is not None
    b = beta if learnable else np.asarray(ad.value_of(beta), dtype=float).ravel()
    if (b.shape[0] if learnable else b.size) != 18:
        raise DimError(f"beta must have 18 entries, got shape {np.shape(ad.value_of(beta))}")
    s = _shifts(x, (-2, -1, 0, 1, 2))
    lin = [s[-2], s[-1], s[0], s[1], s[2]]
    terms = lin + [v * v for v in lin] + [
        s[-2] * s[-1], s[-1] * s[0], s[0] * s[1], s[1] * s[2],
        s[-2] * s[0], s[-1] * s[1], s[0] * s[2],
    ]
    if learnable:
        out = ad.gather_rows(beta, [0]) + terms[0] * ad.gather_rows(beta, [1])
        for m, term in enumerate(terms[1:], start=2):
            out = out + term * ad.gather_rows(beta, [m])
        return out
    out = None
    for m, term in enumerate(terms, start=1):
        if b[m] == 0.0:
            continue
        contrib = term * float(b[m])
        out = contrib if out is None else out + contrib
    if out is None:
        out = x * 0.0
    return out + float(b[0])


def sample_imperfect_l96(sigma0_sq, rng, beta_true=BETA_TRUE):
    """Perturbed coefficients: variance sigma0^2, 0.1 sigma0^2, 0.01 sigma0^2 by tier."""
    if sigma0_sq < 0:
        raise ValueError("sigma0_sq must be non-negative")
    std = np.sqrt(sigma0_sq * _BETA_VARIANCE_TIER)
    return np.asarray(beta_true, dtype=float) + std * rng.standard_normal(18)
