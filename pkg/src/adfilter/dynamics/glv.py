"""Generalized Lotka-Volterra dynamics with a 4-group block interaction matrix."""
import numpy as np

from .. import autodiff as ad
from ..exceptions import DimError

N_GROUPS = 4
N_BLOCK_PARAMS = 10

#: Block parameters in canonical order a1..a10.
A_TRUE = np.array([0.1, 0.05, 0.01, -0.04, 0.1, 0.05, 0.01, 0.1, 0.05, 0.1])


def block_pairs():
    """Unordered group pairs ``(g, h)`` with ``g <= h`` in row-major order."""
    return [(g, h) for g in range(N_GROUPS) for h in range(g, N_GROUPS)]


def block_pattern(dim):
    """``(dim*dim, 10)`` matrix ``P`` with ``vec(A) = P @ a`` (row-major vec).

    Off-diagonal group pairs ``g < h`` carry ``+a`` in block ``(g, h)`` and
    ``-a`` in block ``(h, g)``. Diagonal blocks carry ``-a`` (self-limiting
    interactions, so positive ``a`` means a stable group).
    """
    if dim % N_GROUPS:
        raise DimError(f"number of species must be divisible by {N_GROUPS}, got {dim}")
    size = dim // N_GROUPS
    group = np.arange(dim) // size
    pattern = np.zeros((dim, dim, N_BLOCK_PARAMS))
    for k, (g, h) in enumerate(block_pairs()):
        rows, cols = group == g, group == h
        if g == h:
            pattern[np.ix_(rows, cols, [k])] = -1.0
        else:
            pattern[np.ix_(rows, cols, [k])] = 1.0
            pattern[np.ix_(cols, rows, [k])] = -1.0
    return pattern.reshape(dim * dim, N_BLOCK_PARAMS)


def build_block_A(a, dim, pattern=None):
    """Interaction matrix from the 10 block parameters (array or 10x1 node)."""
    if pattern is None:
        pattern = block_pattern(dim)
    if isinstance(a, ad.Node):
        return ad.reshape(ad.matmul(ad.constant(pattern), a), (dim, dim))
    a = np.asarray(a, dtype=float).ravel()
    if a.size != N_BLOCK_PARAMS:
        raise DimError(f"expected {N_BLOCK_PARAMS} block parameters, got {a.size}")
    return (pattern @ a).reshape(dim, dim)


def glv_rhs(x, A, r):
    """``dx_i/dt = x_i (r + A x)_i`` for a ``(dim, N)`` node ``x``."""
    n = x.shape[1]
    growth = ad.matmul(r, ad.constant(np.ones((1, n)))) if n > 1 else r
    return x * (growth + ad.matmul(A, x))


def glv_rate_from_steady_state(A, x_s):
    """Rates ``r = -A x_s`` that make ``x_s`` a fixed point."""
    if isinstance(A, ad.Node) or isinstance(x_s, ad.Node):
        return -ad.matmul(A, x_s)
    return -(np.asarray(A) @ np.asarray(x_s).reshape(-1, 1))
