"""Training losses recorded on the tape."""
import numpy as np

from .. import autodiff as ad
from ..exceptions import StaticObservationRequired


def nll_step(mean, s, y, idx):
    """``1/2 log det S + 1/2 r^T S^{-1} r`` with ``r = y - H mean`` (no 2*pi)."""
    r = ad.sub(np.asarray(y, dtype=float).reshape(-1, 1), ad.gather_rows(mean, idx))
    quad = ad.sum(ad.hadamard(r, ad.cholesky_solve_psd(s, r)))
    return ad.scale(ad.add(ad.logdet_psd(s), quad), 0.5)


def nll_loss(stats, obs, idx):
    """Negative Gaussian forecast log-likelihood summed over a window."""
    total = None
    for st, y, i in zip(stats, obs, idx):
        term = nll_step(st.mean, st.S, y, i)
        total = term if total is None else ad.add(total, term)
    return total


def loss_3dvar_k(stats, obs, idx):
    """Mean squared observation-space forecast residual over a window."""
    first = np.asarray(idx[0])
    if any(not np.array_equal(first, i) for i in idx):
        raise StaticObservationRequired("the 3DVar-K loss needs a static observation operator")
    total = None
    for st, y in zip(stats, obs):
        r = ad.sub(np.asarray(y, dtype=float).reshape(-1, 1), ad.gather_rows(st.mean, first))
        term = ad.reduce_sumsq(r)
        total = term if total is None else ad.add(total, term)
    return ad.scale(total, 1.0 / len(stats))


def window_loss(family, stats, obs, idx):
    if family == "3dvar-k":
        return loss_3dvar_k(stats, obs, idx)
    return nll_loss(stats, obs, idx)
