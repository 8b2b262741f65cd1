"""Forecast covariances and gains for the four filter families.

Observation operators are row selections, so ``H C`` is ``gather_rows(C, idx)``
and no ``d_y x d_x`` selection matrix is ever formed.
"""
import numpy as np

from .. import autodiff as ad
from ..exceptions import EnsembleTooSmall, ShapeError, StaticObservationRequired


def ring_distance(dim):
    i = np.arange(dim)
    d = np.abs(i[:, None] - i[None, :])
    return np.minimum(d, dim - d)


def gaspari_cohn_value(z):
    """Fifth-order compactly supported correlation at scaled distance ``z``."""
    z = np.abs(np.asarray(z, dtype=float))
    out = np.zeros_like(z)
    inner = z <= 1.0
    outer = (z > 1.0) & (z < 2.0)  # exact zero at the support edge
    a = z[inner]
    out[inner] = -0.25 * a**5 + 0.5 * a**4 + 0.625 * a**3 - 5.0 / 3.0 * a**2 + 1.0
    b = z[outer]
    out[outer] = (b**5 / 12.0 - 0.5 * b**4 + 0.625 * b**3 + 5.0 / 3.0 * b**2
                  - 5.0 * b + 4.0 - 2.0 / (3.0 * b))
    return out


def gaspari_cohn(dim, radius):
    """Tapering matrix on a periodic ring of ``dim`` sites."""
    if radius <= 0:
        raise ValueError(f"taper radius must be positive, got {radius}")
    return gaspari_cohn_value(ring_distance(dim) / float(radius))


def ensemble_stats(forecasts):
    """Empirical mean (d_x x 1) and covariance of the columns of ``forecasts``."""
    n = forecasts.shape[1]
    if n < 2:
        raise EnsembleTooSmall(f"ensemble covariance needs N >= 2, got N={n}")
    mean = ad.matmul(forecasts, np.full((n, 1), 1.0 / n))
    anomalies = ad.sub(forecasts, ad.matmul(mean, np.ones((1, n))))
    cov = ad.scale(ad.matmul(anomalies, ad.transpose(anomalies)), 1.0 / (n - 1))
    return mean, cov


def ensemble_mean(forecasts):
    n = forecasts.shape[1]
    return ad.matmul(forecasts, np.full((n, 1), 1.0 / n))


def _taper(cov, taper):
    if taper is None:
        return cov
    return ad.hadamard(cov, ad.constant(taper))


def enkf_cov(c_hat, inflation, taper=None):
    """``(1 + inflation) * (taper o c_hat)`` with inflation already in [0, 1]."""
    tapered = _taper(c_hat, taper)
    return ad.add(tapered, ad.scale(tapered, inflation))


def static_cov(b, c0=None):
    """``B B^T``, plus the fixed base ``c0`` in the low-rank form."""
    cov = ad.matmul(b, ad.transpose(b))
    if c0 is not None:
        cov = ad.add(cov, c0)
    return cov


def ens3dvar_cov(c_hat, mixing, b, taper=None, inflation=0.0, c0=None):
    """Convex mix of the static and (fixed-taper, fixed-inflation) ensemble covariances."""
    ens = _taper(c_hat, taper)
    if inflation:
        ens = ad.scale(ens, 1.0 + float(inflation))
    static = static_cov(b, c0)
    return ad.add(ad.sub(static, ad.scale(static, mixing)), ad.scale(ens, mixing))


def innovation_cov(cov, idx, r):
    """``S = H C H^T + R``, symmetrized."""
    hc = ad.gather_rows(cov, idx)
    hch = ad.gather_rows(ad.transpose(hc), idx)
    s = ad.add(hch, r)
    return ad.scale(ad.add(s, ad.transpose(s)), 0.5), hc


def kalman_gain(cov, idx, r):
    """Gain ``C H^T S^{-1}`` and innovation covariance ``S`` for a symmetric ``C``."""
    cov = cov if isinstance(cov, ad.Node) else ad.constant(cov)
    idx = np.asarray(idx, dtype=np.intp).ravel()
    s, hc = innovation_cov(cov, idx, r)
    k = ad.transpose(ad.cholesky_solve_psd(s, hc))
    return k, s


def direct_gain(k, idx, static=True):
    """A learned gain used as-is; only meaningful when ``H`` never changes."""
    if not static:
        raise StaticObservationRequired("a directly parameterized gain needs a static observation operator")
    if k.shape[1] != len(idx):
        raise ShapeError(f"gain has {k.shape[1]} columns but {len(idx)} observed components")
    return k
