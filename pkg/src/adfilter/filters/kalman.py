"""Exact Kalman filter for linear-Gaussian models (numpy only, no tape)."""
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from ..autodiff.primitives import psd_factor

LOG_2PI = float(np.log(2.0 * np.pi))


@dataclass
class KalmanResult:
    means: np.ndarray          # T x d_x analysis means
    covs: np.ndarray           # T x d_x x d_x analysis covariances
    pred_means: np.ndarray     # T x d_x forecast means
    loglik: np.ndarray         # per-step log N(y_t; H m_t, S_t), 2*pi included
    logdet_term: np.ndarray    # -1/2 log det S_t
    residual_term: np.ndarray  # -1/2 |y_t - H m_t|^2_{S_t}
    S: list = field(default_factory=list)

    @property
    def total_loglik(self):
        return float(self.loglik.sum())


def _per_step(value, t, elem_ndim):
    if isinstance(value, (list, tuple)) and len(value) == t and all(np.ndim(v) == elem_ndim for v in value):
        return list(value)
    return [value] * t


def kalman_filter(x0, p0, m, idx, r, y, q=None):
    """Run the Kalman recursion with row-selection observation operators.

    ``idx`` and ``r`` are either one value for every step or per-step lists;
    ``y`` is a sequence of observation vectors ``y_1 .. y_T``. The analysis
    covariance uses the Joseph form. ``q`` is additive forecast noise (default 0).
    """
    m = np.asarray(m, dtype=float)
    d = m.shape[0]
    t_len = len(y)
    idx_list = [np.asarray(i, dtype=np.intp).ravel() for i in _per_step(idx, t_len, 1)]
    r_list = [np.atleast_2d(np.asarray(v, dtype=float)) for v in _per_step(r, t_len, 2)]
    x = np.asarray(x0, dtype=float).reshape(d)
    p = np.asarray(p0, dtype=float).reshape(d, d)
    q = np.zeros((d, d)) if q is None else np.asarray(q, dtype=float)
    eye = np.eye(d)

    means = np.empty((t_len, d))
    covs = np.empty((t_len, d, d))
    preds = np.empty((t_len, d))
    logdet_term = np.empty(t_len)
    resid_term = np.empty(t_len)
    s_list = []
    for t in range(t_len):
        x = m @ x
        p = m @ p @ m.T + q
        sel = idx_list[t]
        yt = np.asarray(y[t], dtype=float).reshape(-1)
        hp = p[sel]
        s = hp[:, sel] + r_list[t]
        s = 0.5 * (s + s.T)
        fac = psd_factor(s)
        innov = yt - x[sel]
        z = linalg.cho_solve(fac, innov, check_finite=False)
        preds[t] = x
        logdet_term[t] = -np.sum(np.log(np.diag(fac[0])))
        resid_term[t] = -0.5 * innov @ z
        s_list.append(s)
        k = linalg.cho_solve(fac, hp, check_finite=False).T
        x = x + k @ innov
        a = eye.copy()
        a[:, sel] -= k
        p = a @ p @ a.T + k @ r_list[t] @ k.T
        p = 0.5 * (p + p.T)
        means[t] = x
        covs[t] = p
    dims = np.array([len(i) for i in idx_list], dtype=float)
    loglik = logdet_term + resid_term - 0.5 * dims * LOG_2PI
    return KalmanResult(means, covs, preds, loglik, logdet_term, resid_term, s_list)


def steady_state_gain(m, idx, r, q=None, p0=None, iters=10_000, tol=1e-14):
    """Fixed point of the Riccati recursion; returns the limiting gain."""
    m = np.asarray(m, dtype=float)
    d = m.shape[0]
    sel = np.asarray(idx, dtype=np.intp).ravel()
    r = np.atleast_2d(np.asarray(r, dtype=float))
    q = np.zeros((d, d)) if q is None else np.asarray(q, dtype=float)
    p = np.eye(d) if p0 is None else np.asarray(p0, dtype=float)
    k = np.zeros((d, len(sel)))
    for _ in range(iters):
        pf = m @ p @ m.T + q
        s = pf[np.ix_(sel, sel)] + r
        k_new = np.linalg.solve(s, pf[sel]).T
        a = np.eye(d)
        a[:, sel] -= k_new
        p = a @ pf @ a.T + k_new @ r @ k_new.T
        if np.max(np.abs(k_new - k)) < tol:
            return k_new
        k = k_new
    return k
