"""Forecast, filter and parameter error metrics."""
import numpy as np

from .. import autodiff as ad
from ..datagen import simulate_truth, truth_initial_state
from ..exceptions import BlowUp, DimError, NotPositiveDefinite

LOG_2PI = float(np.log(2.0 * np.pi))


def attractor_states(system, n_states=500, rng=None, steps=10_000, burn_in=1_000):
    """``n_states`` states sampled from a long held-out truth rollout (rows)."""
    rng = rng if rng is not None else np.random.default_rng(0)
    x0 = truth_initial_state(system, rng)
    traj = simulate_truth(system, x0, steps + burn_in)[burn_in + 1:]
    pick = rng.choice(len(traj), size=n_states, replace=len(traj) < n_states)
    return traj[pick]


def forecast_rmse(model_hat, model_true, states):
    """One-step forecast RMSE over the rows of ``states``; ``inf`` if the model blows up."""
    x = np.asarray(states, dtype=float).T
    try:
        with np.errstate(over="ignore", invalid="ignore"):
            f_hat = ad.value_of(model_hat(ad.constant(x)))
    except BlowUp:
        return float("inf")
    f_true = ad.value_of(model_true(ad.constant(x)))
    err = np.mean((f_hat - f_true) ** 2)
    return float(np.sqrt(err)) if np.isfinite(err) else float("inf")


def filter_rmse(means, truth):
    means = np.asarray(means, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if means.shape != truth.shape:
        raise DimError(f"analysis shape {means.shape} does not match truth shape {truth.shape}")
    return float(np.sqrt(np.mean((means - truth) ** 2)))


def param_mae(theta_hat, theta_star):
    a = np.asarray(theta_hat, dtype=float).ravel()
    b = np.asarray(theta_star, dtype=float).ravel()
    if a.shape != b.shape:
        raise DimError(f"parameter vectors differ in length: {a.size} vs {b.size}")
    return float(np.sum(np.abs(a - b)) / b.size)


def loglik_terms(mean, s, y, idx):
    """``(-1/2 log det S, -1/2 |y - H m|^2_S)`` for one step."""
    m = ad.value_of(mean)[np.asarray(idx, dtype=np.intp), 0]
    s = ad.value_of(s)
    r = np.asarray(y, dtype=float).ravel() - m
    sign, logdet = np.linalg.slogdet(0.5 * (s + s.T))
    if sign <= 0:
        raise NotPositiveDefinite("innovation covariance is not positive definite")
    return -0.5 * logdet, -0.5 * float(r @ np.linalg.solve(s, r))


def eval_loglik_trace(stats, obs, idx):
    """Per-step Gaussian forecast log-likelihood (2*pi included) and its two components.

    Returns arrays ``(loglik, logdet_term, residual_term)``; steps without an
    innovation covariance (directly learned gains) are NaN.
    """
    n = len(stats)
    ll, ld, rs = np.full(n, np.nan), np.full(n, np.nan), np.full(n, np.nan)
    for t, (st, y, i) in enumerate(zip(stats, obs, idx)):
        if st.S is None:
            continue
        ld[t], rs[t] = loglik_terms(st.mean, st.S, y, i)
        ll[t] = ld[t] + rs[t] - 0.5 * len(i) * LOG_2PI
    return ll, ld, rs
