"""One generic analysis step, shared by all gain families."""
from dataclasses import dataclass

import numpy as np

from .. import autodiff as ad
from ..exceptions import ShapeError
from .gains import direct_gain, ens3dvar_cov, enkf_cov, ensemble_mean, ensemble_stats, kalman_gain, static_cov

FAMILIES = ("3dvar-c", "3dvar-k", "enkf", "ens3dvar")
ENSEMBLE_FAMILIES = ("enkf", "ens3dvar")


@dataclass
class GainSpec:
    """Which filter to run and its fixed (non-learned) settings.

    ``ens_inflation`` is the fixed inflation of the ensemble part of the
    hybrid covariance; ``positive`` folds noisy quantities through ``abs``.
    """

    family: str
    n_members: int = 1
    taper: np.ndarray = None
    ens_inflation: float = 0.0
    positive: bool = False

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown filter family {self.family!r}; expected one of {FAMILIES}")
        if self.ensemble:
            if self.n_members < 2:
                raise ValueError(f"{self.family} needs n_members >= 2, got {self.n_members}")
        elif self.n_members != 1:
            raise ValueError(f"{self.family} runs a single state (n_members=1), got {self.n_members}")

    @property
    def ensemble(self):
        return self.family in ENSEMBLE_FAMILIES

    @property
    def s(self):
        return 1 if self.ensemble else 0


@dataclass
class EnsembleState:
    members: object  # d_x x N node
    t: int = 0

    def __post_init__(self):
        if not isinstance(self.members, ad.Node):
            self.members = ad.constant(self.members)
        if self.members.shape[1] < 1:
            raise ShapeError("ensemble must have at least one member")

    @property
    def n_members(self):
        return self.members.shape[1]

    @property
    def dim(self):
        return self.members.shape[0]

    def mean(self):
        return self.members.value.mean(axis=1)


@dataclass
class ForecastStats:
    mean: object  # forecast mean, d_x x 1
    cov: object = None
    S: object = None


def forecast_ensemble(ens, model, q=None, s=0, rng=None, positive=False):
    """Push every member through ``model`` and optionally add ``N(0, diag(q))`` noise.

    ``q`` holds the constrained (positive) diagonal of the forecast-noise
    covariance as a ``d_x x 1`` node or array.
    """
    x = ens.members if isinstance(ens, EnsembleState) else ens
    f = model(x)
    if s:
        n = f.shape[1]
        xi = rng.standard_normal(f.shape)
        spread = ad.matmul(ad.sqrt(q), np.ones((1, n)))
        f = ad.add(f, ad.hadamard(spread, xi))
        if positive:
            f = ad.abs(f)
    t = ens.t + 1 if isinstance(ens, EnsembleState) else 0
    return EnsembleState(f, t)


def perturb_observations(y, r, n, rng, positive=False):
    """``n`` copies of ``y`` plus independent ``N(0, R)`` draws (not recentred)."""
    y = np.asarray(y, dtype=float).reshape(-1, 1)
    r = np.atleast_2d(np.asarray(r, dtype=float))
    noise = rng.standard_normal((y.shape[0], n))
    if np.any(r):
        noise = np.linalg.cholesky(0.5 * (r + r.T)) @ noise
    else:
        noise = np.zeros_like(noise)
    out = y + noise
    return np.abs(out) if positive else out


def forecast_covariance(spec, forecasts, params):
    """The family's forecast covariance node (``None`` for 3DVar-K)."""
    fam = spec.family
    if fam == "3dvar-c":
        return static_cov(params["B"], params.get("C0"))
    if fam == "enkf":
        _, c_hat = ensemble_stats(forecasts)
        return enkf_cov(c_hat, params["inflation"], spec.taper)
    if fam == "ens3dvar":
        _, c_hat = ensemble_stats(forecasts)
        return ens3dvar_cov(c_hat, params["mixing"], params["B"], spec.taper,
                            spec.ens_inflation, params.get("C0"))
    return None


def filter_step(ens, y, idx, r, spec, model, params, rng, static=True):
    """Forecast, then analysis ``f + K (y~ - H f)``.

    ``params`` maps names to constrained parameter nodes: ``q`` (ensemble
    families), ``B`` / ``C0`` (3DVar-C, Ens3DVar), ``K`` (3DVar-K),
    ``inflation`` (EnKF), ``mixing`` (Ens3DVar).
    Returns the analysis ensemble and the forecast statistics for the loss.
    """
    idx = np.asarray(idx, dtype=np.intp).ravel()
    r = np.atleast_2d(np.asarray(r, dtype=float))
    fc = forecast_ensemble(ens, model, params.get("q"), spec.s, rng, spec.positive)
    f = fc.members
    mean = ensemble_mean(f) if f.shape[1] > 1 else f
    cov = forecast_covariance(spec, f, params)
    if cov is None:
        k = direct_gain(params["K"], idx, static)
        s_mat = None
    else:
        k, s_mat = kalman_gain(cov, idx, r)
    if spec.ensemble:
        y_tilde = perturb_observations(y, r, f.shape[1], rng, spec.positive)
    else:
        y_tilde = np.asarray(y, dtype=float).reshape(-1, 1)
    innov = ad.sub(y_tilde, ad.gather_rows(f, idx))
    analysis = ad.add(f, ad.matmul(k, innov))
    return EnsembleState(analysis, fc.t), ForecastStats(mean, cov, s_mat)
