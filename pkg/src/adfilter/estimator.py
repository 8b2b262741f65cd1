"""Scikit-learn style wrapper around training and filtering."""
import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .config import resolve
from .datagen import Dataset, Trajectory, make_true_system
from .exceptions import DimError
from .learning import make_setup, train
from .metrics import eval_loglik_trace, filter_rmse, filter_trajectories


def _trajectories(X, dim=None):
    """Accept a Dataset (its training split), a Trajectory or a list of them."""
    if isinstance(X, Dataset):
        X = X.train
    if isinstance(X, Trajectory):
        X = [X]
    X = list(X)
    if not X or not all(isinstance(t, Trajectory) for t in X):
        raise TypeError("expected a non-empty list of Trajectory objects")
    if dim is not None:
        bad = [t.truth.shape[1] for t in X if t.truth.shape[1] != dim]
        if bad:
            raise DimError(f"trajectories have dimension {bad[0]}, estimator was fitted on {dim}")
    return X


class ADFilter(BaseEstimator):
    """Learn forecast-model and gain parameters by differentiating a filter.

    Hyperparameters mirror the experiment configuration; unset ones take the
    per-system defaults. ``fit`` learns from trajectories, ``transform``
    returns filtered state estimates and ``score`` the mean per-step forecast
    log-likelihood.

    >>> from adfilter.config import resolve
    >>> from adfilter.datagen import build_dataset
    >>> ds = build_dataset(resolve(system="cw", T=20, n_train=1, n_val=0, n_test=1))
    >>> est = ADFilter(system="cw", method="ad3dvar-c", T=20, epochs=1).fit(ds)
    >>> est.transform(ds.test)[0].shape
    (20, 6)
    """

    def __init__(self, system="cw", method="adenkf", dim=None, ratio=None, obs_mode=None, sigma0_sq=None,
                 r_scale=None, T=None, n_members=None, L=20, epochs=40, lr_theta=None, lr_phi=None, lr_q=None,
                 taper_radius=None, lowrank_p=None, seed=0, ens_inflation=0.0, patience=5):
        self.system = system
        self.method = method
        self.dim = dim
        self.ratio = ratio
        self.obs_mode = obs_mode
        self.sigma0_sq = sigma0_sq
        self.r_scale = r_scale
        self.T = T
        self.n_members = n_members
        self.L = L
        self.epochs = epochs
        self.lr_theta = lr_theta
        self.lr_phi = lr_phi
        self.lr_q = lr_q
        self.taper_radius = taper_radius
        self.lowrank_p = lowrank_p
        self.seed = seed
        self.ens_inflation = ens_inflation
        self.patience = patience

    def _config(self):
        raw = {k: v for k, v in self.get_params().items() if v is not None or k == "taper_radius"}
        if self.taper_radius is None:
            raw.pop("taper_radius")
        return resolve(raw)

    def fit(self, X, y=None, val=None, true_system=None):
        """Train on ``X``; ``val`` drives the plateau scheduler when given.

        ``true_system`` defaults to the dataset's system (or a freshly sampled
        one); for L96 the learned model is built on an imperfect version of it.
        """
        cfg = self._config()
        if isinstance(X, Dataset):
            true_system = X.system if true_system is None else true_system
            val = X.val if val is None else val
        trajs = _trajectories(X, cfg.dim)
        if true_system is None:
            true_system = make_true_system(cfg)
        setup, params = make_setup(cfg, true_system, trajs[0].indices[0])
        result = train(setup, params, trajs, _trajectories(val, cfg.dim) if val else (), cfg.epochs,
                       cfg.lr_theta, cfg.lr_phi, cfg.patience, lr_q=cfg.lr_q)
        self.config_ = cfg
        self.setup_ = setup
        self.params_ = result.params
        self.curves_ = result.curves
        self.n_features_in_ = cfg.dim
        return self

    def transform(self, X):
        """Analysis means, one ``(T, d_x)`` array per trajectory."""
        check_is_fitted(self, "params_")
        trajs = _trajectories(X, self.n_features_in_)
        return [r.analysis_means for r in filter_trajectories(self.setup_, self.params_, trajs)]

    def score(self, X, y=None):
        """Mean per-step forecast log-likelihood (higher is better)."""
        check_is_fitted(self, "params_")
        trajs = _trajectories(X, self.n_features_in_)
        runs = filter_trajectories(self.setup_, self.params_, trajs)
        lls = [eval_loglik_trace(r.stats, t.obs, t.indices)[0] for r, t in zip(runs, trajs)]
        return float(np.mean(np.concatenate(lls)))

    def filter_rmse(self, X):
        check_is_fitted(self, "params_")
        trajs = _trajectories(X, self.n_features_in_)
        means = self.transform(trajs)
        return filter_rmse(np.concatenate(means), np.concatenate([t.truth[1:] for t in trajs]))
