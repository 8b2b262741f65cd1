"""Finite-difference checks of full filter-loss gradients on toy problems."""
import numpy as np

from ..config import METHOD_FAMILY, resolve
from ..datagen import build_dataset, stream
from .train import forward, make_setup, window_gradient

# Small problems per system: (dim, ratio, obs_mode).
TOY = {"cw": (6, 0.5, "leading"), "l96": (6, 1.0, "static"), "glv": (4, 1.0, "static")}
THRESHOLD = 1e-4


def _probe_entries(shape, max_entries, rng):
    entries = list(np.ndindex(shape))
    if max_entries is None or len(entries) <= max_entries:
        return entries
    pick = rng.choice(len(entries), size=max_entries, replace=False)
    return [entries[k] for k in sorted(pick)]


def _fd(setup, params, args, seed, eps, max_entries):
    """Central differences on latents; entries not probed stay NaN."""
    out = {}
    rng = stream(seed, 51)
    for name, p in params.params.items():
        g = np.full_like(p.latent, np.nan)
        for i in _probe_entries(p.latent.shape, max_entries, rng):
            vals = []
            for sgn in (1.0, -1.0):
                probe = params.copy()
                probe.params[name].latent[i] += sgn * eps
                _, loss, _ = forward(setup, probe, setup.x0, *args, stream(seed, 50))
                vals.append(float(loss.value[0, 0]))
            g[i] = (vals[0] - vals[1]) / (2.0 * eps)
        out[name] = g
    return out


def check_method(system="cw", method="adenkf", T=5, n_members=4, seed=0, eps=1e-6, max_entries=12):
    """Max relative error ``|g_ad - g_fd| / max(1, |g_fd|)`` per parameter.

    The loss is one window of length ``T`` on a freshly generated toy
    trajectory; the filter noise stream is frozen so both gradients see the
    same draws. Large tensors (network weights) are probed at
    ``max_entries`` randomly chosen positions.
    """
    dim, ratio, mode = TOY[system]
    cfg = resolve(system=system, method=method, dim=dim, ratio=ratio, obs_mode=mode, T=T, L=T,
                  n_members=n_members, taper_radius=None, seed=seed, n_train=1, n_val=0, n_test=0)
    ds = build_dataset(cfg)
    traj = ds.train[0]
    setup, params = make_setup(cfg, ds.system, traj.indices[0])
    args = (traj.obs, traj.indices, traj.R_list)
    _, grads, _ = window_gradient(setup, params, setup.x0, *args, stream(seed, 50))
    fd = _fd(setup, params, args, seed, eps, max_entries)
    out = {}
    for k in grads:
        seen = ~np.isnan(fd[k])
        rel = np.abs(grads[k][seen] - fd[k][seen]) / np.maximum(1.0, np.abs(fd[k][seen]))
        out[k] = float(rel.max())
    return out


def gradcheck_table(system="cw", methods=tuple(METHOD_FAMILY), seed=0, **kw):
    """Rows ``(method, max relative error, passed)`` for each method."""
    rows = []
    for m in methods:
        errs = check_method(system, m, seed=seed, **kw)
        worst = max(errs.values()) if errs else 0.0
        rows.append((m, worst, bool(worst < THRESHOLD)))
    return rows
