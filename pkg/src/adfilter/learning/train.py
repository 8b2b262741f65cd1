"""Truncated backpropagation through the filter recursion."""
import math
from dataclasses import dataclass, field

import numpy as np

from .. import autodiff as ad
from ..datagen import initial_ensemble, stream
from ..dynamics.lorenz96 import sample_imperfect_l96
from ..exceptions import BlowUp, DivergedRun, GradientBlowUp, NotPositiveDefinite
from ..filters import GainSpec, gaspari_cohn, run_filter
from .losses import window_loss
from .optim import Adam, PlateauScheduler
from .params import NOISE, PHI, THETA, init_parameters, split_params

# Stream keys (first entry after the seed) reserved by training.
_KEY_WINDOW, _KEY_VAL, _KEY_ENS, _KEY_INIT, _KEY_MODEL = 10, 11, 20, 21, 22

DIVERGENCE = (BlowUp, NotPositiveDefinite, GradientBlowUp, FloatingPointError)


@dataclass
class Setup:
    """Everything fixed during training: model system, filter spec, initial ensemble."""

    system: object
    spec: GainSpec
    x0: np.ndarray
    L: int = 20
    seed: int = 0

    @property
    def family(self):
        return self.spec.family


@dataclass
class TrainResult:
    params: object
    curves: list = field(default_factory=list)     # per-epoch dicts
    snapshots: list = field(default_factory=list)  # ParameterSet after each epoch
    events: list = field(default_factory=list)     # diverged windows


def model_system(cfg, true_system):
    """The system whose model is learned (L96 gets an imperfect polynomial base)."""
    if cfg.system == "l96":
        beta = sample_imperfect_l96(cfg.sigma0_sq, stream(cfg.seed, _KEY_MODEL))
        return true_system.with_beta(beta)
    return true_system


def make_setup(cfg, true_system, obs_idx=None):
    """Model system, gain spec, initial parameters and initial ensemble for ``cfg``."""
    system = model_system(cfg, true_system)
    family = cfg.family
    ensemble = family in ("enkf", "ens3dvar")
    taper = gaspari_cohn(system.dim, cfg.taper_radius) if (ensemble and cfg.taper_radius) else None
    spec = GainSpec(family, cfg.n_members if ensemble else 1, taper, cfg.ens_inflation, system.positive)
    x0 = initial_ensemble(system, spec.n_members, stream(cfg.seed, _KEY_ENS))
    params = init_parameters(system, family, stream(cfg.seed, _KEY_INIT), cfg.sigma0_sq, obs_idx, cfg.lowrank_p)
    return Setup(system, spec, x0, cfg.L, cfg.seed), params


def forward(setup, params, ens0, obs, idx, R, rng, tape=None):
    """Filter one window; returns ``(run, loss, leaves)``."""
    leaves = params.leaves(tape) if tape is not None else None
    theta1, filt = split_params(params.constrained(leaves), params.fixed)
    model = setup.system.build_model(theta1)
    run = run_filter(ens0, obs, idx, R, setup.spec, model, filt, rng)
    return run, window_loss(setup.family, run.stats, obs, idx), leaves


def window_gradient(setup, params, ens0, obs, idx, R, rng):
    """Loss value, gradients by parameter name and the final ensemble of one window."""
    tape = ad.Tape()
    with np.errstate(over="ignore", invalid="ignore"):
        run, loss, leaves = forward(setup, params, ens0, obs, idx, R, rng, tape)
    value = float(loss.value[0, 0])
    if not math.isfinite(value):
        raise GradientBlowUp("non-finite window loss")
    adj = tape.backward(loss)
    grads = {k: adj[leaf.id] for k, leaf in leaves.items()}
    return value, grads, run.final.members.value


def windows(T, L):
    return [(j * L, min((j + 1) * L, T)) for j in range(math.ceil(T / L))]


def tbptt_epoch(setup, params, optimizer, trajectories, epoch=0, record=False):
    """One pass over ``trajectories`` with one update per window of length ``L``.

    The ensemble carried into each window is detached; a diverged window
    skips its update and restarts the next window from ``x0``.
    """
    losses, steps, events, per_window = [], 0, [], []
    for i, traj in enumerate(trajectories):
        carry = setup.x0
        for j, (a, b) in enumerate(windows(traj.T, setup.L)):
            rng = stream(setup.seed, _KEY_WINDOW, epoch, i, j)
            try:
                value, grads, final = window_gradient(setup, params, carry, traj.obs[a:b],
                                                      traj.indices[a:b], traj.R_list[a:b], rng)
                params.set_latents(optimizer.step(params.latents(), grads))
            except DIVERGENCE as err:
                events.append({"epoch": epoch, "trajectory": i, "window": j, "error": type(err).__name__})
                carry = setup.x0
                continue
            carry = final
            losses.append(value)
            steps += b - a
            if record:
                per_window.append(grads)
    if not losses:
        per_step = math.inf
    elif setup.family == "3dvar-k":
        per_step = float(np.mean(losses))  # already a per-step mean
    else:
        per_step = float(np.sum(losses)) / steps
    out = {"train_loss": per_step, "updates": len(losses), "diverged": len(events), "events": events}
    if record:
        out["window_grads"] = per_window
    return out


def validation_loss(setup, params, trajectories):
    """Mean over trajectories of the per-step loss of a full (untaped) filter run."""
    if not trajectories:
        return math.nan
    vals = []
    for i, traj in enumerate(trajectories):
        try:
            with np.errstate(over="ignore", invalid="ignore"):
                _, loss, _ = forward(setup, params, setup.x0, traj.obs, traj.indices, traj.R_list,
                                     stream(setup.seed, _KEY_VAL, i))
            v = float(loss.value[0, 0])
        except DIVERGENCE:
            v = math.inf
        vals.append(v if setup.family == "3dvar-k" else v / traj.T)
    return float(np.mean(vals))


def train(setup, params, train_trajs, val_trajs=(), epochs=40, lr_theta=1e-3, lr_phi=1e-2, patience=5,
          callback=None, lr_q=None):
    """Learn ``params`` in place; returns curves and per-epoch snapshots.

    The forecast-noise latents use ``lr_q`` (``lr_phi`` when unset).

    Raises DivergedRun (carrying the partial result) when an epoch makes no
    finite update at all.
    """
    opt = Adam({THETA: lr_theta, NOISE: lr_phi if lr_q is None else lr_q, PHI: lr_phi}, params.groups())
    sched = PlateauScheduler(opt, patience=patience)
    result = TrainResult(params)
    for epoch in range(epochs):
        lr_now = dict(opt.lrs)
        stats = tbptt_epoch(setup, params, opt, train_trajs, epoch)
        result.events.extend(stats["events"])
        val = validation_loss(setup, params, val_trajs)
        result.curves.append({"epoch": epoch + 1, "train_loss": stats["train_loss"], "val_loss": val,
                              "lr_theta": lr_now[THETA], "lr_phi": lr_now[PHI], "lr_q": lr_now[NOISE], "updates": stats["updates"],
                              "diverged": stats["diverged"]})
        result.snapshots.append(params.copy())
        if callback is not None:
            callback(epoch + 1, result)
        if stats["updates"] == 0:
            raise DivergedRun(f"epoch {epoch + 1}: every window diverged", partial=result)
        if val_trajs:
            sched.step(val)
    return result


def select_learning_rates(make, train_trajs, val_trajs, grid, epochs=40, patience=5):
    """Train once per ``(lr_theta, lr_phi)`` in ``grid`` and keep the best validation loss.

    ``make()`` returns a fresh ``(setup, params)`` pair. Returns
    ``(best_pair, {pair: final validation loss})``.
    """
    scores = {}
    for lr_t, lr_p in grid:
        setup, params = make()
        try:
            res = train(setup, params, train_trajs, val_trajs, epochs, lr_t, lr_p, patience)
            scores[(lr_t, lr_p)] = res.curves[-1]["val_loss"] if res.curves else math.inf
        except DivergedRun:
            scores[(lr_t, lr_p)] = math.inf
    best = min(scores, key=lambda k: (not math.isfinite(scores[k]), scores[k]))
    return best, scores
