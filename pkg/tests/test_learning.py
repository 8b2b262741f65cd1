import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from adfilter import autodiff as ad
from adfilter.config import resolve
from adfilter.datagen import Trajectory, build_dataset, make_plan
from adfilter.dynamics.systems import CWSystem
from adfilter.exceptions import GradientBlowUp, StaticObservationRequired
from adfilter.filters import ForecastStats, GainSpec
from adfilter.learning import (Adam, ParameterSet, PlateauScheduler, Setup, forward, init_parameters,
                               loss_3dvar_k, make_setup, nll_loss, nll_step, tbptt_epoch, train,
                               window_gradient, windows)
from adfilter.learning.params import split_params
from adfilter.learning.transforms import forward as tf_forward, inverse as tf_inverse


# -- transforms / parameter sets ---------------------------------------------------------

@settings(max_examples=50, deadline=None)
@given(st.floats(-30, 30))
def test_latent_roundtrip(x):
    for name in ("identity", "sigmoid", "softplus"):
        y = tf_forward(name, np.array([[x]]))
        assert tf_forward(name, tf_inverse(name, y))[0, 0] == pytest.approx(y[0, 0], abs=1e-12, rel=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.floats(1e-6, 50))
def test_softplus_inverse_roundtrip(y):
    assert tf_forward("softplus", tf_inverse("softplus", np.array([[y]])))[0, 0] == pytest.approx(y, rel=1e-10)


def test_constrained_ranges_after_extreme_latents():
    assert 0 <= tf_forward("sigmoid", np.array([[-800.0]]))[0, 0] <= 1
    assert tf_forward("softplus", np.array([[-30.0]]))[0, 0] > 0


def test_init_parameters_per_family():
    sysm = CWSystem()
    rng = np.random.default_rng(0)
    ps = init_parameters(sysm, "enkf", rng, 0.03)
    vals = ps.values()
    assert vals["phi/inflation"][0, 0] == pytest.approx(0.1)
    np.testing.assert_allclose(vals["theta2/q"], 0.1)
    assert vals["theta1/rate"][0, 0] > 0
    ps = init_parameters(sysm, "ens3dvar", rng, 0.03)
    assert ps.values()["phi/mixing"][0, 0] == pytest.approx(0.5)
    np.testing.assert_allclose(ps.values()["phi/B"], 0.1 * np.eye(6))
    ps = init_parameters(sysm, "3dvar-k", rng, 0.03, obs_idx=[0, 1, 2])
    k = ps.values()["phi/K"]
    np.testing.assert_allclose(k, 0.1 * np.eye(6)[[0, 1, 2]].T)
    assert "theta2/q" not in ps.params
    ps = init_parameters(sysm, "3dvar-c", rng, 0.03, lowrank_p=2)
    assert ps.values()["phi/B"].shape == (6, 2)
    np.testing.assert_array_equal(ps.fixed["C0"], np.eye(6))


def test_checkpoint_roundtrip():
    ps = init_parameters(CWSystem(), "ens3dvar", np.random.default_rng(1), 0.03, lowrank_p=3)
    back = ParameterSet.from_dict(ps.to_dict())
    for k in ps.params:
        np.testing.assert_array_equal(back.params[k].latent, ps.params[k].latent)
        assert back.params[k].transform == ps.params[k].transform
    np.testing.assert_array_equal(back.fixed["C0"], ps.fixed["C0"])


# -- losses ------------------------------------------------------------------------------------

def _stats(mean, s):
    return ForecastStats(ad.constant([[mean]]), None, ad.constant([[s]]))


def test_nll_examples():
    assert nll_step(ad.constant([[1.0]]), ad.constant([[1.0]]), [1.0], [0]).value[0, 0] == 0.0
    assert nll_step(ad.constant([[0.0]]), ad.constant([[math.e]]), [0.0], [0]).value[0, 0] == pytest.approx(0.5)
    val = nll_loss([_stats(0.0, 2.0)], [[2.0]], [[0]]).value[0, 0]
    assert val == pytest.approx(1.34657, abs=1e-5)


def test_nll_sums_over_window():
    stats = [_stats(0.0, 2.0), _stats(1.0, 1.0)]
    total = nll_loss(stats, [[2.0], [1.0]], [[0], [0]]).value[0, 0]
    assert total == pytest.approx(0.5 * math.log(2) + 1.0)


def test_loss_3dvar_k_examples():
    assert loss_3dvar_k([_stats(1.0, 1.0)], [[3.0]], [[0]]).value[0, 0] == 4.0
    with pytest.raises(StaticObservationRequired):
        loss_3dvar_k([_stats(1.0, 1.0)] * 2, [[3.0]] * 2, [[0], [1]])


def _scalar_setup(family, n=1):
    """A scalar linear system x_t = a x_{t-1} with learnable a."""

    class Scalar:
        name, dim, positive = "scalar", 1, False

        def build_model(self, theta):
            a = theta["a"]
            return lambda x: ad.scale(x, a) if isinstance(a, ad.Node) else ad.scale(x, float(a))

    spec = GainSpec(family, n)
    x0 = np.linspace(-1, 1, n).reshape(1, n) + 0.5
    return Setup(Scalar(), spec, x0, L=3, seed=0)


def _scalar_params(family):
    ps = ParameterSet()
    ps.add("theta1/a", 0.8)
    if family in ("enkf", "ens3dvar"):
        ps.add("theta2/q", 0.3, "softplus")
    if family in ("3dvar-c", "ens3dvar"):
        ps.add("phi/B", 0.7, group="phi")
    if family == "3dvar-k":
        ps.add("phi/K", 0.4, group="phi")
    if family == "enkf":
        ps.add("phi/inflation", 0.2, "sigmoid", "phi")
    if family == "ens3dvar":
        ps.add("phi/mixing", 0.6, "sigmoid", "phi")
    return ps


def _fd_gradient(setup, ps, obs, idx, R, seed, eps=1e-6):
    out = {}
    for k, p in ps.params.items():
        g = np.zeros_like(p.latent)
        for i in np.ndindex(p.latent.shape):
            vals = []
            for sgn in (1, -1):
                q = ps.copy()
                q.params[k].latent[i] += sgn * eps
                _, loss, _ = forward(setup, q, setup.x0, obs, idx, R, np.random.default_rng(seed))
                vals.append(loss.value[0, 0])
            g[i] = (vals[0] - vals[1]) / (2 * eps)
        out[k] = g
    return out


@pytest.mark.parametrize("family,n", [("3dvar-c", 1), ("3dvar-k", 1), ("enkf", 4), ("ens3dvar", 4)])
def test_window_gradient_matches_finite_differences(family, n):
    setup = _scalar_setup(family, n)
    ps = _scalar_params(family)
    obs, idx, R = [[1.0], [0.5], [0.8]], [[0]] * 3, [[[0.5]]] * 3
    _, grads, _ = window_gradient(setup, ps, setup.x0, obs, idx, R, np.random.default_rng(3))
    fd = _fd_gradient(setup, ps, obs, idx, R, 3)
    for k in grads:
        rel = np.max(np.abs(grads[k] - fd[k])) / max(1.0, np.max(np.abs(fd[k])))
        assert rel < 1e-4, (k, grads[k], fd[k])


def test_3dvar_k_gain_gradient_nonzero_over_two_steps():
    setup = _scalar_setup("3dvar-k")
    ps = _scalar_params("3dvar-k")
    _, grads, _ = window_gradient(setup, ps, setup.x0, [[1.0], [0.5]], [[0]] * 2, [[[0.5]]] * 2, None)
    assert abs(grads["phi/K"][0, 0]) > 1e-6


# -- optimizer / scheduler ------------------------------------------------------------------

def test_adam_zero_gradient_keeps_params():
    opt = Adam({"theta": 0.1}, {"x": "theta"})
    out = opt.step({"x": np.array([[1.0]])}, {"x": np.zeros((1, 1))})
    assert out["x"][0, 0] == 1.0


def test_adam_first_step_is_signed_lr():
    opt = Adam({"theta": 0.01, "phi": 0.5}, {"a": "theta", "b": "phi"})
    out = opt.step({"a": np.array([[0.0]]), "b": np.array([[0.0]])},
                   {"a": np.array([[3.0]]), "b": np.array([[-0.2]])})
    assert out["a"][0, 0] == pytest.approx(-0.01, rel=1e-6)
    assert out["b"][0, 0] == pytest.approx(0.5, rel=1e-6)


def test_adam_rejects_non_finite():
    opt = Adam({"theta": 0.1}, {"x": "theta"})
    with pytest.raises(GradientBlowUp):
        opt.step({"x": np.zeros((1, 1))}, {"x": np.array([[np.nan]])})
    assert opt.t == 0


def test_plateau_scheduler_traces():
    opt = Adam({"theta": 1.0, "phi": 2.0}, {})
    sched = PlateauScheduler(opt, patience=5)
    for v in [5, 4, 3, 2, 1]:
        sched.step(v)
    assert opt.lrs == {"theta": 1.0, "phi": 2.0}
    opt = Adam({"theta": 1.0, "phi": 2.0}, {})
    sched = PlateauScheduler(opt, patience=5)
    reduced = [sched.step(1.0) for _ in range(6)]
    assert reduced == [False] * 5 + [True]
    assert opt.lrs["theta"] == pytest.approx(0.1) and opt.lrs["phi"] == pytest.approx(0.2)
    opt = Adam({"theta": 1.0}, {})
    sched = PlateauScheduler(opt, patience=5)
    reduced = [sched.step(v) for v in [1.0, 1.0, 1.0, 1.0, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5]]
    assert not any(reduced[:9]) and reduced[9]


# -- TBPTT ---------------------------------------------------------------------------------------

def test_windows_count():
    assert len(windows(100, 20)) == 5
    assert windows(45, 20) == [(0, 20), (20, 40), (40, 45)]
    assert windows(30, 30) == [(0, 30)]


def _cw_case(method, T=30, L=10, **kw):
    cfg = resolve(system="cw", method=method, T=T, L=L, n_train=2, n_val=1, n_test=0, **kw)
    ds = build_dataset(cfg)
    setup, ps = make_setup(cfg, ds.system, ds.train[0].indices[0])
    return cfg, ds, setup, ps


def test_tbptt_update_count():
    cfg, ds, setup, ps = _cw_case("adenkf", T=30, L=10, n_members=5)
    opt = Adam({"theta": 1e-3, "noise": 1e-2, "phi": 1e-2}, ps.groups())
    out = tbptt_epoch(setup, ps, opt, ds.train)
    assert out["updates"] == 2 * 3 and opt.t == 6


def test_tbptt_full_window_equals_full_backprop():
    cfg, ds, setup, ps = _cw_case("adenkf", T=12, L=12, n_members=5)
    setup.L = 12
    ref = ps.copy()
    opt = Adam({"theta": 0.0, "noise": 0.0, "phi": 0.0}, ps.groups())
    out = tbptt_epoch(setup, ps, opt, ds.train[:1], record=True)
    traj = ds.train[0]
    from adfilter.datagen import stream
    _, grads, _ = window_gradient(setup, ref, setup.x0, traj.obs, traj.indices, traj.R_list,
                                  stream(setup.seed, 10, 0, 0, 0))
    assert len(out["window_grads"]) == 1
    for k, g in grads.items():
        np.testing.assert_allclose(out["window_grads"][0][k], g, rtol=0, atol=1e-10)


def test_detachment_confines_gradients_to_window():
    # changing an observation in window 1 leaves window 0's gradient untouched
    cfg, ds, setup, ps = _cw_case("ad3dvar-c", T=20, L=10)
    traj = ds.train[0]
    opt = Adam({"theta": 0.0, "noise": 0.0, "phi": 0.0}, ps.groups())
    base = tbptt_epoch(setup, ps.copy(), opt, [traj], record=True)["window_grads"]
    obs = [o.copy() for o in traj.obs]
    obs[15] = obs[15] + 1.0
    changed = Trajectory(traj.truth, obs, traj.plan, traj.r_scale)
    alt = tbptt_epoch(setup, ps.copy(), opt, [changed], record=True)["window_grads"]
    for k in base[0]:
        np.testing.assert_array_equal(base[0][k], alt[0][k])
    assert any(not np.array_equal(base[1][k], alt[1][k]) for k in base[1])


def test_zero_learning_rates_keep_initialization():
    cfg, ds, setup, ps = _cw_case("adens3dvar", T=20, L=10, n_members=4)
    init = ps.copy()
    train(setup, ps, ds.train, ds.val, epochs=2, lr_theta=0.0, lr_phi=0.0)
    for k in ps.params:
        np.testing.assert_array_equal(ps.params[k].latent, init.params[k].latent)


def test_training_is_reproducible():
    curves = []
    for _ in range(2):
        cfg, ds, setup, ps = _cw_case("adenkf", T=20, L=10, n_members=4)
        curves.append(train(setup, ps, ds.train, ds.val, epochs=2, lr_theta=1e-2, lr_phi=1e-2).curves)
    assert curves[0] == curves[1]


def test_constrained_values_stay_in_range_during_training():
    cfg, ds, setup, ps = _cw_case("adenkf", T=20, L=5, n_members=4)
    res = train(setup, ps, ds.train, ds.val, epochs=3, lr_theta=0.5, lr_phi=0.5)
    for snap in res.snapshots:
        v = snap.values()
        assert 0 <= v["phi/inflation"][0, 0] <= 1
        assert np.all(v["theta2/q"] > 0) and v["theta1/rate"][0, 0] > 0


def test_diverged_window_is_skipped():
    cfg, ds, setup, ps = _cw_case("ad3dvar-c", T=20, L=10)
    ps.params["phi/B"].latent[:] = np.nan
    opt = Adam({"theta": 1e-3, "noise": 1e-3, "phi": 1e-3}, ps.groups())
    out = tbptt_epoch(setup, ps, opt, ds.train[:1])
    assert out["updates"] == 0 and out["diverged"] == 2


def test_split_params_routes_groups():
    theta1, filt = split_params({"theta1/a": 1, "theta2/q": 2, "phi/B": 3}, {"C0": np.eye(2)})
    assert theta1 == {"a": 1} and set(filt) == {"q", "B", "C0"}


def test_time_varying_plan_has_fixed_cardinality():
    plan = make_plan("time-varying", 4, 0.5, 50, np.random.default_rng(0))
    assert all(len(i) == 2 and len(set(i.tolist())) == 2 for i in plan.indices)
