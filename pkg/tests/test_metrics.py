import numpy as np
import pytest

from adfilter import autodiff as ad
from adfilter.dynamics.systems import CWSystem, GLVSystem
from adfilter.exceptions import BlowUp, DimError
from adfilter.filters import ForecastStats, GainSpec, kalman_filter, run_filter
from adfilter.learning import nll_loss
from adfilter.metrics import (LOG_2PI, EvalReport, eval_loglik_trace, filter_rmse, forecast_rmse, param_mae,
                              parameter_errors)


def test_forecast_rmse_examples():
    states = np.random.default_rng(0).normal(size=(7, 2))
    f = lambda x: ad.scale(x, 2.0)  # noqa: E731
    assert forecast_rmse(f, f, states) == 0.0
    shifted = lambda x: ad.add(x, ad.constant(np.array([[3.0], [4.0]])))  # noqa: E731
    ident = lambda x: x  # noqa: E731
    assert forecast_rmse(shifted, ident, np.zeros((1, 2))) == pytest.approx(5 / np.sqrt(2))


def test_forecast_rmse_blowup_is_inf():
    def bad(x):
        raise BlowUp("boom")
    assert forecast_rmse(bad, lambda x: x, np.zeros((3, 2))) == float("inf")


def test_filter_rmse_examples():
    truth = np.random.default_rng(1).normal(size=(5, 3))
    assert filter_rmse(truth, truth) == 0.0
    assert filter_rmse([[3.0]], [[1.0]]) == 2.0
    assert filter_rmse(truth + 0.7, truth) == pytest.approx(0.7)
    with pytest.raises(DimError):
        filter_rmse(truth[:2], truth)


def test_param_mae_examples():
    assert param_mae([1.0, 2.0], [1.0, 2.0]) == 0.0
    assert param_mae([0.0021], [0.0013]) == pytest.approx(0.0008)
    assert param_mae([1.0, 0.0, 2.0], [0.0, 0.0, 0.0]) == pytest.approx(1.0)
    with pytest.raises(DimError):
        param_mae([1.0], [1.0, 2.0])


def test_param_mae_ordering_contract():
    a, b = np.array([1.0, 2.0, 3.0]), np.array([1.5, 2.0, 2.0])
    perm = [2, 0, 1]
    assert param_mae(a[perm], b[perm]) == param_mae(a, b)
    assert param_mae(a[perm], b) != param_mae(a, b)


def test_glv_mae_groups():
    sysm = GLVSystem.sample(8, np.random.default_rng(2))
    errs = parameter_errors(sysm, sysm, {"theta1/a": sysm.a_true, "theta1/x_s": sysm.x_s_true})
    assert errs == {"A": 0.0, "r": 0.0}


def test_loglik_trace_scalar_mode():
    st = ForecastStats(ad.constant([[1.0]]), None, ad.constant([[1.0]]))
    ll, ld, rs = eval_loglik_trace([st], [[1.0]], [[0]])
    assert ll[0] == pytest.approx(-0.9189, abs=1e-4)
    assert ld[0] + rs[0] == pytest.approx(ll[0] + 0.5 * LOG_2PI)


def test_loglik_trace_matches_kalman_and_nll():
    sysm = CWSystem()
    m = sysm.transition_matrix()
    rng = np.random.default_rng(3)
    ys = [rng.normal(size=3) for _ in range(30)]
    kf = kalman_filter(sysm.x0, 5 * np.eye(6), m, np.arange(3), 0.1 * np.eye(3), ys)
    stats = [ForecastStats(ad.constant(p.reshape(-1, 1)), None, ad.constant(s))
             for p, s in zip(kf.pred_means, kf.S)]
    idx = [np.arange(3)] * 30
    ll, ld, rs = eval_loglik_trace(stats, ys, idx)
    np.testing.assert_allclose(ll, kf.loglik, atol=1e-10)
    np.testing.assert_allclose(ld, kf.logdet_term, atol=1e-10)
    nll = nll_loss(stats, ys, idx).value[0, 0]
    assert -nll - 30 * 1.5 * LOG_2PI == pytest.approx(kf.total_loglik, abs=1e-10)


def test_kalman_beats_misspecified_filter():
    sysm = CWSystem()
    m = sysm.transition_matrix()
    rng = np.random.default_rng(4)
    x, ys = sysm.x0, []
    for _ in range(800):
        x = m @ x
        ys.append(x[:3] + np.sqrt(0.1) * rng.standard_normal(3))
    kf = kalman_filter(sysm.x0, 5 * np.eye(6), m, np.arange(3), 0.1 * np.eye(3), ys)
    wrong = ad.constant(CWSystem(theta_true=0.0015).transition_matrix())
    idx = [np.arange(3)] * 800
    run = run_filter(sysm.x0[:, None], ys, idx, [0.1 * np.eye(3)] * 800, GainSpec("3dvar-c"),
                     lambda z: ad.matmul(wrong, z), {"B": ad.constant(0.1 * np.eye(6))}, None)
    ll, _, _ = eval_loglik_trace(run.stats, ys, idx)
    assert kf.loglik.mean() - ll.mean() >= -0.05


def test_report_serialization(tmp_path):
    rep = EvalReport(0.1, 0.2, {"theta": 0.3}, [-1.0, -2.0], [0.5, 0.4], [-0.1, -0.2], -1.5, {"system": "cw"})
    rep.write(tmp_path)
    lines = (tmp_path / "trace.csv").read_text().splitlines()
    assert lines[0] == "t,loglik,logdet_term,residual_term" and len(lines) == 3
    assert '"forecast_rmse": 0.1' in (tmp_path / "report.json").read_text()
