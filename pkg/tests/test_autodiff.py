import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from adfilter import autodiff as ad
from adfilter.exceptions import NonFiniteProbe, NonScalarRoot, NotPositiveDefinite, ShapeError


def _pd(rng, n):
    b = rng.uniform(-2, 2, size=(n, n))
    return b @ b.T + np.eye(n)


def test_matmul_identity():
    m = np.arange(12.0).reshape(3, 4)
    out = ad.matmul(ad.constant(np.eye(3)), ad.constant(m))
    np.testing.assert_array_equal(out.value, m)


def test_logdet_of_scaled_identity():
    out = ad.logdet_psd(ad.constant(2.0 * np.eye(3)))
    assert out.value[0, 0] == pytest.approx(3 * np.log(2.0), abs=1e-12)
    assert out.value[0, 0] == pytest.approx(2.07944, abs=1e-5)


def test_sigmoid_softplus_at_zero():
    assert ad.sigmoid(ad.constant(0.0)).value[0, 0] == 0.5
    assert ad.softplus(ad.constant(0.0)).value[0, 0] == pytest.approx(0.69315, abs=1e-5)


def test_backward_of_sum():
    tape = ad.Tape()
    x = tape.leaf([1.0, -3.0, 2.0])
    grads = tape.backward(ad.sum(x))
    np.testing.assert_array_equal(grads[x.id].ravel(), [1, 1, 1])


def test_backward_half_sumsq():
    tape = ad.Tape()
    x = tape.leaf([1.0, 2.0])
    grads = tape.backward(ad.scale(ad.reduce_sumsq(x), 0.5))
    np.testing.assert_array_equal(grads[x.id].ravel(), [1.0, 2.0])


def test_backward_logdet_is_inverse():
    tape = ad.Tape()
    x = tape.leaf(2.0 * np.eye(2))
    grads = tape.backward(ad.logdet_psd(x))
    np.testing.assert_allclose(grads[x.id], 0.5 * np.eye(2), atol=1e-15)


def test_non_scalar_root():
    tape = ad.Tape()
    x = tape.leaf([1.0, 2.0])
    with pytest.raises(NonScalarRoot):
        tape.backward(x)


def test_shape_errors():
    with pytest.raises(ShapeError):
        ad.matmul(ad.constant(np.ones((2, 3))), ad.constant(np.ones((2, 3))))
    with pytest.raises(ShapeError):
        ad.add(ad.constant(np.ones((2, 3))), ad.constant(np.ones((3, 2))))
    with pytest.raises(ShapeError):
        ad.hadamard(ad.constant(np.ones((2, 1))), ad.constant(np.ones((1, 2))))


def test_not_positive_definite():
    with pytest.raises(NotPositiveDefinite):
        ad.logdet_psd(ad.constant(-np.eye(3)))


def test_jitter_rescues_rank_deficient():
    # rank-1 covariance: plain Cholesky fails, jitter succeeds
    v = np.array([[1.0], [2.0], [3.0]])
    out = ad.logdet_psd(ad.constant(v @ v.T))
    assert np.isfinite(out.value[0, 0])


def test_gather_rows_shape_and_scatter():
    tape = ad.Tape()
    x = tape.leaf(np.arange(10.0).reshape(5, 2))
    g = ad.gather_rows(x, [4, 0, 4])
    assert g.shape == (3, 2)
    w = np.array([[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]])
    grads = tape.backward(ad.sum(ad.hadamard(g, ad.constant(w))))
    expected = np.zeros((5, 2))
    expected[4] = w[0] + w[2]
    expected[0] = w[1]
    np.testing.assert_array_equal(grads[x.id], expected)


def test_matmul_adjoint_rule():
    rng = np.random.default_rng(0)
    a, b, w = rng.normal(size=(3, 4)), rng.normal(size=(4, 2)), rng.normal(size=(3, 2))
    tape = ad.Tape()
    la, lb = tape.leaf(a), tape.leaf(b)
    grads = tape.backward(ad.sum(ad.hadamard(ad.matmul(la, lb), ad.constant(w))))
    np.testing.assert_allclose(grads[la.id], w @ b.T, rtol=1e-14)
    np.testing.assert_allclose(grads[lb.id], a.T @ w, rtol=1e-14)
    err = ad.grad_check(lambda x, y: ad.sum(ad.hadamard(x @ y, ad.constant(w))), [a, b])
    assert err < 1e-8


def test_leaf_not_reaching_root_gets_zero():
    tape = ad.Tape()
    x = tape.leaf([1.0])
    y = tape.leaf([[1.0, 2.0]])
    grads = tape.backward(ad.sum(x))
    np.testing.assert_array_equal(grads[y.id], np.zeros((1, 2)))


def test_untaped_ops_leave_no_graph():
    out = ad.matmul(ad.constant(np.eye(2)), np.ones((2, 1)))
    assert out.tape is None and out.parents == ()


def test_mixing_tapes_is_rejected():
    a, b = ad.Tape().leaf(1.0), ad.Tape().leaf(1.0)
    with pytest.raises(ValueError):
        ad.add(a, b)


def test_operator_overloads_match_functions():
    tape = ad.Tape()
    x = tape.leaf([[1.0, 2.0], [3.0, 4.0]])
    s = tape.leaf(3.0)
    y = (2.0 * x - x @ x.T + x * s) / 2.0
    expected = (2 * x.value - x.value @ x.value.T + 3 * x.value) / 2
    np.testing.assert_allclose(y.value, expected)


def test_grad_check_examples():
    rng = np.random.default_rng(1)
    x0 = rng.normal(size=5)
    assert ad.grad_check(lambda x: ad.reduce_sumsq(x), [x0]) < 1e-7
    b0 = rng.normal(size=(4, 4))
    eye = np.eye(4)
    assert ad.grad_check(lambda b: ad.logdet_psd(b @ b.T + ad.constant(eye)), [b0]) < 1e-5
    assert ad.grad_check(lambda x: ad.constant(3.0), [x0]) == 0.0


def test_grad_check_non_finite_probe():
    with pytest.raises(NonFiniteProbe):
        ad.grad_check(lambda x: ad.sum(ad.log(x)), [np.array([1e-7])], eps=1e-5)


# one scalar functional per primitive, evaluated at random inputs in [-2, 2]
def _unary_cases(rng):
    w = rng.uniform(-2, 2, size=(3, 4))
    c = ad.constant(w)
    pos = lambda x: ad.softplus(x) + 0.5  # noqa: E731
    return {
        "negate": lambda x: ad.sum(ad.negate(x) * c),
        "scale": lambda x: ad.sum(ad.scale(x, -1.7) * c),
        "transpose": lambda x: ad.sum(ad.transpose(x) @ c),
        "gather_rows": lambda x: ad.sum(ad.gather_rows(x, [2, 0, 2, 1]) @ ad.constant(w.T)),
        "concat_cols": lambda x: ad.reduce_sumsq(ad.concat_cols([x, x * c])),
        "reshape": lambda x: ad.sum(ad.reshape(x, (4, 3)) @ c),
        "sum": lambda x: ad.sum(x * c),
        "mean": lambda x: ad.mean(x * x),
        "reduce_sumsq": lambda x: ad.reduce_sumsq(x * c),
        "sigmoid": lambda x: ad.sum(ad.sigmoid(x) * c),
        "softplus": lambda x: ad.sum(ad.softplus(x) * c),
        "abs": lambda x: ad.sum(ad.abs(x + 3.0) * c),
        "exp": lambda x: ad.sum(ad.exp(x) * c),
        "log": lambda x: ad.sum(ad.log(pos(x)) * c),
        "sqrt": lambda x: ad.sum(ad.sqrt(pos(x)) * c),
        "reciprocal": lambda x: ad.sum(ad.reciprocal(pos(x)) * c),
        "gelu": lambda x: ad.sum(ad.gelu(x) * c),
    }


@pytest.mark.parametrize("kind", sorted(_unary_cases(np.random.default_rng(0))))
def test_unary_primitive_gradients(kind):
    rng = np.random.default_rng(7)
    f = _unary_cases(rng)[kind]
    x0 = rng.uniform(-2, 2, size=(3, 4))
    assert ad.grad_check(f, [x0]) < 1e-5


def test_binary_primitive_gradients():
    rng = np.random.default_rng(3)
    a, b = rng.uniform(-2, 2, size=(2, 3, 3))
    w = ad.constant(rng.uniform(-2, 2, size=(3, 3)))
    cases = [
        lambda x, y: ad.sum(ad.add(x, y) * w),
        lambda x, y: ad.sum(ad.sub(x, y) * w),
        lambda x, y: ad.sum(ad.hadamard(x, y) * w),
        lambda x, y: ad.sum(ad.matmul(x, y) * w),
        lambda x, y: ad.sum(ad.scale(x, ad.sum(y)) * w),
        lambda x, y: ad.sum(ad.add(x, ad.mean(y)) * w),
    ]
    for f in cases:
        assert ad.grad_check(f, [a, b]) < 1e-5


def test_psd_primitive_gradients():
    rng = np.random.default_rng(4)
    b0 = rng.uniform(-2, 2, size=(4, 4))
    y0 = rng.uniform(-2, 2, size=(4, 2))
    eye = ad.constant(np.eye(4))
    w = ad.constant(rng.uniform(-2, 2, size=(4, 2)))

    def solve(b, y):
        return ad.sum(ad.cholesky_solve_psd(b @ b.T + eye, y) * w)

    def logdet(b):
        return ad.logdet_psd(b @ b.T + eye)

    assert ad.grad_check(solve, [b0, y0]) < 1e-5
    assert ad.grad_check(logdet, [b0]) < 1e-5


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=1, max_value=8), st.integers(min_value=0, max_value=2**31 - 1))
def test_cholesky_solve_residual(n, seed):
    rng = np.random.default_rng(seed)
    s = _pd(rng, n)
    if np.linalg.cond(s) >= 1e6:
        return
    y = rng.uniform(-2, 2, size=(n, 3))
    x = ad.cholesky_solve_psd(ad.constant(s), ad.constant(y)).value
    assert np.max(np.abs(s @ x - y)) < 1e-8 * np.max(np.abs(y))


def test_replay_is_bit_identical():
    rng = np.random.default_rng(5)
    tape = ad.Tape()
    b = tape.leaf(rng.normal(size=(3, 3)))
    x = tape.leaf(rng.normal(size=(3, 1)))
    s = b @ b.T + np.eye(3)
    loss = ad.logdet_psd(s) + ad.sum(ad.gelu(ad.cholesky_solve_psd(s, x)))
    loss = loss + ad.mean(ad.softplus(ad.gather_rows(x, [0, 0, 2])))
    tape.backward(loss)
    assert tape.replay_matches()


def test_backward_is_repeatable_on_same_tape():
    tape = ad.Tape()
    x = tape.leaf([1.0, 2.0])
    first = tape.backward(ad.reduce_sumsq(x))[x.id].copy()
    second = tape.backward(ad.reduce_sumsq(x))[x.id]
    np.testing.assert_array_equal(first, second)
