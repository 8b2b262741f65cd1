"""Forward rules and vector-Jacobian products for every tape primitive.

Each primitive is a pair ``(forward, vjp)``:

* ``forward(values, attrs) -> (value, cache)``
* ``vjp(g, values, value, attrs, cache) -> tuple of parent adjoints``

All values are 2-D float64 arrays. A parent adjoint of ``None`` means
"no contribution" (e.g. integer index arguments never get one).
"""
import numpy as np
from scipy import linalg, special

from ..exceptions import NotPositiveDefinite, ShapeError

_SQRT_2 = np.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)

# Relative jitter levels tried in turn by the PSD primitives.
JITTER_LEVELS = (0.0, 1e-9, 1e-6)


def _same_or_scalar(a, b, kind):
    if a.shape == b.shape or a.shape == (1, 1) or b.shape == (1, 1):
        return
    raise ShapeError(f"{kind}: incompatible shapes {a.shape} and {b.shape}")


def _unbroadcast(g, shape):
    if g.shape == shape:
        return g
    # only scalar broadcasting is supported
    return np.array([[g.sum()]])


# -- elementwise arithmetic -------------------------------------------------

def _add_fwd(v, attrs):
    a, b = v
    _same_or_scalar(a, b, "add")
    return a + b, None


def _add_vjp(g, v, out, attrs, cache):
    return _unbroadcast(g, v[0].shape), _unbroadcast(g, v[1].shape)


def _sub_fwd(v, attrs):
    a, b = v
    _same_or_scalar(a, b, "sub")
    return a - b, None


def _sub_vjp(g, v, out, attrs, cache):
    return _unbroadcast(g, v[0].shape), -_unbroadcast(g, v[1].shape)


def _negate_fwd(v, attrs):
    return -v[0], None


def _negate_vjp(g, v, out, attrs, cache):
    return (-g,)


def _scale_fwd(v, attrs):
    if len(v) == 1:
        return attrs["c"] * v[0], None
    a, s = v
    if s.shape != (1, 1):
        raise ShapeError(f"scale: factor must be 1x1, got {s.shape}")
    return s[0, 0] * a, None


def _scale_vjp(g, v, out, attrs, cache):
    if len(v) == 1:
        return (attrs["c"] * g,)
    a, s = v
    return s[0, 0] * g, np.array([[np.sum(g * a)]])


def _hadamard_fwd(v, attrs):
    a, b = v
    if a.shape != b.shape:
        raise ShapeError(f"hadamard: shapes {a.shape} and {b.shape} differ")
    return a * b, None


def _hadamard_vjp(g, v, out, attrs, cache):
    return g * v[1], g * v[0]


# -- linear algebra -------------------------------------------------------------

def _matmul_fwd(v, attrs):
    a, b = v
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul: {a.shape} @ {b.shape}")
    return a @ b, None


def _matmul_vjp(g, v, out, attrs, cache):
    a, b = v
    return g @ b.T, a.T @ g


def _transpose_fwd(v, attrs):
    return np.ascontiguousarray(v[0].T), None


def _transpose_vjp(g, v, out, attrs, cache):
    return (g.T,)


def _gather_rows_fwd(v, attrs):
    a = v[0]
    idx = attrs["idx"]
    if idx.size and (idx.min() < -a.shape[0] or idx.max() >= a.shape[0]):
        raise ShapeError(f"gather_rows: index out of range for {a.shape[0]} rows")
    return a[idx], None


def _gather_rows_vjp(g, v, out, attrs, cache):
    idx = attrs["idx"]
    ga = np.zeros_like(v[0])
    if attrs.get("unique", False):
        ga[idx] = g
    else:
        np.add.at(ga, idx, g)
    return (ga,)


def _concat_cols_fwd(v, attrs):
    rows = {x.shape[0] for x in v}
    if len(rows) != 1:
        raise ShapeError(f"concat_cols: row counts differ {sorted(rows)}")
    return np.concatenate(v, axis=1), None


def _concat_cols_vjp(g, v, out, attrs, cache):
    splits = np.cumsum([x.shape[1] for x in v])[:-1]
    return tuple(np.split(g, splits, axis=1))


def _reshape_fwd(v, attrs):
    a = v[0]
    shape = attrs["shape"]
    if shape[0] * shape[1] != a.size:
        raise ShapeError(f"reshape: cannot view {a.shape} as {shape}")
    return a.reshape(shape), None


def _reshape_vjp(g, v, out, attrs, cache):
    return (g.reshape(v[0].shape),)


# -- reductions -------------------------------------------------------------------

def _sum_fwd(v, attrs):
    return np.array([[v[0].sum()]]), None


def _sum_vjp(g, v, out, attrs, cache):
    return (np.full(v[0].shape, g[0, 0]),)


def _mean_fwd(v, attrs):
    return np.array([[v[0].mean()]]), None


def _mean_vjp(g, v, out, attrs, cache):
    return (np.full(v[0].shape, g[0, 0] / v[0].size),)


def _sumsq_fwd(v, attrs):
    a = v[0]
    return np.array([[np.sum(a * a)]]), None


def _sumsq_vjp(g, v, out, attrs, cache):
    return (2.0 * g[0, 0] * v[0],)


# -- positive-definite primitives ------------------------------------------------

def psd_factor(s):
    """Cholesky factor of the symmetric part of ``s`` with jitter fallback.

    Tries the matrix as given, then with ``1e-9`` and ``1e-6`` times the mean
    diagonal added to the diagonal.
    """
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise ShapeError(f"expected a square matrix, got {s.shape}")
    if not np.all(np.isfinite(s)):
        raise NotPositiveDefinite("matrix has non-finite entries")
    sym = 0.5 * (s + s.T)
    n = sym.shape[0]
    scale = abs(np.trace(sym)) / n
    for level in JITTER_LEVELS:
        m = sym if level == 0.0 else sym + (level * scale) * np.eye(n)
        try:
            return linalg.cho_factor(m, lower=True, check_finite=False)
        except linalg.LinAlgError:
            continue
    raise NotPositiveDefinite(f"{n}x{n} matrix is not positive definite after jitter")


def _cho_solve_fwd(v, attrs):
    s, y = v
    if y.shape[0] != s.shape[0]:
        raise ShapeError(f"cholesky_solve_psd: {s.shape} vs rhs {y.shape}")
    fac = psd_factor(s)
    return linalg.cho_solve(fac, y, check_finite=False), fac


def _cho_solve_vjp(g, v, out, attrs, fac):
    gy = linalg.cho_solve(fac, g, check_finite=False)
    gs = -gy @ out.T
    return 0.5 * (gs + gs.T), gy


def _logdet_fwd(v, attrs):
    fac = psd_factor(v[0])
    return np.array([[2.0 * np.sum(np.log(np.diag(fac[0])))]]), fac


def _logdet_vjp(g, v, out, attrs, fac):
    inv = linalg.cho_solve(fac, np.eye(v[0].shape[0]), check_finite=False)
    return (g[0, 0] * 0.5 * (inv + inv.T),)


# -- elementwise nonlinearities ------------------------------------------------------

def _sigmoid_fwd(v, attrs):
    return special.expit(v[0]), None


def _sigmoid_vjp(g, v, out, attrs, cache):
    return (g * out * (1.0 - out),)


def _softplus_fwd(v, attrs):
    return np.logaddexp(0.0, v[0]), None


def _softplus_vjp(g, v, out, attrs, cache):
    return (g * special.expit(v[0]),)


def _abs_fwd(v, attrs):
    return np.abs(v[0]), None


def _abs_vjp(g, v, out, attrs, cache):
    return (g * np.sign(v[0]),)


def _exp_fwd(v, attrs):
    return np.exp(v[0]), None


def _exp_vjp(g, v, out, attrs, cache):
    return (g * out,)


def _log_fwd(v, attrs):
    return np.log(v[0]), None


def _log_vjp(g, v, out, attrs, cache):
    return (g / v[0],)


def _sqrt_fwd(v, attrs):
    return np.sqrt(v[0]), None


def _sqrt_vjp(g, v, out, attrs, cache):
    return (0.5 * g / out,)


def _reciprocal_fwd(v, attrs):
    return 1.0 / v[0], None


def _reciprocal_vjp(g, v, out, attrs, cache):
    return (-g * out * out,)


def _gelu_fwd(v, attrs):
    x = v[0]
    cdf = 0.5 * (1.0 + special.erf(x / _SQRT_2))
    return x * cdf, cdf


def _gelu_vjp(g, v, out, attrs, cdf):
    x = v[0]
    pdf = _INV_SQRT_2PI * np.exp(-0.5 * x * x)
    return (g * (cdf + x * pdf),)


PRIMITIVES = {
    "add": (_add_fwd, _add_vjp),
    "sub": (_sub_fwd, _sub_vjp),
    "negate": (_negate_fwd, _negate_vjp),
    "scale": (_scale_fwd, _scale_vjp),
    "hadamard": (_hadamard_fwd, _hadamard_vjp),
    "matmul": (_matmul_fwd, _matmul_vjp),
    "transpose": (_transpose_fwd, _transpose_vjp),
    "gather_rows": (_gather_rows_fwd, _gather_rows_vjp),
    "concat_cols": (_concat_cols_fwd, _concat_cols_vjp),
    "reshape": (_reshape_fwd, _reshape_vjp),
    "sum": (_sum_fwd, _sum_vjp),
    "mean": (_mean_fwd, _mean_vjp),
    "reduce_sumsq": (_sumsq_fwd, _sumsq_vjp),
    "cholesky_solve_psd": (_cho_solve_fwd, _cho_solve_vjp),
    "logdet_psd": (_logdet_fwd, _logdet_vjp),
    "sigmoid": (_sigmoid_fwd, _sigmoid_vjp),
    "softplus": (_softplus_fwd, _softplus_vjp),
    "abs": (_abs_fwd, _abs_vjp),
    "exp": (_exp_fwd, _exp_vjp),
    "log": (_log_fwd, _log_vjp),
    "sqrt": (_sqrt_fwd, _sqrt_vjp),
    "reciprocal": (_reciprocal_fwd, _reciprocal_vjp),
    "gelu": (_gelu_fwd, _gelu_vjp),
}
