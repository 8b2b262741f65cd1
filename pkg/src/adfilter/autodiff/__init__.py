"""Dense-matrix reverse-mode automatic differentiation."""
from .gradcheck import finite_difference, grad_check, tape_gradient
from .tape import (
    Node,
    Tape,
    abs,
    add,
    as_matrix,
    cholesky_solve_psd,
    concat_cols,
    constant,
    detach,
    exp,
    gather_rows,
    gelu,
    hadamard,
    log,
    logdet_psd,
    matmul,
    mean,
    negate,
    reciprocal,
    record,
    reduce_sumsq,
    reshape,
    scale,
    sigmoid,
    softplus,
    sqrt,
    sub,
    sum,
    transpose,
    value_of,
)

__all__ = [
    "Node", "Tape", "abs", "add", "as_matrix", "cholesky_solve_psd", "concat_cols",
    "constant", "detach", "exp", "finite_difference", "gather_rows", "gelu",
    "grad_check", "hadamard", "log", "logdet_psd", "matmul", "mean", "negate",
    "reciprocal", "record", "reduce_sumsq", "reshape", "scale", "sigmoid", "softplus",
    "sqrt", "sub", "sum", "tape_gradient", "transpose", "value_of",
]
