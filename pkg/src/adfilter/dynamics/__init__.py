"""Benchmark dynamical systems and the integrators that define their flows."""
from .cw import THETA_TRUE as CW_THETA_TRUE, X0_TRUE as CW_X0_TRUE, cw_matrix
from .glv import A_TRUE as GLV_A_TRUE, block_pattern, build_block_A, glv_rate_from_steady_state, glv_rhs
from .integrators import OdeSystem, matrix_exp, rk4_step
from .lorenz96 import BETA_TRUE, l96_poly_rhs, lorenz96_rhs, sample_imperfect_l96
from .residual import CircularConvNet, ResidualForecast, residual_forward
from .systems import DEFAULTS, CWSystem, GLVSystem, L96System, make_system

__all__ = [
    "BETA_TRUE", "CWSystem", "CW_THETA_TRUE", "CW_X0_TRUE", "CircularConvNet", "DEFAULTS",
    "GLVSystem", "GLV_A_TRUE", "L96System", "OdeSystem", "ResidualForecast",
    "block_pattern", "build_block_A", "cw_matrix", "glv_rate_from_steady_state", "glv_rhs",
    "l96_poly_rhs", "lorenz96_rhs", "make_system", "matrix_exp", "residual_forward",
    "rk4_step", "sample_imperfect_l96",
]
