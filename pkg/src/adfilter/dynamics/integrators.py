"""Fixed-step integrators that build their result from tape primitives."""
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .. import autodiff as ad
from ..exceptions import BlowUp


@dataclass(frozen=True)
class OdeSystem:
    """An autonomous ODE ``dx/dt = rhs(x, params)`` sampled every ``dt``.

    ``rhs`` maps a ``(dim, N)`` node (one column per ensemble member) to a node
    of the same shape.
    """

    dim: int
    rhs: Callable
    dt: float


def _check_finite(node, where):
    if not np.all(np.isfinite(node.value)):
        raise BlowUp(f"non-finite values in {where}")
    return node


def rk4_step(system, x, params=None):
    """One classical fourth-order Runge-Kutta step of size ``system.dt``."""
    dt = system.dt
    f = system.rhs
    k1 = _check_finite(f(x, params), "RK4 stage 1")
    k2 = _check_finite(f(x + k1 * (0.5 * dt), params), "RK4 stage 2")
    k3 = _check_finite(f(x + k2 * (0.5 * dt), params), "RK4 stage 3")
    k4 = _check_finite(f(x + k3 * dt, params), "RK4 stage 4")
    incr = (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0)
    return _check_finite(x + incr, "RK4 update")


def matrix_exp(f, dt=1.0, tol=1e-15):
    """``exp(f * dt)`` by scaling and squaring with a truncated Taylor series.

    Every operation is a tape primitive, so the result is differentiable with
    respect to the entries of ``f``.
    """
    a = ad.scale(f, float(dt)) if not isinstance(f, np.ndarray) else ad.constant(f * dt)
    n = a.shape[0]
    norm = float(np.max(np.sum(np.abs(a.value), axis=1))) if n else 0.0
    squarings = max(0, int(math.ceil(math.log2(norm / 0.5)))) if norm > 0.5 else 0
    if squarings:
        a = a * (0.5 ** squarings)
    eye = ad.constant(np.eye(n))
    result = eye + a
    term = a
    for k in range(2, 40):
        term = (term @ a) * (1.0 / k)
        result = result + term
        if np.max(np.abs(term.value), initial=0.0) < tol:
            break
    for _ in range(squarings):
        result = result @ result
    return result
