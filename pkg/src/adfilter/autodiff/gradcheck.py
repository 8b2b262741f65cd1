"""Central finite-difference check of tape gradients."""
import numpy as np

from ..exceptions import NonFiniteProbe
from .tape import Tape, as_matrix, constant, value_of


def finite_difference(f, x0, eps=1e-5):
    """Central-difference gradient of ``f(*nodes) -> 1x1`` at ``x0`` (list of arrays)."""
    x0 = [as_matrix(x).copy() for x in x0]
    grads = []
    for k, x in enumerate(x0):
        g = np.zeros_like(x)
        for idx in np.ndindex(x.shape):
            probes = []
            for step in (eps, -eps):
                args = [constant(v) for v in x0]
                shifted = x.copy()
                shifted[idx] += step
                args[k] = constant(shifted)
                val = float(value_of(f(*args))[0, 0])
                if not np.isfinite(val):
                    raise NonFiniteProbe(f"f is not finite at probe {k}{idx} {step:+g}")
                probes.append(val)
            g[idx] = (probes[0] - probes[1]) / (2.0 * eps)
        grads.append(g)
    return grads


def tape_gradient(f, x0):
    tape = Tape()
    leaves = [tape.leaf(x) for x in x0]
    root = f(*leaves)
    if not np.isfinite(root.value).all():
        raise NonFiniteProbe("f is not finite at x0")
    if root.tape is not tape:
        # f ignored its arguments entirely
        return [np.zeros_like(leaf.value) for leaf in leaves]
    adj = tape.backward(root)
    return [adj[leaf.id] for leaf in leaves]


def grad_check(f, x0, eps=1e-5):
    """Max over entries of ``|g_ad - g_fd| / max(1, |g_fd|)``.

    ``f`` receives one node per entry of ``x0`` and must return a 1x1 node.
    """
    ad = tape_gradient(f, x0)
    fd = finite_difference(f, x0, eps)
    err = 0.0
    for a, d in zip(ad, fd):
        if a.size:
            err = max(err, float(np.max(np.abs(a - d) / np.maximum(1.0, np.abs(d)))))
    return err
