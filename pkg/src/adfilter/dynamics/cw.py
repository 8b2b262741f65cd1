"""Clohessy-Wiltshire relative orbital motion in first-order form."""
import numpy as np

from .. import autodiff as ad

THETA_TRUE = 0.0013
X0_TRUE = np.array([1.0, 0.5, 1.0, -0.001375, -0.000275, -0.001375])
DT = 10.0

_DRIFT = np.zeros((6, 6))
_DRIFT[0:3, 3:6] = np.eye(3)
_QUAD = np.zeros((6, 6))  # coefficient pattern of theta^2
_QUAD[3, 0] = 3.0
_QUAD[5, 2] = -1.0
_LIN = np.zeros((6, 6))  # coefficient pattern of theta
_LIN[3, 4] = 2.0
_LIN[4, 3] = -2.0


def cw_matrix(theta):
    """System matrix of ``x' = F x`` for state ``[x1, x2, x3, v1, v2, v3]``.

    ``theta`` is a float or a 1x1 node (the orbital rate).
    """
    if isinstance(theta, ad.Node):
        return ad.constant(_DRIFT) + ad.scale(ad.constant(_QUAD), theta * theta) + ad.scale(
            ad.constant(_LIN), theta
        )
    theta = float(theta)
    return _DRIFT + theta * theta * _QUAD + theta * _LIN
