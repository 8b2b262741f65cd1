"""The three benchmark systems packaged as forecast-model factories.

Each system exposes

* ``true_model()``: the exact Δt-flow as a callable on ``(dim, N)`` nodes,
* ``init_theta(rng, sigma0_sq)``: an imperfect initial dynamics parameter set
  as ``{name: (constrained value, transform)}``,
* ``build_model(theta)``: a forecast map built from constrained parameter
  nodes (recorded once per filtering window),
* ``param_vector(theta_values)``: the canonical vectorization used for MAE.
"""
import numpy as np

from .. import autodiff as ad
from . import cw, glv, lorenz96
from .integrators import OdeSystem, matrix_exp, rk4_step
from .residual import CircularConvNet, ResidualForecast

# Per-system defaults used by initialization: initial-ensemble variance,
# initial forecast-noise variance, 3DVar background factor scale, 3DVar-K gain scale.
DEFAULTS = {
    "cw": {"ens_var": 5.0, "q0": 0.1, "b0": 0.1, "k0": 0.1, "ens_mean": None},
    "l96": {"ens_var": 25.0, "q0": 2.0, "b0": 1.0, "k0": 1.0, "ens_mean": 0.0},
    "glv": {"ens_var": 1.0, "q0": 0.1, "b0": 0.1, "k0": 0.1, "ens_mean": 1.0},
}


class CWSystem:
    name = "cw"
    linear = True
    positive = False

    def __init__(self, theta_true=cw.THETA_TRUE, dt=cw.DT):
        self.dim = 6
        self.dt = float(dt)
        self.theta_true = float(theta_true)
        self.x0 = cw.X0_TRUE.copy()

    def transition_matrix(self, theta=None):
        theta = self.theta_true if theta is None else theta
        return matrix_exp(cw.cw_matrix(float(theta)), self.dt).value

    def true_model(self):
        m = ad.constant(self.transition_matrix())
        return lambda x: ad.matmul(m, x)

    def init_theta(self, rng, sigma0_sq):
        # draws can land at or below zero; reflect so the softplus latent exists
        draw = abs(self.theta_true + np.sqrt(sigma0_sq) * rng.standard_normal())
        return {"rate": (np.array([[max(draw, 1e-8)]]), "softplus")}

    def true_theta(self):
        return {"rate": np.array([[self.theta_true]])}

    def build_model(self, theta):
        m = matrix_exp(cw.cw_matrix(theta["rate"]), self.dt)
        return lambda x: ad.matmul(m, x)

    def param_vector(self, values):
        return np.asarray(values["rate"], dtype=float).ravel()


class L96System:
    name = "l96"
    linear = False
    positive = False

    def __init__(self, dim=40, dt=0.05, forcing=lorenz96.FORCING, beta=None,
                 channels=(1, 32, 32, 1), kernel=5):
        self.dim = int(dim)
        self.dt = float(dt)
        self.forcing = float(forcing)
        self.beta = lorenz96.BETA_TRUE.copy() if beta is None else np.asarray(beta, float)
        self.net = CircularConvNet(channels, kernel)
        self.truth_ode = OdeSystem(self.dim, lambda x, p: lorenz96.lorenz96_rhs(x, self.forcing), self.dt)

    def with_beta(self, beta):
        out = L96System(self.dim, self.dt, self.forcing, beta, self.net.channels, self.net.kernel)
        return out

    def base_model(self):
        ode = OdeSystem(self.dim, lambda x, p: lorenz96.l96_poly_rhs(x, self.beta), self.dt)
        return lambda x: rk4_step(ode, x)

    def true_model(self):
        return lambda x: rk4_step(self.truth_ode, x)

    def init_theta(self, rng, sigma0_sq=None):
        return {k: (v, "identity") for k, v in self.net.init_params(rng).items()}

    def build_model(self, theta):
        rf = ResidualForecast(self.base_model(), self.net)
        return lambda x: rf(x, theta)

    def param_vector(self, values):
        return np.concatenate([np.asarray(values[k]).ravel() for k in self.net.param_names])


class GLVSystem:
    name = "glv"
    linear = False
    positive = True

    def __init__(self, dim=16, dt=0.05, a_true=glv.A_TRUE, x_s_true=None):
        self.dim = int(dim)
        self.dt = float(dt)
        self.pattern = glv.block_pattern(self.dim)
        self.a_true = np.asarray(a_true, dtype=float).reshape(-1, 1)
        if x_s_true is None:
            x_s_true = np.ones((self.dim, 1))
        self.x_s_true = np.asarray(x_s_true, dtype=float).reshape(-1, 1)

    @classmethod
    def sample(cls, dim, rng, dt=0.05):
        """True steady state drawn as softplus of standard normals."""
        return cls(dim, dt, x_s_true=np.logaddexp(0.0, rng.standard_normal(dim)))

    def _model(self, a, x_s):
        A = glv.build_block_A(a, self.dim, self.pattern)
        r = glv.glv_rate_from_steady_state(A, x_s)
        if not isinstance(A, ad.Node):
            A, r = ad.constant(A), ad.constant(r)
        ode = OdeSystem(self.dim, lambda x, p: glv.glv_rhs(x, A, r), self.dt)
        return lambda x: rk4_step(ode, x)

    def true_model(self):
        return self._model(self.a_true, self.x_s_true)

    def init_theta(self, rng, sigma0_sq):
        sd = np.sqrt(sigma0_sq)
        a = self.a_true + sd * rng.standard_normal(self.a_true.shape)
        x_s = self.x_s_true + sd * rng.standard_normal(self.x_s_true.shape)
        return {"a": (a, "identity"), "x_s": (x_s, "identity")}

    def true_theta(self):
        return {"a": self.a_true.copy(), "x_s": self.x_s_true.copy()}

    def build_model(self, theta):
        return self._model(theta["a"], theta["x_s"])

    def param_vector(self, values):
        a = np.asarray(values["a"], dtype=float).reshape(-1, 1)
        A = glv.build_block_A(a, self.dim, self.pattern)
        r = -(A @ np.asarray(values["x_s"], dtype=float).reshape(-1, 1))
        return np.concatenate([a.ravel(), r.ravel()])

    def param_groups(self, values):
        vec = self.param_vector(values)
        return {"A": vec[: glv.N_BLOCK_PARAMS], "r": vec[glv.N_BLOCK_PARAMS:]}


def make_system(name, dim=None, rng=None, **kwargs):
    if name == "cw":
        return CWSystem(**kwargs)
    if name == "l96":
        return L96System(dim=dim or 40, **kwargs)
    if name == "glv":
        rng = rng if rng is not None else np.random.default_rng(0)
        return GLVSystem.sample(dim or 16, rng, **kwargs)
    raise ValueError(f"unknown system {name!r}")
