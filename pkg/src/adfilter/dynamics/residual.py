"""Circular 1-D convolutional correction network for ring-structured states."""
import numpy as np

from .. import autodiff as ad


class CircularConvNet:
    """Stack of periodic 1-D convolutions with GELU between layers.

    The network acts on each ensemble member independently and is exactly
    equivariant to circular shifts of the state. Its parameter count depends
    only on ``channels`` and ``kernel``, not on the state dimension.
    """

    def __init__(self, channels=(1, 32, 32, 1), kernel=5):
        if kernel % 2 != 1:
            raise ValueError("kernel width must be odd")
        self.channels = tuple(int(c) for c in channels)
        self.kernel = int(kernel)
        self.offsets = tuple(range(-(kernel // 2), kernel // 2 + 1))
        self._index_cache = {}

    @property
    def param_names(self):
        names = []
        for layer in range(len(self.channels) - 1):
            names += [f"conv{layer}.weight", f"conv{layer}.bias"]
        return names

    def param_shapes(self):
        shapes = {}
        for layer, (c_in, c_out) in enumerate(zip(self.channels[:-1], self.channels[1:])):
            shapes[f"conv{layer}.weight"] = (self.kernel * c_in, c_out)
            shapes[f"conv{layer}.bias"] = (1, c_out)
        return shapes

    def n_params(self):
        return int(sum(np.prod(s) for s in self.param_shapes().values()))

    def init_params(self, rng, zero_last=True):
        """Uniform fan-in initialization; the last layer starts at zero."""
        params = {}
        n_layers = len(self.channels) - 1
        for layer, (c_in, c_out) in enumerate(zip(self.channels[:-1], self.channels[1:])):
            bound = 1.0 / np.sqrt(self.kernel * c_in)
            if zero_last and layer == n_layers - 1:
                w = np.zeros((self.kernel * c_in, c_out))
                b = np.zeros((1, c_out))
            else:
                w = rng.uniform(-bound, bound, size=(self.kernel * c_in, c_out))
                b = rng.uniform(-bound, bound, size=(1, c_out))
            params[f"conv{layer}.weight"] = w
            params[f"conv{layer}.bias"] = b
        return params

    def _indices(self, dim, n):
        key = (dim, n)
        if key not in self._index_cache:
            base = np.arange(n)[:, None] * dim
            pos = np.arange(dim)[None, :]
            self._index_cache[key] = [
                (base + (pos + k) % dim).ravel() for k in self.offsets
            ]
        return self._index_cache[key]

    def __call__(self, x, params):
        """Apply to a ``(dim, N)`` node; returns a ``(dim, N)`` node."""
        dim, n = x.shape
        rows = dim * n
        # rows ordered (member, position); one column per channel
        z = ad.reshape(ad.transpose(x), (rows, 1))
        idx = self._indices(dim, n)
        ones = ad.constant(np.ones((rows, 1)))
        n_layers = len(self.channels) - 1
        for layer in range(n_layers):
            patches = ad.concat_cols([ad.gather_rows(z, i) for i in idx])
            z = patches @ params[f"conv{layer}.weight"] + ones @ params[f"conv{layer}.bias"]
            if layer < n_layers - 1:
                z = ad.gelu(z)
        return ad.transpose(ad.reshape(z, (n, dim)))


class ResidualForecast:
    """``forecast(x) = base(x) + net(x)`` with a learnable correction network."""

    def __init__(self, base, net):
        self.base = base
        self.net = net

    def __call__(self, x, params):
        return self.base(x) + self.net(x, params)


def residual_forward(rf, x, params):
    return rf(x, params)
