"""Adam with per-group learning rates and a reduce-on-plateau scheduler."""
import numpy as np

from ..exceptions import GradientBlowUp


class Adam:
    def __init__(self, lrs, groups, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lrs = dict(lrs)        # group -> rate
        self.groups = dict(groups)  # parameter name -> group
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.m, self.v = {}, {}
        self.t = 0

    def step(self, latents, grads):
        """Return updated latents.

        Raises GradientBlowUp, leaving the optimizer state untouched, when a
        gradient or the resulting update is not finite.
        """
        for k, g in grads.items():
            if not np.all(np.isfinite(g)):
                raise GradientBlowUp(f"non-finite gradient for {k}")
        t = self.t + 1
        b1, b2 = self.beta1, self.beta2
        c1, c2 = 1.0 - b1**t, 1.0 - b2**t
        out, m_new, v_new = {}, {}, {}
        with np.errstate(over="ignore", invalid="ignore"):
            for k, x in latents.items():
                g = grads.get(k)
                if g is None:
                    out[k] = x
                    continue
                m = b1 * self.m.get(k, 0.0) + (1.0 - b1) * g
                v = b2 * self.v.get(k, 0.0) + (1.0 - b2) * g * g
                lr = self.lrs[self.groups[k]]
                out[k] = x - lr * (m / c1) / (np.sqrt(v / c2) + self.eps)
                if not (np.all(np.isfinite(v)) and np.all(np.isfinite(out[k]))):
                    raise GradientBlowUp(f"gradient for {k} overflows the moment estimates")
                m_new[k], v_new[k] = m, v
        self.t = t
        self.m.update(m_new)
        self.v.update(v_new)
        return out

    def state_dict(self):
        return {"t": self.t, "lrs": dict(self.lrs)}


class PlateauScheduler:
    """Multiply every rate by ``factor`` after ``patience`` epochs without improvement."""

    def __init__(self, optimizer, patience=5, factor=0.1):
        self.opt = optimizer
        self.patience = patience
        self.factor = factor
        self.best = np.inf
        self.bad = 0
        self.reductions = 0

    def step(self, val_loss):
        if val_loss < self.best:
            self.best = val_loss
            self.bad = 0
            return False
        self.bad += 1
        if self.bad >= self.patience:
            for g in self.opt.lrs:
                self.opt.lrs[g] *= self.factor
            self.bad = 0
            self.reductions += 1
            return True
        return False
