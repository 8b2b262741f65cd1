"""Auto-differentiable filtering for data assimilation."""
from .estimator import ADFilter

__all__ = ["ADFilter"]
__version__ = "0.1.0"
