"""Numerical thermodynamic formalism on countable shifts and towers, with the
slowed toral automorphism as the worked end-to-end example."""

from .kernels import BACKEND as kernel_backend

__version__ = "0.1.0"
__all__ = ["kernel_backend", "__version__"]
