"""Conditioning laboratory: linear-algebra probes, small neural nets trained
by hand-rolled backprop, orthogonality regularization, and gradient-based
input attacks, all on top of numpy with an optional compiled kernel core.
"""

from .kernels import BACKEND

__version__ = "0.1.0"

__all__ = ["BACKEND", "__version__"]
