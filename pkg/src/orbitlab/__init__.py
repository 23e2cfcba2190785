"""orbitlab: a desk-scale laboratory for orbit counting, net random walks,
drift functions and complexity-weighted counting on hyperbolic model spaces."""

from ._kernels import BACKEND as kernel_backend

__version__ = "0.1.0"
__all__ = ["kernel_backend", "__version__"]
