"""Numerical laboratory for the relativistic Vlasov-Klein-Gordon system."""

from .kernels import BACKEND

__version__ = "0.1.0"
__all__ = ["BACKEND", "__version__"]
