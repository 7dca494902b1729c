"""Stein factors for discrete targets via birth-death hitting times."""
from .kernels import BACKEND

__version__ = "0.1.0"
__all__ = ["BACKEND", "__version__"]
