"""Simulation lab for erasure-channel reductions from DP inner-product channels."""

from .kernels import BACKEND

__all__ = ["BACKEND"]
__version__ = "0.1.0"
