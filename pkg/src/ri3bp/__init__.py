"""Parabolic motions of the restricted isosceles three-body problem.

Numerical companion covering the primaries' Kepler clock, the flow and its
final-motion classifier, parabolic stable/unstable manifolds of infinity,
the renormalized action, homoclinic orbits and multibump orbits.
"""

from ._jit import NUMBA_ENABLED, backend
from .errors import RI3BPError

__version__ = "0.1.0"

__all__ = ["NUMBA_ENABLED", "RI3BPError", "__version__", "backend"]
