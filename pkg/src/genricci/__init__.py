"""Numerical laboratory for generalized Ricci flow, its solitons and their stability.

Submodules: ``lie`` and ``lattice`` (backends), ``geometry`` (connections and
curvature), ``functional`` (lambda), ``variation`` (second variation and
spectra), ``flow`` (integrators), ``pluriclosed`` (Hermitian layer),
``presets``, ``config`` and ``cli``.
"""

from .geometry import GeometryState, curvature, homogeneous_state, lattice_state, soliton_residual
from .functional import lambda_min, with_minimizer
from .lattice import LatticeGrid
from .lie import LieAlgebraPreset

__version__ = "0.1.0"

__all__ = [
    "GeometryState", "LatticeGrid", "LieAlgebraPreset", "curvature", "homogeneous_state",
    "lambda_min", "lattice_state", "soliton_residual", "with_minimizer",
]
