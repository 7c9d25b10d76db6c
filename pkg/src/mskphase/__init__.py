"""Phase-diagram numerics for the multi-species SK model with Gaussian field.

Subpackages by concern:

- model: species systems, spectral radius, bilinear form, bounding-box ratio
- gauss: Gauss-Hermite / Monte Carlo Gaussian expectations
- fixedpoint: the overlap map, its maximal fixed point, sign regions
- rs_at: replica-symmetric functional, AT criterion, interpolation path
- parisi: discrete ordered measures, functional, exact gradients, optimizer
- gtbound: two-replica 1-RSB upper bound and free-energy cost curves
- finite_n: exact-enumeration simulator (compiled core with pure fallback)
- sweep / cli: phase-diagram sweeps, AT-surface tracing, CSV emission
"""

from .gauss import QuadratureSpec
from .model import SpeciesSystem, bilinear_B, bounding_box_ratio, spectral_radius, validate_system

__all__ = [
    "QuadratureSpec",
    "SpeciesSystem",
    "bilinear_B",
    "bounding_box_ratio",
    "spectral_radius",
    "validate_system",
]

__version__ = "0.1.0"
