"""Floquet-Bloch bands and Dirac points of honeycomb lattice potentials."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ConfigError,
    DeformationError,
    DiracDetectionError,
    DiscrepancyError,
    DomainError,
    HoneycombError,
    NumericalError,
    RankError,
    SymmetryError,
)
from .lattice import SymmetrySector, build_geometry  # noqa: E402
from .potential import atomic_lattice, from_fourier, optical_lattice  # noqa: E402

__all__ = [
    "__version__",
    "ConfigError",
    "DeformationError",
    "DiracDetectionError",
    "DiscrepancyError",
    "DomainError",
    "HoneycombError",
    "NumericalError",
    "RankError",
    "SymmetryError",
    "SymmetrySector",
    "build_geometry",
    "atomic_lattice",
    "from_fourier",
    "optical_lattice",
]
