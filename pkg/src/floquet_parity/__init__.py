"""Floquet spectra and the time-nonlocal parity of the driven two-level system."""

from .errors import (
    AmbiguousRepresentativesError,
    ConvergenceError,
    DegenerateSymmetryError,
    FloquetError,
    InternalConsistencyError,
    ParameterError,
    SymmetryNotDetectedError,
    VerificationMismatchError,
)
from .model import FourierOperatorSeries, HamiltonianParams
from .sambe import (
    FloquetMode,
    build_floquet_matrix,
    monodromy_quasienergies,
    quasienergy_spectrum,
    representatives,
    splitting_map,
)
from .symmetry_analytic import analytic_q, assemble_q, solve_recurrence
from .symmetry_numeric import assign_parities, classify_spectrum, solve_parities

__version__ = "0.1.0"

__all__: list[str] = [
    "AmbiguousRepresentativesError",
    "ConvergenceError",
    "DegenerateSymmetryError",
    "FloquetError",
    "FloquetMode",
    "FourierOperatorSeries",
    "HamiltonianParams",
    "InternalConsistencyError",
    "ParameterError",
    "SymmetryNotDetectedError",
    "VerificationMismatchError",
    "analytic_q",
    "assemble_q",
    "assign_parities",
    "build_floquet_matrix",
    "classify_spectrum",
    "monodromy_quasienergies",
    "quasienergy_spectrum",
    "representatives",
    "solve_parities",
    "solve_recurrence",
    "splitting_map",
]
