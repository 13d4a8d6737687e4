"""Exception hierarchy shared by the library, the CLI and the flows.

Each class carries the process exit code the CLI maps it to:
- 2: invalid parameters or usage
- 3: numeric convergence / detection failures
- 4: verification mismatch against golden data
"""

from __future__ import annotations


class FloquetError(RuntimeError):
    """Base class for all errors raised by floquet_parity.

    Grid drivers attach the failing point via :meth:`at`; the coordinates
    are appended to the message.
    """

    exit_code: int = 1

    def __init__(self, *args: object) -> None:
        super().__init__(*args)
        self.coordinates: dict[str, float] = {}

    def at(self, **coordinates: float) -> FloquetError:
        """Record grid coordinates of the failing evaluation and return self."""
        self.coordinates.update(coordinates)
        return self

    def __str__(self) -> str:
        message = super().__str__()
        if not self.coordinates:
            return message
        where = ", ".join(f"{key}={value:.17g}" for key, value in self.coordinates.items())
        return f"{message} [at {where}]"


class ParameterError(FloquetError, ValueError):
    """Raised for invalid Hamiltonian parameters, ranges or unsupported orders."""

    exit_code = 2


class ConvergenceError(FloquetError):
    """Raised when a numeric procedure fails to converge.

    Attributes:
        quantity: Name of the quantity that failed (e.g. 'edge_weight').
        value: The offending value (residual, weight, drift).

    """

    exit_code = 3

    def __init__(self, message: str, *, quantity: str = "", value: float | None = None):
        super().__init__(message)
        self.quantity = quantity
        self.value = value


class AmbiguousRepresentativesError(ConvergenceError):
    """Raised when fewer than two usable eigenpairs fall into the first zone."""


class SymmetryNotDetectedError(FloquetError):
    """Raised when no cutoff up to n_max yields a time-nonlocal symmetry."""

    exit_code = 3


class DegenerateSymmetryError(FloquetError):
    """Raised when the parity null space is more than one-dimensional."""

    exit_code = 3


class InternalConsistencyError(FloquetError):
    """Raised when an identity that must hold by construction is violated."""

    exit_code = 3


class VerificationMismatchError(FloquetError):
    """Raised when a recurrence coefficient disagrees with the tabulated closed form."""

    exit_code = 4

    def __init__(self, message: str, *, n: int, k: int, rel_error: float):
        super().__init__(message)
        self.n = n
        self.k = k
        self.rel_error = rel_error
