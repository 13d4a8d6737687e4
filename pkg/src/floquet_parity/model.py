"""Driven two-level Hamiltonian and the Fourier-series operator representation.

H(t) = (eps/2) sigma_z + beta sigma_x + alpha sigma_z cos(Omega t)

All time-periodic operators are stored as finite Fourier series
O(t) = sum_k exp(-i k Omega t) O_k. The same convention is used for Floquet
mode sidebands so that the projector identities hold term by term.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numpy.typing import NDArray

from .config import INTEGER_DETUNING_TOL, read_params_mapping
from .errors import ParameterError

logger = logging.getLogger(__name__)

ComplexMatrix2 = NDArray[np.complex128]


def _frozen(matrix: NDArray[np.complex128]) -> NDArray[np.complex128]:
    matrix.setflags(write=False)
    return matrix


IDENTITY = _frozen(np.eye(2, dtype=np.complex128))
SIGMA_X = _frozen(np.array([[0, 1], [1, 0]], dtype=np.complex128))
SIGMA_Y = _frozen(np.array([[0, -1j], [1j, 0]], dtype=np.complex128))
SIGMA_Z = _frozen(np.array([[1, 0], [0, -1]], dtype=np.complex128))


@dataclass(frozen=True)
class HamiltonianParams:
    """Parameters of the driven two-level Hamiltonian.

    The detuning is snapped to n*omega when it lies within
    ``integer_detuning_tol * omega`` of an integer multiple; ``n`` records
    the multiple (None otherwise).
    """

    epsilon: float
    beta: float
    alpha: float
    omega: float
    integer_detuning_tol: float = INTEGER_DETUNING_TOL
    n: int | None = field(init=False, default=None)

    def __post_init__(self) -> None:
        for name in ("epsilon", "beta", "alpha", "omega"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ParameterError(f"{name} must be finite, got {value}")
        if self.epsilon < 0 or self.beta < 0 or self.alpha < 0:
            raise ParameterError(
                f"epsilon, beta, alpha must be >= 0 "
                f"(got {self.epsilon}, {self.beta}, {self.alpha})"
            )
        if self.omega <= 0:
            raise ParameterError(f"omega must be > 0, got {self.omega}")

        multiple = round(self.epsilon / self.omega)
        if abs(self.epsilon - multiple * self.omega) <= self.integer_detuning_tol * self.omega:
            object.__setattr__(self, "epsilon", float(multiple * self.omega))
            object.__setattr__(self, "n", int(multiple))

    @property
    def period(self) -> float:
        """Driving period T = 2 pi / omega."""
        return 2.0 * math.pi / self.omega

    def with_alpha(self, alpha: float) -> HamiltonianParams:
        """Return a copy with a different driving amplitude."""
        return HamiltonianParams(
            self.epsilon, self.beta, alpha, self.omega, self.integer_detuning_tol
        )

    def with_epsilon(self, epsilon: float) -> HamiltonianParams:
        """Return a copy with a different detuning."""
        return HamiltonianParams(
            epsilon, self.beta, self.alpha, self.omega, self.integer_detuning_tol
        )

    def in_omega_units(self) -> dict[str, float]:
        """Return epsilon, beta, alpha divided by omega (for payloads)."""
        return {
            "epsilon": self.epsilon / self.omega,
            "beta": self.beta / self.omega,
            "alpha": self.alpha / self.omega,
            "omega": self.omega,
        }

    @classmethod
    def from_config(cls, path: str | Path) -> HamiltonianParams:
        """Build parameters from a flat YAML / key=value config file."""
        mapping = read_params_mapping(path)
        params = cls(mapping["epsilon"], mapping["beta"], mapping["alpha"], mapping["omega"])
        logger.debug("Loaded parameters from %s: %s", path, params)
        return params


@dataclass(frozen=True)
class FourierOperatorSeries:
    """Finite Fourier series O(t) = sum_k exp(-i k omega t) O_k.

    ``coefficients[i]`` holds O_k for k = k_min + i. Coefficients are d x d
    (d = 2 for everything built by this package).
    """

    k_min: int
    k_max: int
    coefficients: NDArray[np.complex128]
    omega: float

    def __post_init__(self) -> None:
        coeffs = np.asarray(self.coefficients, dtype=np.complex128)
        if coeffs.ndim != 3 or coeffs.shape[1] != coeffs.shape[2]:
            raise ParameterError(f"coefficients must have shape (m, d, d), got {coeffs.shape}")
        if coeffs.shape[0] != self.k_max - self.k_min + 1:
            raise ParameterError(
                f"expected {self.k_max - self.k_min + 1} coefficients for "
                f"k in [{self.k_min}, {self.k_max}], got {coeffs.shape[0]}"
            )
        if self.omega <= 0:
            raise ParameterError(f"omega must be > 0, got {self.omega}")
        coeffs = coeffs.copy()
        coeffs.setflags(write=False)
        object.__setattr__(self, "coefficients", coeffs)

    @property
    def dim(self) -> int:
        """Hilbert-space dimension d."""
        return int(self.coefficients.shape[1])

    @property
    def ks(self) -> NDArray[np.int64]:
        """Fourier indices k_min..k_max."""
        return np.arange(self.k_min, self.k_max + 1)

    def coefficient(self, k: int) -> NDArray[np.complex128]:
        """Return O_k (zero outside the stored range)."""
        if self.k_min <= k <= self.k_max:
            return self.coefficients[k - self.k_min]
        return np.zeros((self.dim, self.dim), dtype=np.complex128)

    def scaled(self, factor: complex) -> FourierOperatorSeries:
        """Return the series multiplied by a constant."""
        return FourierOperatorSeries(self.k_min, self.k_max, self.coefficients * factor, self.omega)

    def shifted_half_period(self) -> FourierOperatorSeries:
        """Return the series of O(t + T/2), i.e. O_k -> (-1)^k O_k."""
        signs = np.where(self.ks % 2 == 0, 1.0, -1.0)
        return FourierOperatorSeries(
            self.k_min, self.k_max, self.coefficients * signs[:, None, None], self.omega
        )

    def adjoint(self) -> FourierOperatorSeries:
        """Return the series of O(t)^dagger, i.e. (O^dagger)_k = (O_{-k})^dagger."""
        flipped = self.coefficients[::-1].conj().transpose(0, 2, 1)
        return FourierOperatorSeries(-self.k_max, -self.k_min, flipped, self.omega)

    def trimmed(self, tol: float = 0.0) -> FourierOperatorSeries:
        """Drop outer coefficients whose entries are all <= tol in magnitude."""
        norms = np.abs(self.coefficients).max(axis=(1, 2))
        kept = np.nonzero(norms > tol)[0]
        if kept.size == 0:
            zero = np.zeros((1, self.dim, self.dim), dtype=np.complex128)
            return FourierOperatorSeries(0, 0, zero, self.omega)
        lo, hi = int(kept[0]), int(kept[-1])
        return FourierOperatorSeries(
            self.k_min + lo, self.k_min + hi, self.coefficients[lo : hi + 1], self.omega
        )

    def phase_fixed(self, k: int) -> FourierOperatorSeries:
        """Rotate the series so the largest-magnitude entry of O_k is real and positive."""
        top = self.coefficient(k)
        a, b = np.unravel_index(int(np.argmax(np.abs(top))), top.shape)
        pivot = complex(top[a, b])
        if pivot == 0:
            raise ParameterError(f"coefficient at k={k} vanishes; cannot fix the phase")
        return self.scaled(np.conj(pivot) / abs(pivot))

    def max_abs_difference(self, other: FourierOperatorSeries) -> float:
        """Largest entrywise deviation between two series, over the union of k."""
        lo = min(self.k_min, other.k_min)
        hi = max(self.k_max, other.k_max)
        return max(
            float(np.abs(self.coefficient(k) - other.coefficient(k)).max())
            for k in range(lo, hi + 1)
        )


def hamiltonian_at(params: HamiltonianParams, t: float) -> ComplexMatrix2:
    """Evaluate H(t) = (eps/2) sigma_z + beta sigma_x + alpha sigma_z cos(omega t)."""
    return (
        0.5 * params.epsilon * SIGMA_Z
        + params.beta * SIGMA_X
        + params.alpha * math.cos(params.omega * t) * SIGMA_Z
    )


def split_static_driving(
    params: HamiltonianParams,
) -> tuple[ComplexMatrix2, FourierOperatorSeries]:
    """Split H(t) into H_+ (static) and H_-(t) (driving).

    Returns:
        (H_+, H_- series) with H_+ = (eps/2) sigma_z + beta sigma_x and
        H_-(t) = alpha sigma_z cos(omega t) stored as (alpha/2) sigma_z at k = +-1

    """
    static = 0.5 * params.epsilon * SIGMA_Z + params.beta * SIGMA_X
    half_drive = 0.5 * params.alpha * SIGMA_Z
    coefficients = np.stack([half_drive, np.zeros((2, 2), dtype=np.complex128), half_drive])
    return static, FourierOperatorSeries(-1, 1, coefficients, params.omega)


def series_eval(series: FourierOperatorSeries, t: float) -> NDArray[np.complex128]:
    """Return sum_k exp(-i k omega t) O_k."""
    phases = np.exp(-1j * series.ks * series.omega * t)
    return np.tensordot(phases, series.coefficients, axes=1)


def series_from_samples(
    samples: NDArray[np.complex128], omega: float, k_max: int
) -> FourierOperatorSeries:
    """Fourier-analyse an operator sampled at t_j = j T / N, j = 0..N-1.

    Args:
        samples: Array of shape (N, d, d)
        omega: Driving frequency
        k_max: Largest |k| kept; requires N > 2 k_max

    Returns:
        Series with coefficients for -k_max <= k <= k_max

    Raises:
        ParameterError: If the sampling is too coarse for k_max

    """
    samples = np.asarray(samples, dtype=np.complex128)
    n_samples = samples.shape[0]
    if n_samples <= 2 * k_max:
        raise ParameterError(f"{n_samples} samples cannot resolve |k| <= {k_max}")
    # ifft carries exp(+2 pi i k j / N) = exp(+i k omega t_j), matching the exp(-i k omega t) series
    spectrum = np.fft.ifft(samples, axis=0)
    ks = np.arange(-k_max, k_max + 1)
    return FourierOperatorSeries(-k_max, k_max, spectrum[ks % n_samples], omega)
