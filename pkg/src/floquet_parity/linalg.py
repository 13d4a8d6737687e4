"""Dense complex linear algebra: Hermitian eigendecomposition and null spaces.

Thin wrappers around LAPACK (via scipy.linalg) that add the conventions the
rest of the package relies on:
- eigenvectors carry a fixed global phase (largest-magnitude entry real, > 0)
- eigenvectors inside a degenerate cluster are re-orthonormalized
- non-convergence surfaces as ConvergenceError with the residual attached
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from numpy.typing import NDArray

from .config import DEGENERACY_REL_TOL, HERMITIAN_TOL
from .errors import ConvergenceError, ParameterError

logger = logging.getLogger(__name__)

# Post-check on ||A v - lambda v||, relative to ||A||
_EIGEN_RESIDUAL_TOL = 1e-10


@dataclass(frozen=True)
class HermitianMatrix:
    """A d x d complex matrix validated to be Hermitian at construction."""

    data: NDArray[np.complex128]

    def __post_init__(self) -> None:
        data = np.array(self.data, dtype=np.complex128)
        if data.ndim != 2 or data.shape[0] != data.shape[1]:
            raise ParameterError(f"HermitianMatrix must be square, got shape {data.shape}")
        scale = float(np.abs(data).max()) if data.size else 0.0
        deviation = float(np.abs(data - data.conj().T).max()) if data.size else 0.0
        if deviation > HERMITIAN_TOL * max(scale, np.finfo(float).tiny):
            raise ParameterError(
                f"Matrix is not Hermitian: max|A - A^dagger| = {deviation:.3e} "
                f"(max|A| = {scale:.3e})"
            )
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @property
    def dim(self) -> int:
        """Dimension d."""
        return int(self.data.shape[0])


@dataclass(frozen=True)
class Eigendecomposition:
    """Ascending eigenvalues with orthonormal eigenvectors as columns."""

    eigenvalues: NDArray[np.float64]
    eigenvectors: NDArray[np.complex128]


def fix_phase(vector: NDArray[np.complex128]) -> NDArray[np.complex128]:
    """Rotate a vector so its largest-magnitude entry is real and positive."""
    idx = int(np.argmax(np.abs(vector)))
    pivot = vector[idx]
    if pivot == 0:
        return vector
    return vector * (np.conj(pivot) / abs(pivot))


def _clusters(eigenvalues: NDArray[np.float64], tol: float) -> list[slice]:
    """Return index ranges of eigenvalues closer than tol to their neighbor."""
    clusters: list[slice] = []
    start = 0
    for i in range(1, len(eigenvalues) + 1):
        if i == len(eigenvalues) or eigenvalues[i] - eigenvalues[i - 1] >= tol:
            if i - start > 1:
                clusters.append(slice(start, i))
            start = i
    return clusters


def eigh(matrix: HermitianMatrix) -> Eigendecomposition:
    """Full Hermitian eigendecomposition with reproducible phases.

    Args:
        matrix: Hermitian input

    Returns:
        Eigendecomposition with ascending eigenvalues

    Raises:
        ConvergenceError: If LAPACK does not converge or the residual check fails

    """
    data = matrix.data
    try:
        eigenvalues, eigenvectors = scipy.linalg.eigh(data)
    except (np.linalg.LinAlgError, ValueError) as e:
        raise ConvergenceError(
            f"Hermitian eigensolver failed for dimension {matrix.dim}: {e}",
            quantity="eigh",
        ) from e

    norm = max(float(np.abs(eigenvalues).max()) if eigenvalues.size else 0.0, 1e-300)
    for cluster in _clusters(eigenvalues, DEGENERACY_REL_TOL * norm):
        q, _ = np.linalg.qr(eigenvectors[:, cluster])
        eigenvectors[:, cluster] = q
        logger.debug(
            "Re-orthonormalized degenerate cluster of size %d at %.6g",
            cluster.stop - cluster.start,
            eigenvalues[cluster.start],
        )

    for col in range(eigenvectors.shape[1]):
        eigenvectors[:, col] = fix_phase(eigenvectors[:, col])

    residual = float(
        np.linalg.norm(data @ eigenvectors - eigenvectors * eigenvalues[None, :], axis=0).max()
    ) if eigenvalues.size else 0.0
    if residual > _EIGEN_RESIDUAL_TOL * norm:
        raise ConvergenceError(
            f"Eigen residual {residual:.3e} exceeds {_EIGEN_RESIDUAL_TOL:g} * ||A|| ({norm:.3e})",
            quantity="eigen_residual",
            value=residual,
        )
    return Eigendecomposition(eigenvalues=eigenvalues, eigenvectors=eigenvectors)


def svd_spectrum(
    matrix: NDArray[np.complex128],
) -> tuple[NDArray[np.float64], NDArray[np.complex128]]:
    """Singular values (descending, zero-padded to the column count) and right vectors.

    Returns:
        (sigma, V) where column i of V is the right singular vector for sigma[i]

    Raises:
        ConvergenceError: If the SVD does not converge

    """
    matrix = np.asarray(matrix, dtype=np.complex128)
    n_cols = matrix.shape[1]
    try:
        _, sigma, vh = scipy.linalg.svd(matrix, full_matrices=True)
    except (np.linalg.LinAlgError, ValueError) as e:
        raise ConvergenceError(
            f"SVD failed for shape {matrix.shape}: {e}", quantity="svd"
        ) from e
    padded = np.zeros(n_cols)
    padded[: sigma.size] = sigma
    return padded, vh.conj().T


def nullspace(matrix: NDArray[np.complex128], rel_tol: float) -> list[NDArray[np.complex128]]:
    """Orthonormal basis of the right near-null space.

    Args:
        matrix: Rectangular complex matrix
        rel_tol: Keep singular vectors with sigma <= rel_tol * sigma_max; in (0, 1)

    Returns:
        List of phase-fixed null vectors (empty when none qualify)

    """
    if not 0.0 < rel_tol < 1.0:
        raise ParameterError(f"rel_tol must lie in (0, 1), got {rel_tol}")
    sigma, right = svd_spectrum(matrix)
    sigma_max = float(sigma[0]) if sigma.size else 0.0
    return [
        fix_phase(right[:, i]) for i in range(sigma.size) if sigma[i] <= rel_tol * sigma_max
    ]
