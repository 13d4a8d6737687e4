"""Floquet spectra in Sambe space.

The truncated Floquet Hamiltonian couples sidebands k = -K..K of the
two-level system; each eigenvector carries the Fourier components
|phi_k> of a Floquet mode |phi(t)> = sum_k exp(-i k omega t) |phi_k>.

Also provides an independent one-period propagator (monodromy) used to
cross-check the quasienergies, and the minimal-splitting map over
(epsilon, alpha).
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Any

import numpy as np
import polars as pl
import scipy.linalg
from numpy.typing import NDArray

from .config import MONODROMY, SAMBE, SCHEMA_VERSION, default_truncation, resolve_thread_count
from .errors import AmbiguousRepresentativesError, ConvergenceError, FloquetError, ParameterError
from .linalg import HermitianMatrix, eigh
from .model import (
    IDENTITY,
    SIGMA_Y,
    SIGMA_Z,
    HamiltonianParams,
    hamiltonian_at,
    split_static_driving,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FloquetMode:
    """One Floquet mode in sideband representation.

    ``sidebands[i]`` is |phi_k> for k = i - K. ``edge_weight`` is the weight
    at |k| = K and ``spread`` the mean squared sideband index; both are
    truncation diagnostics.
    """

    quasienergy: float
    sidebands: NDArray[np.complex128]
    omega: float
    parity: float | None = None
    brillouin_index: int = 0
    edge_weight: float = 0.0
    spread: float = 0.0

    @property
    def K(self) -> int:
        """Sideband cutoff."""
        return (self.sidebands.shape[0] - 1) // 2

    @property
    def dim(self) -> int:
        """Hilbert-space dimension d."""
        return int(self.sidebands.shape[1])

    @property
    def ks(self) -> NDArray[np.int64]:
        """Sideband indices -K..K."""
        return np.arange(-self.K, self.K + 1)

    def sideband(self, k: int) -> NDArray[np.complex128]:
        """Return |phi_k> (zero outside the stored range)."""
        if abs(k) <= self.K:
            return self.sidebands[k + self.K]
        return np.zeros(self.dim, dtype=np.complex128)

    def sambe_norm(self) -> float:
        """Return sum_k <phi_k|phi_k>."""
        return float(np.sum(np.abs(self.sidebands) ** 2))

    def with_parity(self, parity: float | None) -> FloquetMode:
        """Return a copy carrying a parity label."""
        return replace(self, parity=parity)


def _sideband_diagnostics(sidebands: NDArray[np.complex128]) -> tuple[float, float]:
    weights = np.sum(np.abs(sidebands) ** 2, axis=1)
    K = (len(weights) - 1) // 2
    ks = np.arange(-K, K + 1)
    edge = float(weights[0] + weights[-1]) if K > 0 else float(weights[0])
    spread = float(np.sum(ks**2 * weights) / max(float(weights.sum()), 1e-300))
    return edge, spread


def fold_quasienergy(q: float, omega: float) -> float:
    """Map q into the first Brillouin zone [-omega/2, omega/2)."""
    folded = q - omega * math.floor((q + 0.5 * omega) / omega)
    # floor can land exactly on +omega/2 after rounding
    if folded >= 0.5 * omega:
        folded -= omega
    return folded


def minimal_splitting(q1: float, q2: float, omega: float) -> float:
    """Circle distance between two quasienergies, in [0, omega/2]."""
    remainder = abs(q1 - q2) % omega
    return min(remainder, omega - remainder)


def build_floquet_matrix(params: HamiltonianParams, K: int) -> HermitianMatrix:
    """Assemble the truncated Floquet Hamiltonian.

    Args:
        params: Hamiltonian parameters
        K: Sideband cutoff; sidebands -K..K are kept

    Returns:
        Hermitian matrix of dimension 2(2K+1), block k = H_+ - k omega I,
        blocks k, k+-1 coupled by (alpha/2) sigma_z

    Raises:
        ParameterError: If K < 1

    """
    if K < 1:
        raise ParameterError(f"Sideband cutoff K must be >= 1, got {K}")
    ks = np.arange(-K, K + 1)
    n_blocks = ks.size
    static, _ = split_static_driving(params)
    ladder = np.diag(-params.omega * ks.astype(float))
    hopping = np.eye(n_blocks, k=1) + np.eye(n_blocks, k=-1)
    matrix = (
        np.kron(np.eye(n_blocks), static)
        + np.kron(ladder, IDENTITY)
        + np.kron(hopping, 0.5 * params.alpha * SIGMA_Z)
    )
    return HermitianMatrix(matrix)


def _zone_offset(q: float, omega: float) -> int:
    """Zone index m with q - m omega in [-omega/2, omega/2) up to the edge tolerance.

    Quasienergies within ``zone_edge_tol * omega`` below +omega/2 count as
    -omega/2, so both members of a crossing at the zone edge land on the
    same side.
    """
    tol = SAMBE["zone_edge_tol"] * omega
    return math.floor((q + 0.5 * omega + tol) / omega)


def _sambe_overlap(a: FloquetMode, b: FloquetMode) -> float:
    norm = math.sqrt(a.sambe_norm() * b.sambe_norm())
    return float(abs(np.vdot(a.sidebands, b.sidebands))) / max(norm, 1e-300)


def _central_pair(modes: Sequence[FloquetMode]) -> list[tuple[FloquetMode, FloquetMode]]:
    """Most concentrated mode of each equivalence class, up to two classes.

    Returns (mode, aligned) pairs where ``aligned`` is the mode shifted into
    the first zone. A candidate whose aligned copy overlaps the first one by
    1/2 or more belongs to the same class and is skipped.
    """
    pair: list[tuple[FloquetMode, FloquetMode]] = []
    for mode in sorted(modes, key=lambda m: (m.spread, m.quasienergy)):
        offset = _zone_offset(mode.quasienergy, mode.omega)
        aligned = shift_zone(mode, -offset) if offset else mode
        if pair and _sambe_overlap(pair[0][1], aligned) >= 0.5:
            continue
        pair.append((mode, aligned))
        if len(pair) == 2:
            break
    return pair


def quasienergy_spectrum(
    params: HamiltonianParams,
    K: int | None = None,
    *,
    check_truncation: bool = True,
) -> list[FloquetMode]:
    """Diagonalize the Floquet matrix and return all eigenpairs as modes.

    Args:
        params: Hamiltonian parameters
        K: Sideband cutoff (default from :func:`default_truncation`)
        check_truncation: Reject the result when the central modes still
            carry more than ``trunc_tol`` weight at |k| = K

    Returns:
        All 2(2K+1) modes sorted by quasienergy

    Raises:
        ConvergenceError: If the central modes are not converged in K

    """
    if K is None:
        K = default_truncation(params.epsilon, params.beta, params.alpha, params.omega)
    decomposition = eigh(build_floquet_matrix(params, K))

    modes: list[FloquetMode] = []
    for col, q in enumerate(decomposition.eigenvalues):
        sidebands = decomposition.eigenvectors[:, col].reshape(2 * K + 1, 2).copy()
        sidebands.setflags(write=False)
        edge, spread = _sideband_diagnostics(sidebands)
        modes.append(
            FloquetMode(
                quasienergy=float(q),
                sidebands=sidebands,
                omega=params.omega,
                edge_weight=edge,
                spread=spread,
            )
        )

    if check_truncation:
        central = [mode for mode, _ in _central_pair(modes)]
        worst = max((m.edge_weight for m in central), default=math.inf)
        if worst > SAMBE["trunc_tol"]:
            raise ConvergenceError(
                f"Central Floquet modes carry edge weight {worst:.3e} > "
                f"trunc_tol={SAMBE['trunc_tol']:g} at K={K}; increase K",
                quantity="edge_weight",
                value=worst,
            )
    logger.debug("Diagonalized Floquet matrix K=%d for %s", K, params)
    return modes


def select_representatives(
    spectrum: Sequence[FloquetMode], params: HamiltonianParams
) -> tuple[FloquetMode, FloquetMode]:
    """Pick one mode per equivalence class from the first Brillouin zone.

    Among eigenpairs with acceptable edge weight, the copy of each class
    whose sideband weight is most concentrated around k = 0 is kept and
    shifted into the first zone. A quasienergy within ``zone_edge_tol``
    of +omega/2 is mapped to -omega/2. When both copies come from one
    degenerate eigenspace the second is orthogonalized against the first.

    Returns:
        The two representatives, ordered by quasienergy, brillouin_index 0

    Raises:
        AmbiguousRepresentativesError: If fewer than two classes are converged

    """
    acceptable = [m for m in spectrum if m.edge_weight <= SAMBE["trunc_tol"]]
    pair = [aligned for _, aligned in _central_pair(acceptable)]
    if len(pair) < 2:
        raise AmbiguousRepresentativesError(
            f"Only {len(pair)} converged equivalence class(es) in [-omega/2, omega/2) "
            f"for {params}; increase K",
            quantity="representatives",
            value=float(len(pair)),
        )
    head, other = pair
    projection = np.vdot(head.sidebands, other.sidebands) / head.sambe_norm()
    residual = other.sidebands - projection * head.sidebands
    residual = residual * math.sqrt(other.sambe_norm() / float(np.sum(np.abs(residual) ** 2)))
    residual.setflags(write=False)
    edge, spread = _sideband_diagnostics(residual)
    other = replace(other, sidebands=residual, edge_weight=edge, spread=spread)

    first, second = sorted((head, other), key=lambda m: m.quasienergy)
    return replace(first, brillouin_index=0), replace(second, brillouin_index=0)


def representatives(
    params: HamiltonianParams, K: int | None = None
) -> tuple[FloquetMode, FloquetMode]:
    """Shortcut for select_representatives(quasienergy_spectrum(params, K), params)."""
    return select_representatives(quasienergy_spectrum(params, K), params)


def mode_at_time(mode: FloquetMode, t: float) -> NDArray[np.complex128]:
    """Evaluate |phi(t)> = sum_k exp(-i k omega t) |phi_k>."""
    phases = np.exp(-1j * mode.ks * mode.omega * t)
    return phases @ mode.sidebands


def shift_zone(mode: FloquetMode, m: int) -> FloquetMode:
    """Return the equivalent mode exp(i m omega t)|phi(t)> with quasienergy q + m omega.

    Sidebands move by m slots (|phi'_k> = |phi_{k+m}>); slots shifted in
    from outside the cutoff are zero. A parity label flips sign for odd m.
    """
    K = mode.K
    shifted = np.zeros_like(mode.sidebands)
    for k in range(-K, K + 1):
        if abs(k + m) <= K:
            shifted[k + K] = mode.sidebands[k + m + K]
    shifted.setflags(write=False)
    parity = None if mode.parity is None else mode.parity * (-1) ** (m % 2)
    edge, spread = _sideband_diagnostics(shifted)
    return replace(
        mode,
        quasienergy=mode.quasienergy + m * mode.omega,
        sidebands=shifted,
        parity=parity,
        brillouin_index=mode.brillouin_index + m,
        edge_weight=edge,
        spread=spread,
    )


def particle_hole_partner(mode: FloquetMode) -> FloquetMode:
    """Apply C = sigma_y K to a mode.

    sigma_y conj(|phi(t)>) has sidebands sigma_y conj(|phi_{-k}>) and
    quasienergy -q.
    """
    partner = (SIGMA_Y @ mode.sidebands[::-1].conj().T).T.copy()
    partner.setflags(write=False)
    return replace(
        mode,
        quasienergy=-mode.quasienergy,
        sidebands=partner,
        parity=None,
        brillouin_index=-mode.brillouin_index,
    )


def monodromy_quasienergies(
    params: HamiltonianParams, steps: int | None = None
) -> tuple[float, float, NDArray[np.complex128]]:
    """Integrate i dU/dt = H(t) U over one period and read off quasienergies.

    Uses the fourth-order Magnus integrator with two Gauss points per step.

    Args:
        params: Hamiltonian parameters
        steps: Number of time steps (default MONODROMY['steps'])

    Returns:
        (q1, q2, U(T)) with q1 <= q2 folded into [-omega/2, omega/2)

    Raises:
        ConvergenceError: If U(T) drifts from unitarity beyond the tolerance

    """
    steps = MONODROMY["steps"] if steps is None else steps
    if steps < 1:
        raise ParameterError(f"steps must be >= 1, got {steps}")
    period = params.period
    h = period / steps
    offset = math.sqrt(3.0) / 6.0
    starts = np.arange(steps) * h
    h1 = np.stack([hamiltonian_at(params, t + (0.5 - offset) * h) for t in starts])
    h2 = np.stack([hamiltonian_at(params, t + (0.5 + offset) * h) for t in starts])
    commutator = h1 @ h2 - h2 @ h1
    generators = -0.5j * h * (h1 + h2) + (math.sqrt(3.0) * h * h / 12.0) * commutator
    step_propagators = scipy.linalg.expm(generators)

    propagator = np.eye(2, dtype=np.complex128)
    for step in step_propagators:
        propagator = step @ propagator

    drift = float(np.abs(propagator.conj().T @ propagator - np.eye(2)).max())
    if drift > MONODROMY["unitarity_tol"]:
        raise ConvergenceError(
            f"Monodromy unitarity drift {drift:.3e} exceeds "
            f"{MONODROMY['unitarity_tol']:g} with {steps} steps; increase steps",
            quantity="unitarity_drift",
            value=drift,
        )
    eigenvalues = np.linalg.eigvals(propagator)
    q1, q2 = sorted(fold_quasienergy(-np.angle(u) / period, params.omega) for u in eigenvalues)
    return q1, q2, propagator


@dataclass(frozen=True)
class SplittingGrid:
    """Minimal quasienergy splitting over an (epsilon, alpha) grid.

    ``splittings[i, j]`` belongs to (epsilon_values[i], alpha_values[j]).
    """

    epsilon_values: NDArray[np.float64]
    alpha_values: NDArray[np.float64]
    splittings: NDArray[np.float64]
    params_base: HamiltonianParams

    def to_frame(self) -> pl.DataFrame:
        """Long table in omega units, row-major in epsilon then alpha."""
        omega = self.params_base.omega
        eps, alpha = np.meshgrid(self.epsilon_values, self.alpha_values, indexing="ij")
        return pl.DataFrame(
            {
                "epsilon/omega": (eps / omega).ravel(),
                "alpha/omega": (alpha / omega).ravel(),
                "splitting/omega": (self.splittings / omega).ravel(),
            }
        )

    def to_payload(self) -> dict[str, Any]:
        """JSON-ready dict with the axes as arrays and the matrix nested."""
        omega = self.params_base.omega
        return {
            "schema_version": SCHEMA_VERSION,
            "beta/omega": self.params_base.beta / omega,
            "omega": omega,
            "epsilon/omega": (self.epsilon_values / omega).tolist(),
            "alpha/omega": (self.alpha_values / omega).tolist(),
            "splitting/omega": (self.splittings / omega).tolist(),
        }


def splitting_at(params: HamiltonianParams, K: int | None = None) -> float:
    """Minimal splitting of the two representatives at one parameter point."""
    first, second = representatives(params, K)
    return minimal_splitting(first.quasienergy, second.quasienergy, params.omega)


def splitting_map(
    base: HamiltonianParams,
    epsilon_values: Sequence[float] | NDArray[np.float64],
    alpha_values: Sequence[float] | NDArray[np.float64],
    K: int | None = None,
    *,
    threads: int | None = None,
) -> SplittingGrid:
    """Evaluate the minimal splitting on every (epsilon, alpha) node.

    Args:
        base: Supplies beta and omega
        epsilon_values: Detunings (sorted ascending on output)
        alpha_values: Driving amplitudes (sorted ascending on output)
        K: Sideband cutoff; default is valid for the largest epsilon and alpha
        threads: Worker count (default from FLOQUET_THREADS)

    Returns:
        SplittingGrid

    Raises:
        ParameterError: If a range is empty
        FloquetError: From any grid point, with its coordinates attached

    """
    eps_axis = np.sort(np.asarray(epsilon_values, dtype=float))
    alpha_axis = np.sort(np.asarray(alpha_values, dtype=float))
    if eps_axis.size == 0 or alpha_axis.size == 0:
        raise ParameterError("splitting_map needs nonempty epsilon and alpha ranges")
    if K is None:
        K = default_truncation(
            float(eps_axis.max()), base.beta, float(alpha_axis.max()), base.omega
        )

    splittings = np.empty((eps_axis.size, alpha_axis.size))

    def evaluate(index: tuple[int, int]) -> None:
        i, j = index
        eps, alpha = float(eps_axis[i]), float(alpha_axis[j])
        try:
            point = HamiltonianParams(
                eps, base.beta, alpha, base.omega, base.integer_detuning_tol
            )
            splittings[i, j] = splitting_at(point, K)
        except FloquetError as e:
            raise e.at(epsilon=eps, alpha=alpha) from None

    nodes = [(i, j) for i in range(eps_axis.size) for j in range(alpha_axis.size)]
    workers = resolve_thread_count(threads)
    logger.info(
        "Splitting map: %d x %d nodes, K=%d, %d worker(s)",
        eps_axis.size,
        alpha_axis.size,
        K,
        workers,
    )
    with ThreadPoolExecutor(max_workers=workers) as pool:
        # list() re-raises the first failure in node order
        list(pool.map(evaluate, nodes))

    return SplittingGrid(
        epsilon_values=eps_axis,
        alpha_values=alpha_axis,
        splittings=splittings,
        params_base=base,
    )
