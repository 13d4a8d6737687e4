"""Parities and Q(t) recovered directly from Floquet-mode sidebands.

A time-nonlocal parity J = Q(t) P (P: t -> t + T/2) with eigenvalues j_nu
implies Q(t) = sum_nu j_nu |phi_nu(t)><phi_nu(t + T/2)|. Demanding that
Q has no Fourier components beyond some cutoff n gives an overdetermined
homogeneous system for the j_nu, solved here through its SVD null space.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Any

import numpy as np
import polars as pl
from numpy.typing import NDArray

from .config import PARITY, SCHEMA_VERSION, default_truncation, resolve_thread_count
from .errors import (
    DegenerateSymmetryError,
    FloquetError,
    InternalConsistencyError,
    ParameterError,
    SymmetryNotDetectedError,
)
from .linalg import HermitianMatrix, eigh, svd_spectrum
from .model import FourierOperatorSeries, HamiltonianParams, series_eval
from .sambe import (
    FloquetMode,
    minimal_splitting,
    mode_at_time,
    representatives,
    shift_zone,
)
from .symmetry_analytic import analytic_q

logger = logging.getLogger(__name__)

# fix_sign refuses top coefficients below this magnitude
_TOP_COEFFICIENT_FLOOR = 1e-12


@dataclass(frozen=True)
class ParitySolution:
    """Detected symmetry: cutoff, parities per representative and Q_k.

    ``singular_gap`` is the ratio of the smallest kept to the null singular
    value; ``residual`` is the largest |(Q_k)_ab| left for
    n_detected < |k| <= K_check.
    """

    n_detected: int
    j: dict[int, float]
    q_series: FourierOperatorSeries
    residual: float
    singular_gap: float
    j_raw: tuple[complex, ...] = ()
    time_local: bool = False

    def to_payload(self) -> dict[str, Any]:
        """JSON-ready diagnostics and coefficients."""
        return {
            "n_detected": self.n_detected,
            "j": {str(nu): value for nu, value in self.j.items()},
            "residual": self.residual,
            "singular_gap": self.singular_gap,
            "time_local": self.time_local,
            "q_k": series_payload(self.q_series),
        }


def series_payload(series: FourierOperatorSeries) -> dict[str, list[list[list[float]]]]:
    """Map k (as string) to the coefficient matrix as [re, im] pairs."""
    return {
        str(int(k)): [[[float(z.real), float(z.imag)] for z in row] for row in coefficient]
        for k, coefficient in zip(series.ks, series.coefficients, strict=True)
    }


def projector_sidebands(
    mode: FloquetMode, K_out: int, *, time_local: bool = False
) -> FourierOperatorSeries:
    """Fourier components of |phi(t)><phi(t + T/2)|.

    Pi_k = sum_k' (-1)^k' |phi_{k'+k}><phi_k'| for |k| <= K_out. With
    ``time_local`` the sign is dropped, giving |phi(t)><phi(t)|.

    Raises:
        ParameterError: If K_out exceeds the mode's cutoff

    """
    K = mode.K
    if K_out > K:
        raise ParameterError(f"K_out={K_out} exceeds the mode cutoff K={K}")
    sidebands = mode.sidebands
    ks = mode.ks
    signs = np.ones(ks.size) if time_local else np.where(ks % 2 == 0, 1.0, -1.0)

    coefficients = np.zeros((2 * K_out + 1, mode.dim, mode.dim), dtype=np.complex128)
    for i, k in enumerate(range(-K_out, K_out + 1)):
        lo, hi = max(-K, -K - k), min(K, K - k)
        ket = sidebands[lo + k + K : hi + k + K + 1]
        bra = sidebands[lo + K : hi + K + 1] * signs[lo + K : hi + K + 1, None]
        coefficients[i] = ket.T @ bra.conj()
    return FourierOperatorSeries(-K_out, K_out, coefficients, mode.omega)


def _sign_factor(q_series: FourierOperatorSeries, n_detected: int) -> complex:
    top = q_series.coefficient(n_detected)
    if float(np.abs(top).max()) < _TOP_COEFFICIENT_FLOOR:
        raise InternalConsistencyError(
            f"Top coefficient Q_{n_detected} vanishes; the global phase cannot be fixed"
        )
    a, b = np.unravel_index(int(np.argmax(np.abs(top))), top.shape)
    pivot = complex(top[a, b])
    return np.conj(pivot) / abs(pivot)


def fix_sign(q_series: FourierOperatorSeries, n_detected: int) -> FourierOperatorSeries:
    """Rotate Q so the largest-magnitude entry of Q_{n_detected} is real and positive.

    Raises:
        InternalConsistencyError: If all entries of that coefficient are below 1e-12

    """
    return q_series.scaled(_sign_factor(q_series, n_detected))


def solve_parities(
    representatives: Sequence[FloquetMode],
    K_check: int | None = None,
    sv_tol: float | None = None,
    *,
    n_max: int | None = None,
    time_local: bool = False,
) -> ParitySolution:
    """Find the smallest cutoff n for which sum_nu j_nu Pi_{nu,k} = 0, n < |k| <= K_check.

    Args:
        representatives: One mode per equivalence class (d >= 2)
        K_check: Largest |k| used (default: K - k_check_margin)
        sv_tol: Required ratio between the two smallest singular values
        n_max: Largest cutoff tried
        time_local: Use |phi(t)><phi(t)| instead of the half-period shifted form

    Returns:
        ParitySolution with Q_k for |k| <= n_detected and j_nu = +-1

    Raises:
        SymmetryNotDetectedError: If no cutoff up to n_max admits a solution
        DegenerateSymmetryError: If the null space is more than one-dimensional

    """
    modes = list(representatives)
    d = len(modes)
    if d < 2:
        raise ParameterError(f"solve_parities needs at least two modes, got {d}")
    K = min(mode.K for mode in modes)
    K_check = K - PARITY["k_check_margin"] if K_check is None else K_check
    sv_tol = PARITY["sv_tol"] if sv_tol is None else sv_tol
    n_max = PARITY["n_max"] if n_max is None else n_max
    if K_check < 1:
        raise ParameterError(f"K_check must be >= 1, got {K_check} (mode cutoff K={K})")

    projectors = [projector_sidebands(mode, K_check, time_local=time_local) for mode in modes]
    # rows: (k, a, b) flattened; columns: nu
    stacked = np.stack([p.coefficients.reshape(2 * K_check + 1, -1) for p in projectors], axis=-1)
    ks = np.arange(-K_check, K_check + 1)

    for n_c in range(0, min(n_max, K_check - 1) + 1):
        rows = stacked[np.abs(ks) > n_c].reshape(-1, d)
        sigma, right = svd_spectrum(rows)
        sigma_max = float(sigma[0])
        if sigma_max < PARITY["sigma_floor"]:
            if n_c == 0:
                # no projector has a |k| > 0 component, so every j solves the equations
                raise DegenerateSymmetryError(
                    f"All sideband equations vanish (largest singular value {sigma_max:.3e}); "
                    f"null space of dimension {d}; perturb alpha slightly"
                )
            logger.debug("n_c=%d: equations below sigma_floor (%.3e)", n_c, sigma_max)
            break
        null_dim = int(np.count_nonzero(sigma <= sigma_max / sv_tol))
        if null_dim >= 2:
            raise DegenerateSymmetryError(
                f"Null space of dimension {null_dim} at cutoff {n_c}; perturb alpha slightly"
            )
        gap = float(sigma[-2]) / max(float(sigma[-1]), np.finfo(float).tiny)
        if gap < sv_tol:
            continue
        vector = right[:, -1] * math.sqrt(d)
        magnitudes = np.abs(vector)
        if float(magnitudes.max() - magnitudes.min()) > PARITY["magnitude_tol"]:
            logger.debug("n_c=%d: null vector magnitudes %s unequal", n_c, magnitudes)
            continue
        return _finish_solution(projectors, vector, n_c, gap, time_local)

    raise SymmetryNotDetectedError(
        f"No time-nonlocal symmetry detected for cutoffs up to {min(n_max, K_check - 1)}"
    )


def _finish_solution(
    projectors: list[FourierOperatorSeries],
    vector: NDArray[np.complex128],
    n_c: int,
    gap: float,
    time_local: bool,
) -> ParitySolution:
    unit = vector / np.abs(vector)
    template = projectors[0]
    coefficients = np.tensordot(unit, np.stack([p.coefficients for p in projectors]), axes=1)
    full = FourierOperatorSeries(template.k_min, template.k_max, coefficients, template.omega)
    factor = _sign_factor(full, n_c)
    full = full.scaled(factor)
    j_raw = tuple(complex(v * factor) for v in vector)

    for nu, value in enumerate(unit * factor):
        if abs(value.imag) > PARITY["parity_imag_tol"]:
            raise InternalConsistencyError(
                f"Parity of mode {nu} is {value:.12g}, not +-1 after sign fixing"
            )
    j = {nu: 1.0 if value.real > 0 else -1.0 for nu, value in enumerate(unit * factor)}

    ks = full.ks
    tail = full.coefficients[np.abs(ks) > n_c]
    residual = float(np.abs(tail).max()) if tail.size else 0.0
    inner = np.abs(ks) <= n_c
    q_series = FourierOperatorSeries(-n_c, n_c, full.coefficients[inner], full.omega)
    logger.debug("Detected cutoff n=%d, j=%s, gap=%.3e, residual=%.3e", n_c, j, gap, residual)
    return ParitySolution(
        n_detected=n_c,
        j=j,
        q_series=q_series,
        residual=residual,
        singular_gap=gap,
        j_raw=j_raw,
        time_local=time_local,
    )


def sambe_matrix_element(
    a: FloquetMode, b: FloquetMode, q_series: FourierOperatorSeries, *, time_local: bool = False
) -> complex:
    """Return (1/T) int_0^T <a(t)| Q(t) |b(t + T/2)> dt from sidebands.

    Equals sum_{k,k'} (-1)^k' <a_{k+k'}| Q_k |b_k'>, divided by the Sambe
    norms of a and b. ``time_local`` drops the half-period shift.
    """
    K = min(a.K, b.K)
    ks = np.arange(-K, K + 1)
    signs = np.ones(ks.size) if time_local else np.where(ks % 2 == 0, 1.0, -1.0)
    a_sb = a.sidebands[a.K - K : a.K + K + 1]
    b_sb = b.sidebands[b.K - K : b.K + K + 1] * signs[:, None]
    total = 0j
    for k, qk in zip(q_series.ks, q_series.coefficients, strict=True):
        lo, hi = max(-K, -K - k), min(K, K - k)
        if lo > hi:
            continue
        bra = a_sb[lo + k + K : hi + k + K + 1]
        ket = b_sb[lo + K : hi + K + 1]
        total += complex(np.einsum("ia,ab,ib->", bra.conj(), qk, ket))
    return total / math.sqrt(a.sambe_norm() * b.sambe_norm())


def parity_sambe(
    mode: FloquetMode, q_series: FourierOperatorSeries, *, time_local: bool = False
) -> float:
    """Time-averaged <phi|J|phi> in Sambe space.

    Raises:
        InternalConsistencyError: If the imaginary part exceeds parity_imag_tol

    """
    value = sambe_matrix_element(mode, mode, q_series, time_local=time_local)
    if abs(value.imag) > PARITY["parity_imag_tol"]:
        raise InternalConsistencyError(f"Sambe parity has imaginary part {value.imag:.3e}")
    return value.real


def parity_hilbert(mode: FloquetMode, q_series: FourierOperatorSeries, t: float = 0.0) -> float:
    """Return Re <phi(t)| Q(t) |phi(t + T/2)> with both vectors normalized.

    Raises:
        InternalConsistencyError: If the imaginary part exceeds parity_imag_tol

    """
    half = math.pi / mode.omega
    now = mode_at_time(mode, t)
    later = mode_at_time(mode, t + half)
    now = now / np.linalg.norm(now)
    later = later / np.linalg.norm(later)
    value = complex(now.conj() @ series_eval(q_series, t) @ later)
    if abs(value.imag) > PARITY["parity_imag_tol"]:
        raise InternalConsistencyError(
            f"Parity at t={t:.6g} has imaginary part {value.imag:.3e}; "
            "Q is not a symmetry of this mode"
        )
    return value.real


def resolve_degenerate_pair(
    first: FloquetMode, second: FloquetMode, q_series: FourierOperatorSeries
) -> tuple[FloquetMode, FloquetMode]:
    """Diagonalize J inside a (near-)degenerate pair of modes.

    The second mode is moved to the first one's zone copy before mixing and
    moved back afterwards; returned modes carry parities, highest first.
    """
    omega = first.omega
    m = round((first.quasienergy - second.quasienergy) / omega)
    aligned = shift_zone(second, m)
    pair = (first, aligned)
    block = np.array(
        [[sambe_matrix_element(x, y, q_series) for y in pair] for x in pair],
        dtype=np.complex128,
    )
    block = 0.5 * (block + block.conj().T)
    decomposition = eigh(HermitianMatrix(block))

    mixed: list[FloquetMode] = []
    for col in range(2):
        c0, c1 = decomposition.eigenvectors[:, col]
        sidebands = c0 * first.sidebands + c1 * aligned.sidebands
        sidebands.setflags(write=False)
        parity = 1.0 if decomposition.eigenvalues[col] > 0 else -1.0
        # quasienergy of the mixture is the weighted mean of the pair
        quasienergy = abs(c0) ** 2 * first.quasienergy + abs(c1) ** 2 * aligned.quasienergy
        mixed.append(
            replace(
                first,
                quasienergy=float(quasienergy),
                sidebands=sidebands,
                parity=parity,
                brillouin_index=0,
            )
        )
    # eigh sorts ascending: mixed[1] carries j = +1; the j = -1 mode returns to its own zone
    return mixed[1], shift_zone(mixed[0], -m)


@dataclass(frozen=True)
class ParityAssignment:
    """Representatives with parity labels and how they were obtained."""

    modes: tuple[FloquetMode, ...]
    solution: ParitySolution | None
    method: str
    q_series: FourierOperatorSeries
    notes: tuple[str, ...] = field(default_factory=tuple)


def _perturbed_q(params: HamiltonianParams, K: int | None) -> FourierOperatorSeries:
    """Numeric Q at a slightly shifted alpha, where the pair is split."""
    error: FloquetError = SymmetryNotDetectedError("no perturbed alpha gave a symmetry")
    for decade in range(4):
        shift = PARITY["degenerate_alpha_shift"] * params.omega * 10**decade
        try:
            moved = params.with_alpha(params.alpha + shift)
            return solve_parities(representatives(moved, K)).q_series
        except FloquetError as e:
            error = e
    raise error


def assign_parities(
    params: HamiltonianParams,
    reps: Sequence[FloquetMode],
    K: int | None = None,
) -> ParityAssignment:
    """Label the two representatives with j = +-1.

    Well-separated pairs use the null-space solution. Degenerate pairs
    (splitting below degenerate_splitting) diagonalize J inside the pair with
    the closed-form Q when the detuning is an integer, otherwise with the
    numeric Q at alpha perturbed by degenerate_alpha_shift.

    Raises:
        SymmetryNotDetectedError: For non-integer detuning without a symmetry
        DegenerateSymmetryError: For non-integer detuning where every j solves the
            sideband equations (undriven system)

    """
    first, second = reps
    splitting = minimal_splitting(first.quasienergy, second.quasienergy, params.omega)
    if splitting >= PARITY["degenerate_splitting"] * params.omega:
        try:
            solution = solve_parities(reps)
            labeled = tuple(
                mode.with_parity(solution.j[nu]) for nu, mode in enumerate(reps)
            )
            return ParityAssignment(labeled, solution, "numeric", solution.q_series)
        except (SymmetryNotDetectedError, DegenerateSymmetryError):
            if params.n is None:
                raise
            logger.warning(
                "Null-space detection failed at integer detuning n=%d, alpha=%.12g; "
                "falling back to pair diagonalization",
                params.n,
                params.alpha,
            )

    if params.n is not None and (params.alpha > 0 or params.n == 0):
        q_series, method = analytic_q(params), "analytic_pair"
    else:
        logger.warning(
            "Degenerate pair at alpha=%.12g without closed form; using perturbed alpha",
            params.alpha,
        )
        q_series, method = _perturbed_q(params, K), "perturbed_pair"
    high, low = resolve_degenerate_pair(first, second, q_series)
    return ParityAssignment(
        (high, low), None, method, q_series, (f"splitting/omega={splitting / params.omega:.3e}",)
    )


@dataclass(frozen=True)
class SpectrumPoint:
    """Labeled representatives and diagnostics at one driving amplitude."""

    alpha: float
    modes: tuple[FloquetMode, ...]
    solution: ParitySolution | None
    method: str


@dataclass(frozen=True)
class SpectrumTable:
    """Quasienergies and parities over an alpha sweep and several zones."""

    params_base: HamiltonianParams
    points: tuple[SpectrumPoint, ...]
    zones: tuple[int, ...]

    def rows(self) -> list[tuple[float, int, float, float | None]]:
        """(alpha, zone, quasienergy, parity) in absolute units."""
        out: list[tuple[float, int, float, float | None]] = []
        for point in self.points:
            for zone in self.zones:
                shifted = [shift_zone(mode, zone) for mode in point.modes]
                # degenerate pairs keep the parity-descending order from resolution
                shifted.sort(key=lambda m: round(m.quasienergy / m.omega, 9))
                out.extend((point.alpha, zone, m.quasienergy, m.parity) for m in shifted)
        return out

    def to_frame(self) -> pl.DataFrame:
        """Plot-ready table in omega units."""
        omega = self.params_base.omega
        rows = self.rows()
        return pl.DataFrame(
            {
                "alpha/omega": [r[0] / omega for r in rows],
                "zone_index": [r[1] for r in rows],
                "quasienergy/omega": [r[2] / omega for r in rows],
                "parity": [r[3] for r in rows],
            },
            schema={
                "alpha/omega": pl.Float64,
                "zone_index": pl.Int64,
                "quasienergy/omega": pl.Float64,
                "parity": pl.Float64,
            },
        )

    def to_payload(self) -> dict[str, Any]:
        """JSON variant with per-alpha Q_k and solver diagnostics."""
        omega = self.params_base.omega
        return {
            "schema_version": SCHEMA_VERSION,
            "params": self.params_base.in_omega_units(),
            "zones": list(self.zones),
            "rows": [
                {
                    "alpha/omega": r[0] / omega,
                    "zone_index": r[1],
                    "quasienergy/omega": r[2] / omega,
                    "parity": r[3],
                }
                for r in self.rows()
            ],
            "points": [
                {
                    "alpha/omega": point.alpha / omega,
                    "method": point.method,
                    "solution": None if point.solution is None else point.solution.to_payload(),
                }
                for point in self.points
            ],
        }


def _classify_point(params: HamiltonianParams, K: int) -> SpectrumPoint:
    reps = representatives(params, K)
    try:
        assignment = assign_parities(params, reps, K)
    except (SymmetryNotDetectedError, DegenerateSymmetryError):
        logger.debug("No symmetry at alpha=%.12g; parities left empty", params.alpha)
        return SpectrumPoint(params.alpha, tuple(reps), None, "none")
    return SpectrumPoint(params.alpha, assignment.modes, assignment.solution, assignment.method)


def classify_spectrum(
    params: HamiltonianParams,
    alpha_values: Sequence[float] | NDArray[np.float64],
    K: int | None = None,
    *,
    zones: Sequence[int] = (-1, 0, 1),
    threads: int | None = None,
) -> SpectrumTable:
    """Quasienergies and parities of the representatives and their zone copies.

    Args:
        params: Supplies epsilon, beta, omega (alpha is swept)
        alpha_values: Driving amplitudes (sorted ascending on output)
        K: Sideband cutoff; default is valid for the largest alpha
        zones: Brillouin-zone offsets emitted per representative
        threads: Worker count (default from FLOQUET_THREADS)

    Returns:
        SpectrumTable; parity is None where no symmetry exists

    Raises:
        FloquetError: From any alpha point, with its coordinate attached

    """
    alphas = np.sort(np.asarray(alpha_values, dtype=float))
    if alphas.size == 0:
        raise ParameterError("classify_spectrum needs at least one alpha value")
    if K is None:
        K = default_truncation(params.epsilon, params.beta, float(alphas.max()), params.omega)

    points: list[SpectrumPoint | None] = [None] * alphas.size

    def evaluate(index: int) -> None:
        alpha = float(alphas[index])
        try:
            points[index] = _classify_point(params.with_alpha(alpha), K)
        except FloquetError as e:
            raise e.at(epsilon=params.epsilon, alpha=alpha) from None

    workers = resolve_thread_count(threads)
    logger.info("Classifying %d alpha point(s), K=%d, %d worker(s)", alphas.size, K, workers)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        list(pool.map(evaluate, range(alphas.size)))

    return SpectrumTable(
        params_base=params,
        points=tuple(p for p in points if p is not None),
        zones=tuple(zones),
    )
