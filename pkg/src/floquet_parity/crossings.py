"""Locate quasienergy crossings along an alpha sweep.

Minima of the minimal splitting are bracketed on the scan grid and refined:
pairs of opposite parity have a signed gap q(+1) - q(-1) that changes sign,
so brentq finds the exact crossing; everything else is refined as an avoided
crossing with a bounded scalar minimization.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass
from typing import Any

import numpy as np
import polars as pl
from numpy.typing import NDArray
from scipy.optimize import brentq, minimize_scalar

from .config import CROSSING_TOL, SCHEMA_VERSION, default_truncation
from .errors import (
    DegenerateSymmetryError,
    InternalConsistencyError,
    ParameterError,
    SymmetryNotDetectedError,
)
from .model import HamiltonianParams
from .sambe import minimal_splitting, representatives, splitting_at, splitting_map
from .symmetry_numeric import assign_parities

logger = logging.getLogger(__name__)

# Pairs closer than this (relative to omega) count as touching inside the root search
_TOUCH_TOL = 1e-12


@dataclass(frozen=True)
class PairState:
    """The representative pair at one alpha.

    ``signed_gap`` is q(j=+1) - q(j=-1) after moving the second mode to the
    zone copy nearest the first; None when the parities agree or are unknown.
    """

    alpha: float
    splitting: float
    parities: tuple[float | None, float | None]
    signed_gap: float | None


@dataclass(frozen=True)
class Crossing:
    """A refined minimum of the splitting."""

    alpha: float
    splitting: float
    kind: str  # "exact" or "avoided"
    opposite_parity: bool | None
    parities: tuple[float | None, float | None]


def pair_state(params: HamiltonianParams, K: int | None = None) -> PairState:
    """Evaluate splitting, parities and the parity-ordered signed gap."""
    omega = params.omega
    reps = representatives(params, K)
    splitting = minimal_splitting(reps[0].quasienergy, reps[1].quasienergy, omega)
    try:
        modes = assign_parities(params, reps, K).modes
    except (SymmetryNotDetectedError, DegenerateSymmetryError):
        return PairState(params.alpha, splitting, (None, None), None)

    first, second = modes
    m = round((first.quasienergy - second.quasienergy) / omega)
    if first.parity is None or second.parity is None:
        return PairState(params.alpha, splitting, (first.parity, second.parity), None)
    second_parity = second.parity * (-1) ** (m % 2)
    parities = (first.parity, second.parity)
    if first.parity == second_parity:
        return PairState(params.alpha, splitting, parities, None)
    if splitting < _TOUCH_TOL * omega:
        return PairState(params.alpha, splitting, parities, 0.0)
    gap = first.quasienergy - (second.quasienergy + m * omega)
    return PairState(params.alpha, splitting, parities, gap if first.parity > 0 else -gap)


def _local_minima(values: NDArray[np.float64]) -> list[int]:
    return [
        i
        for i in range(1, values.size - 1)
        if values[i] <= values[i - 1] and values[i] <= values[i + 1]
    ]


def locate_crossings(
    params: HamiltonianParams,
    alpha_values: Sequence[float] | NDArray[np.float64],
    K: int | None = None,
    *,
    threads: int | None = None,
) -> list[Crossing]:
    """Scan alpha, then refine every interior minimum of the splitting.

    Args:
        params: Supplies epsilon, beta, omega
        alpha_values: Scan grid (at least three points)
        K: Sideband cutoff; default is valid for the largest alpha
        threads: Worker count for the scan

    Returns:
        Crossings ordered by alpha

    Raises:
        ParameterError: If the grid has fewer than three points

    """
    alphas = np.sort(np.asarray(alpha_values, dtype=float))
    if alphas.size < 3:
        raise ParameterError("locate_crossings needs at least three alpha values")
    if K is None:
        K = default_truncation(params.epsilon, params.beta, float(alphas.max()), params.omega)
    scan = splitting_map(params, [params.epsilon], alphas, K, threads=threads).splittings[0]

    crossings: list[Crossing] = []
    for i in _local_minima(scan):
        crossings.append(_refine(params, float(alphas[i - 1]), float(alphas[i + 1]), K))
    logger.info(
        "Found %d minima (%d exact) for epsilon/omega=%.6g",
        len(crossings),
        sum(c.kind == "exact" for c in crossings),
        params.epsilon / params.omega,
    )
    return crossings


def _refine(params: HamiltonianParams, lo: float, hi: float, K: int) -> Crossing:
    left = pair_state(params.with_alpha(lo), K)
    right = pair_state(params.with_alpha(hi), K)
    if (
        left.signed_gap is not None
        and right.signed_gap is not None
        and left.signed_gap * right.signed_gap <= 0
    ):

        def signed_gap(alpha: float) -> float:
            state = pair_state(params.with_alpha(alpha), K)
            if state.signed_gap is None:
                raise InternalConsistencyError(
                    f"Parity pairing changed inside the bracket at alpha={alpha:.17g}"
                )
            return state.signed_gap

        root = brentq(signed_gap, lo, hi, xtol=1e-15 * params.omega, rtol=4 * np.finfo(float).eps)
        state = pair_state(params.with_alpha(root), K)
        if state.splitting <= CROSSING_TOL * params.omega:
            return Crossing(root, state.splitting, "exact", True, state.parities)
        logger.warning(
            "Sign change of the signed gap near alpha=%.12g left splitting %.3e",
            root,
            state.splitting,
        )

    result = minimize_scalar(
        lambda alpha: splitting_at(params.with_alpha(alpha), K),
        bounds=(lo, hi),
        method="bounded",
        options={"xatol": 1e-12 * params.omega},
    )
    alpha = float(result.x)
    state = pair_state(params.with_alpha(alpha), K)
    opposite = None
    if state.parities[0] is not None and state.parities[1] is not None:
        opposite = state.signed_gap is not None
    return Crossing(alpha, state.splitting, "avoided", opposite, state.parities)


def crossings_frame(crossings: Sequence[Crossing], omega: float) -> pl.DataFrame:
    """Table of refined minima in omega units."""
    return pl.DataFrame(
        {
            "alpha/omega": [c.alpha / omega for c in crossings],
            "splitting/omega": [c.splitting / omega for c in crossings],
            "kind": [c.kind for c in crossings],
            "opposite_parity": [c.opposite_parity for c in crossings],
        },
        schema={
            "alpha/omega": pl.Float64,
            "splitting/omega": pl.Float64,
            "kind": pl.Utf8,
            "opposite_parity": pl.Boolean,
        },
    )


def crossings_payload(
    crossings: Sequence[Crossing], params: HamiltonianParams
) -> dict[str, Any]:
    """JSON-ready list of refined minima."""
    omega = params.omega
    return {
        "schema_version": SCHEMA_VERSION,
        "params": params.in_omega_units(),
        "crossings": [
            {
                "alpha/omega": c.alpha / omega,
                "splitting/omega": c.splitting / omega,
                "kind": c.kind,
                "opposite_parity": c.opposite_parity,
                "parities": list(c.parities),
            }
            for c in crossings
        ],
    }
