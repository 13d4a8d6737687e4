"""Thresholds and regimes for the reproduction flow.

This module centralizes the datasets the flow produces and the checks run on
them, making it easy to tune behavior without code changes.

Threshold Rationale:
- Exact crossings: opposite-parity pairs touch to solver precision
- Avoided crossings: same-parity pairs stay visibly split
- Integer columns: splitting minima collapse only along eps = n omega
- Table: the recurrence reproduces the closed forms to rounding error
"""

from __future__ import annotations

from pathlib import Path
from typing import TypedDict


class GridRangeConfig(TypedDict):
    """Inclusive linspace range in units of omega."""

    lo: float
    hi: float
    points: int


class SplittingMapRegime(TypedDict):
    """Minimal-splitting map over (epsilon, alpha) at fixed beta."""

    beta: float
    epsilon: GridRangeConfig
    alpha: GridRangeConfig


class SpectrumRegime(TypedDict):
    """Parity-labeled spectrum along alpha at fixed (epsilon, beta)."""

    epsilon: float
    beta: float
    alpha: GridRangeConfig


class ToleranceConfig(TypedDict):
    """Acceptance thresholds, relative to omega where they carry energy units."""

    exact_crossing: float
    avoided_gap: float
    integer_column_min: float
    off_integer_min: float
    table_rel_error: float


# Regimes in units of omega
SPLITTING_MAP: SplittingMapRegime = {
    "beta": 1.3,
    "epsilon": {"lo": 0.0, "hi": 4.5, "points": 150},
    "alpha": {"lo": 0.0, "hi": 6.0, "points": 150},
}

SPECTRA: dict[str, SpectrumRegime] = {
    "spectrum_eps1": {"epsilon": 1.0, "beta": 2.7, "alpha": {"lo": 0.0, "hi": 8.0, "points": 400}},
    "spectrum_eps4": {"epsilon": 4.0, "beta": 2.7, "alpha": {"lo": 0.0, "hi": 8.0, "points": 400}},
}

CROSSING_SCAN: SpectrumRegime = {
    "epsilon": 1.0,
    "beta": 2.7,
    "alpha": {"lo": 0.0, "hi": 8.0, "points": 400},
}

TOLERANCES: ToleranceConfig = {
    "exact_crossing": 1e-8,
    "avoided_gap": 1e-4,  # at least one same-parity approach stays above this
    "integer_column_min": 1e-6,
    "off_integer_min": 1e-6,
    "table_rel_error": 1e-10,
}

# Minimum exact crossings expected in the crossing scan
MIN_EXACT_CROSSINGS: int = 2

# Off-integer columns ignore the undriven edge alpha < this (units of omega)
SMALL_ALPHA_CUTOFF: float = 0.5

# Random (alpha, beta, omega) draws for the table verification
TABLE_RANDOM_POINTS: int = 10
TABLE_SEED: int = 20240601

DEFAULT_OUTPUT_DIR = Path("data/reproduction")


def get_spectrum_regime(name: str) -> SpectrumRegime:
    """Get a spectrum regime by dataset name.

    Args:
        name: Dataset name (e.g., 'spectrum_eps1')

    Returns:
        Regime with epsilon, beta and the alpha range

    Raises:
        KeyError: If the dataset is not configured

    """
    return SPECTRA[name]
