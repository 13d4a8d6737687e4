"""Numerical thresholds and configuration loading.

This module centralizes every tolerance used across the package, making it
easy to tune behavior without code changes.

Threshold Rationale:
- Truncation: sidebands decay super-exponentially beyond the drive's photon number
- Null space: a genuine symmetry leaves a singular value at machine noise,
  many orders below the next one
- Monodromy: fixed 4th-order stepping; unitarity drift signals too few steps
"""

from __future__ import annotations

import math
import os
from pathlib import Path
from typing import Any, TypedDict

import yaml

from .errors import ParameterError


class SambeConfig(TypedDict):
    """Truncation settings for the Floquet matrix."""

    k_padding: int
    k_scale: float
    trunc_tol: float
    zone_edge_tol: float


class ParityConfig(TypedDict):
    """Settings for the sideband null-space parity solver."""

    sv_tol: float
    n_max: int
    k_check_margin: int
    parity_imag_tol: float
    sigma_floor: float
    degenerate_alpha_shift: float
    degenerate_splitting: float
    magnitude_tol: float


class MonodromyConfig(TypedDict):
    """Settings for the one-period propagator."""

    steps: int
    unitarity_tol: float


# Integer detuning: eps is snapped to n*omega within this tolerance (relative to omega)
INTEGER_DETUNING_TOL: float = 1e-9

# Dense linear algebra
HERMITIAN_TOL: float = 1e-12  # relative to max |A_ij|
DEGENERACY_REL_TOL: float = 1e-9  # eigenvalue clusters, relative to ||A||

SAMBE: SambeConfig = {
    "k_padding": 10,  # K = ceil(k_scale * (alpha + beta + eps) / omega) + k_padding
    "k_scale": 4.0,
    "trunc_tol": 1e-10,  # central-mode weight allowed at |k| = K
    "zone_edge_tol": 1e-9,  # relative to omega; q this close below omega/2 folds to -omega/2
}

PARITY: ParityConfig = {
    "sv_tol": 1e6,  # minimum ratio between the kept and the null singular value
    "n_max": 16,  # largest Fourier cutoff searched for Q
    "k_check_margin": 5,  # K_check = K - margin
    "parity_imag_tol": 1e-8,
    "sigma_floor": 1e-10,  # below this the equations carry no information
    "degenerate_alpha_shift": 1e-6,  # relative to omega
    "degenerate_splitting": 1e-6,  # pairs closer than this (relative to omega) are resolved jointly
    "magnitude_tol": 1e-7,  # allowed spread of |j_nu| before normalization
}

MONODROMY: MonodromyConfig = {
    "steps": 4000,
    "unitarity_tol": 1e-8,
}

# Exact crossings are accepted below this splitting (relative to omega)
CROSSING_TOL: float = 1e-8

# Identity checks on Q(t)
IDENTITY_TOL: float = 1e-10
IDENTITY_SAMPLES: int = 32

# Output payloads
SCHEMA_VERSION: str = "1.0"

_PARAM_KEYS = ("epsilon", "beta", "alpha", "omega")


def default_truncation(epsilon: float, beta: float, alpha: float, omega: float) -> int:
    """Return the default sideband cutoff K for the given parameters.

    Args:
        epsilon: Detuning
        beta: Tunneling matrix element
        alpha: Driving amplitude
        omega: Driving frequency

    Returns:
        K = ceil(4 (alpha + beta + epsilon) / omega) + 10

    """
    scale = SAMBE["k_scale"] * (alpha + beta + epsilon) / omega
    return math.ceil(scale) + SAMBE["k_padding"]


def resolve_thread_count(explicit: int | None = None) -> int:
    """Return the worker count for grid evaluation, honoring FLOQUET_THREADS."""
    if explicit is not None:
        return max(1, int(explicit))
    env_value = os.environ.get("FLOQUET_THREADS")
    if env_value:
        try:
            return max(1, int(env_value))
        except ValueError as e:
            raise ParameterError(f"FLOQUET_THREADS must be an integer, got {env_value!r}") from e
    return max(1, min(8, os.cpu_count() or 1))


def _parse_key_value_text(text: str) -> dict[str, Any]:
    """Parse ``key=value`` lines; blank lines and ``#`` comments are skipped."""
    parsed: dict[str, Any] = {}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParameterError(f"Malformed config line (expected key=value): {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        parsed[key] = value
    return parsed


def read_params_mapping(path: str | Path) -> dict[str, Any]:
    """Read a flat parameter mapping from YAML or ``key=value`` text.

    Args:
        path: Path to the config file

    Returns:
        Dictionary with float values for epsilon, beta, alpha, omega (already
        scaled by omega when ``units: omega`` is present) and the original
        ``units`` entry

    Raises:
        ParameterError: If the file is malformed or a key is missing

    """
    text = Path(path).read_text(encoding="utf-8")
    try:
        loaded = yaml.safe_load(text)
    except yaml.YAMLError:
        loaded = None
    mapping = loaded if isinstance(loaded, dict) else _parse_key_value_text(text)

    missing = [key for key in _PARAM_KEYS if key not in mapping]
    if missing:
        raise ParameterError(f"Config {path} is missing keys: {missing}")

    try:
        values = {key: float(mapping[key]) for key in _PARAM_KEYS}
    except (TypeError, ValueError) as e:
        raise ParameterError(f"Config {path} has a non-numeric parameter: {e}") from e

    units = str(mapping.get("units", "absolute")).strip().lower()
    if units == "omega":
        for key in ("epsilon", "beta", "alpha"):
            values[key] *= values["omega"]
    elif units != "absolute":
        raise ParameterError(f"Unknown units {units!r}; expected 'omega' or 'absolute'")
    return {**values, "units": units}
