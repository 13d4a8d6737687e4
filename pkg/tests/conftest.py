"""Shared fixtures for the numerics tests.

This module provides common test fixtures for:
- Parameter points in the strong-tunneling regime (beta = 2.7 omega)
- Representatives and detected symmetries at integer detuning
- A seeded random generator
"""

from __future__ import annotations

import numpy as np
import pytest

from floquet_parity.model import HamiltonianParams
from floquet_parity.sambe import FloquetMode, representatives
from floquet_parity.symmetry_numeric import ParitySolution, solve_parities


@pytest.fixture
def rng() -> np.random.Generator:
    """Seeded generator for randomized parameter draws."""
    return np.random.default_rng(20240601)


@pytest.fixture(scope="session")
def params_eps1() -> HamiltonianParams:
    """One-photon resonance: epsilon = omega, beta = 2.7, alpha = 2."""
    return HamiltonianParams(epsilon=1.0, beta=2.7, alpha=2.0, omega=1.0)


@pytest.fixture(scope="session")
def reps_eps1(params_eps1: HamiltonianParams) -> tuple[FloquetMode, FloquetMode]:
    """Representatives at the one-photon resonance."""
    return representatives(params_eps1)


@pytest.fixture(scope="session")
def solution_eps1(reps_eps1: tuple[FloquetMode, FloquetMode]) -> ParitySolution:
    """Numerically detected symmetry at the one-photon resonance."""
    return solve_parities(reps_eps1)
