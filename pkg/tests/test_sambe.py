"""Unit tests for the Sambe-space Floquet solver.

This module tests:
- Floquet matrix structure and truncation checks
- Quasienergy folding, splitting and representative selection
- Zone shifts and the particle-hole partner of a mode
- Agreement with the one-period propagator
- The minimal-splitting map
"""

from __future__ import annotations

import math
from dataclasses import replace

import numpy as np
import pytest

from floquet_parity.config import default_truncation
from floquet_parity.errors import ConvergenceError, ParameterError
from floquet_parity.model import SIGMA_X, SIGMA_Z, HamiltonianParams
from floquet_parity.sambe import (
    build_floquet_matrix,
    fold_quasienergy,
    minimal_splitting,
    mode_at_time,
    monodromy_quasienergies,
    particle_hole_partner,
    quasienergy_spectrum,
    representatives,
    select_representatives,
    shift_zone,
    splitting_at,
    splitting_map,
)


class TestFloquetMatrix:
    """Test block structure of the truncated Floquet Hamiltonian."""

    def test_blocks(self):
        """Test diagonal blocks H_+ - k omega and off-diagonal (alpha/2) sigma_z."""
        params = HamiltonianParams(epsilon=1.0, beta=2.7, alpha=2.0, omega=1.5)
        K = 2
        matrix = build_floquet_matrix(params, K).data
        assert matrix.shape == (10, 10)
        static = 0.5 * SIGMA_Z + 2.7 * SIGMA_X
        for i, k in enumerate(range(-K, K + 1)):
            block = matrix[2 * i : 2 * i + 2, 2 * i : 2 * i + 2]
            np.testing.assert_allclose(block, static - k * 1.5 * np.eye(2))
        np.testing.assert_allclose(matrix[0:2, 2:4], SIGMA_Z)
        assert not matrix[0:2, 4:6].any()

    def test_cutoff_must_be_positive(self):
        """Test K < 1 is rejected."""
        with pytest.raises(ParameterError):
            build_floquet_matrix(HamiltonianParams(1.0, 1.0, 1.0, 1.0), 0)


class TestQuasienergySpectrum:
    """Test diagonalization results and truncation diagnostics."""

    def test_undriven_quasienergies(self):
        """Test alpha = 0 gives +-sqrt(eps^2/4 + beta^2) up to multiples of omega."""
        params = HamiltonianParams(epsilon=0.6, beta=0.2, alpha=0.0, omega=1.0)
        first, second = representatives(params)
        energy = math.sqrt(0.09 + 0.04)
        assert first.quasienergy == pytest.approx(-energy, abs=1e-12)
        assert second.quasienergy == pytest.approx(energy, abs=1e-12)

    def test_spectrum_is_complete_and_sorted(self, params_eps1):
        """Test 2(2K+1) modes come back in ascending order."""
        modes = quasienergy_spectrum(params_eps1, K=30)
        assert len(modes) == 2 * 61
        qs = [m.quasienergy for m in modes]
        assert qs == sorted(qs)

    def test_replicas_of_central_modes(self, params_eps1, reps_eps1):
        """Test q + omega is also (approximately) an eigenvalue."""
        modes = quasienergy_spectrum(params_eps1)
        qs = np.array([m.quasienergy for m in modes])
        for mode in reps_eps1:
            assert np.abs(qs - (mode.quasienergy + params_eps1.omega)).min() < 1e-9

    def test_insufficient_cutoff_raises(self, params_eps1):
        """Test a too-small K is reported as a convergence failure."""
        with pytest.raises(ConvergenceError) as excinfo:
            quasienergy_spectrum(params_eps1, K=2)
        assert excinfo.value.quantity == "edge_weight"

    def test_representatives_in_first_zone(self, reps_eps1):
        """Test both representatives lie in [-omega/2, omega/2) and are ordered."""
        first, second = reps_eps1
        for mode in reps_eps1:
            assert -0.5 <= mode.quasienergy < 0.5
            assert mode.edge_weight <= 1e-10
            assert mode.sambe_norm() == pytest.approx(1.0, abs=1e-12)
        assert first.quasienergy <= second.quasienergy

    def test_class_straddling_zone_edge_is_found(self, params_eps1, reps_eps1):
        """Test a class whose copies round to just outside both zone edges is still selected."""
        offset = 0.5 - reps_eps1[0].quasienergy

        def moved(mode):
            q = mode.quasienergy + offset
            edge = math.floor(q) + 0.5
            if abs(q - edge) < 1e-9:
                q = edge + math.copysign(1e-14, edge)
            return replace(mode, quasienergy=q)

        spectrum = [moved(m) for m in quasienergy_spectrum(params_eps1)]
        first, second = select_representatives(spectrum, params_eps1)

        assert first.quasienergy == pytest.approx(-0.5, abs=1e-12)
        assert second.quasienergy == pytest.approx(
            fold_quasienergy(reps_eps1[1].quasienergy + offset, 1.0), abs=1e-9
        )
        assert minimal_splitting(first.quasienergy, second.quasienergy, 1.0) == pytest.approx(
            minimal_splitting(reps_eps1[0].quasienergy, reps_eps1[1].quasienergy, 1.0),
            abs=1e-9,
        )
        assert abs(np.vdot(first.sidebands, second.sidebands)) < 1e-8
        assert first.brillouin_index == second.brillouin_index == 0

    def test_crossing_at_zone_edge(self):
        """Test both members of a crossing at q = omega/2 become representatives."""
        params = HamiltonianParams(1.0, 2.7, 5.2367809966133745, 1.0)
        first, second = representatives(params)

        assert minimal_splitting(first.quasienergy, second.quasienergy, 1.0) < 1e-6
        for mode in (first, second):
            assert minimal_splitting(mode.quasienergy, 0.5, 1.0) < 1e-6
            assert -0.5 - 1e-9 <= mode.quasienergy < 0.5 - 1e-9
            assert mode.sambe_norm() == pytest.approx(1.0, abs=1e-10)
        assert abs(np.vdot(first.sidebands, second.sidebands)) < 1e-8

    def test_modes_are_normalized_at_every_time(self, reps_eps1):
        """Test |phi(t)| = 1 for all t (unitary evolution of a normalized mode)."""
        for mode in reps_eps1:
            for t in np.linspace(0.0, 2 * math.pi, 7):
                assert np.linalg.norm(mode_at_time(mode, t)) == pytest.approx(1.0, abs=1e-10)

    def test_modes_orthogonal_at_equal_times(self, reps_eps1):
        """Test the two representatives stay orthogonal at each instant."""
        first, second = reps_eps1
        for t in (0.0, 1.1, 3.0):
            assert abs(np.vdot(mode_at_time(first, t), mode_at_time(second, t))) < 1e-10


class TestFolding:
    """Test Brillouin-zone arithmetic."""

    @pytest.mark.parametrize(
        ("q", "expected"),
        [(0.0, 0.0), (0.5, -0.5), (-0.5, -0.5), (0.7, -0.3), (2.2, 0.2), (-1.6, 0.4)],
    )
    def test_fold(self, q, expected):
        """Test folding into [-omega/2, omega/2)."""
        assert fold_quasienergy(q, 1.0) == pytest.approx(expected, abs=1e-12)

    def test_minimal_splitting_uses_circle_distance(self):
        """Test splitting across the zone boundary is short."""
        assert minimal_splitting(-0.49, 0.49, 1.0) == pytest.approx(0.02)
        assert minimal_splitting(0.1, 0.3, 1.0) == pytest.approx(0.2)
        assert minimal_splitting(0.2, 3.2, 1.0) == pytest.approx(0.0, abs=1e-12)


class TestModeTransforms:
    """Test zone shifts and the particle-hole partner."""

    def test_shift_zone_changes_quasienergy_and_index(self, reps_eps1):
        """Test shift by m adds m omega and moves sidebands by m slots."""
        mode = reps_eps1[0]
        shifted = shift_zone(mode, 1)
        assert shifted.quasienergy == pytest.approx(mode.quasienergy + 1.0)
        assert shifted.brillouin_index == 1
        np.testing.assert_array_equal(shifted.sideband(0), mode.sideband(1))

    def test_shift_zone_describes_same_state(self, reps_eps1):
        """Test exp(-i q' t)|phi'(t)> equals exp(-i q t)|phi(t)>."""
        mode = reps_eps1[1]
        shifted = shift_zone(mode, -2)
        for t in (0.0, 0.8, 2.5):
            original = np.exp(-1j * mode.quasienergy * t) * mode_at_time(mode, t)
            moved = np.exp(-1j * shifted.quasienergy * t) * mode_at_time(shifted, t)
            np.testing.assert_allclose(moved, original, atol=1e-8)

    def test_shift_zone_flips_parity_for_odd_m(self, reps_eps1):
        """Test parity labels alternate between neighboring zones."""
        mode = reps_eps1[0].with_parity(1.0)
        assert shift_zone(mode, 1).parity == -1.0
        assert shift_zone(mode, 2).parity == 1.0
        assert shift_zone(reps_eps1[0], 1).parity is None

    def test_time_reversed_mode_matches_up_to_phase(self, reps_eps1):
        """Test conj(|phi(-t)>) equals |phi(t)> times one constant phase."""
        for mode in reps_eps1:
            reversed_sidebands = mode.sidebands.conj()
            phase = np.vdot(mode.sidebands, reversed_sidebands)
            assert abs(phase) == pytest.approx(1.0, abs=1e-10)
            np.testing.assert_allclose(reversed_sidebands, phase * mode.sidebands, atol=1e-10)
            for t in (0.3, 1.7, 4.0):
                np.testing.assert_allclose(
                    mode_at_time(mode, -t).conj(), phase * mode_at_time(mode, t), atol=1e-10
                )

    def test_particle_hole_partner_is_in_spectrum(self, params_eps1, reps_eps1):
        """Test C|phi> is a Floquet mode with quasienergy -q."""
        modes = quasienergy_spectrum(params_eps1)
        qs = np.array([m.quasienergy for m in modes])
        for mode in reps_eps1:
            partner = particle_hole_partner(mode)
            assert partner.quasienergy == pytest.approx(-mode.quasienergy)
            assert np.abs(qs - partner.quasienergy).min() < 1e-9
            # eigenvector check: F phi_C = q_C phi_C
            matrix = build_floquet_matrix(params_eps1, mode.K).data
            vector = partner.sidebands.reshape(-1)
            residual = matrix @ vector - partner.quasienergy * vector
            assert np.abs(residual).max() < 1e-8


class TestMonodromy:
    """Test the independent propagator against the Sambe spectrum."""

    def test_undriven_propagator_is_exact(self):
        """Test alpha = 0 reproduces exp(-i H_+ T)."""
        params = HamiltonianParams(epsilon=0.6, beta=0.2, alpha=0.0, omega=1.0)
        _, _, propagator = monodromy_quasienergies(params, steps=200)
        energy = math.sqrt(0.09 + 0.04)
        np.testing.assert_allclose(
            sorted(np.angle(np.linalg.eigvals(propagator))),
            sorted([energy * params.period, -energy * params.period]),
            atol=1e-10,
        )

    def test_matches_sambe_at_one_point(self, params_eps1, reps_eps1):
        """Test Sambe quasienergies equal monodromy eigenphases."""
        q1, q2, _ = monodromy_quasienergies(params_eps1)
        sambe = sorted(fold_quasienergy(m.quasienergy, 1.0) for m in reps_eps1)
        for got, want in zip((q1, q2), sambe, strict=True):
            assert minimal_splitting(got, want, 1.0) < 1e-8

    @pytest.mark.slow
    def test_matches_sambe_on_grid(self):
        """Test agreement within 1e-8 omega on a 5 x 5 (epsilon, alpha) grid at beta = 2.7."""
        omega = 1.0
        for eps in np.linspace(0.0, 4.0, 5):
            for alpha in np.linspace(0.0, 6.0, 5):
                params = HamiltonianParams(eps, 2.7, alpha, omega)
                q1, q2, _ = monodromy_quasienergies(params)
                reps = representatives(params)
                sambe = sorted(fold_quasienergy(m.quasienergy, omega) for m in reps)
                for got in (q1, q2):
                    assert min(minimal_splitting(got, want, omega) for want in sambe) < 1e-8

    def test_rejects_zero_steps(self, params_eps1):
        """Test steps < 1 is a parameter error."""
        with pytest.raises(ParameterError):
            monodromy_quasienergies(params_eps1, steps=0)


class TestSplittingMap:
    """Test the (epsilon, alpha) splitting grid."""

    def test_grid_values_and_frame(self):
        """Test grid entries equal splitting_at and the frame is row-major."""
        base = HamiltonianParams(0.0, 1.3, 0.0, 1.0)
        grid = splitting_map(base, [1.0, 0.5], [1.0, 2.0, 3.0], threads=2)
        np.testing.assert_array_equal(grid.epsilon_values, [0.5, 1.0])
        assert grid.splittings.shape == (2, 3)
        assert grid.splittings[1, 2] == pytest.approx(
            splitting_at(HamiltonianParams(1.0, 1.3, 3.0, 1.0), 20), abs=1e-10
        )
        frame = grid.to_frame()
        assert frame.columns == ["epsilon/omega", "alpha/omega", "splitting/omega"]
        assert frame.height == 6
        assert frame["epsilon/omega"].to_list() == [0.5, 0.5, 0.5, 1.0, 1.0, 1.0]
        assert (frame["splitting/omega"] <= 0.5).all()

    def test_payload(self):
        """Test the JSON payload nests the matrix by epsilon then alpha."""
        base = HamiltonianParams(0.0, 1.3, 0.0, 2.0)
        payload = splitting_map(base, [2.0], [1.0, 2.0], threads=1).to_payload()
        assert payload["epsilon/omega"] == [1.0]
        assert payload["alpha/omega"] == [0.5, 1.0]
        assert len(payload["splitting/omega"][0]) == 2
        assert payload["beta/omega"] == pytest.approx(0.65)

    def test_converged_in_cutoff(self):
        """Test doubling K changes no grid value by more than 1e-9 omega."""
        base = HamiltonianParams(0.0, 1.3, 0.0, 1.0)
        eps, alphas = [1.0, 1.5], [1.0, 2.0, 3.0]
        K = default_truncation(1.5, 1.3, 3.0, 1.0)
        coarse = splitting_map(base, eps, alphas, K, threads=1).splittings
        fine = splitting_map(base, eps, alphas, 2 * K, threads=1).splittings
        assert np.abs(fine - coarse).max() < 1e-9

    def test_grid_points_keep_detuning_tolerance(self):
        """Test a loose integer-detuning tolerance on the base reaches every node."""
        base = HamiltonianParams(0.0, 1.3, 0.0, 1.0, integer_detuning_tol=1e-3)
        grid = splitting_map(base, [1.0005], [2.0], K=30, threads=1)
        snapped = splitting_at(HamiltonianParams(1.0, 1.3, 2.0, 1.0), 30)
        assert grid.splittings[0, 0] == pytest.approx(snapped, abs=1e-12)

    def test_errors_carry_grid_coordinates(self):
        """Test failures report the (epsilon, alpha) node."""
        base = HamiltonianParams(0.0, 1.3, 0.0, 1.0)
        with pytest.raises(ConvergenceError, match=r"\[at epsilon=1, alpha=2\]"):
            splitting_map(base, [1.0], [2.0], K=2, threads=1)

    def test_empty_range_rejected(self):
        """Test an empty alpha range is a parameter error."""
        with pytest.raises(ParameterError):
            splitting_map(HamiltonianParams(0.0, 1.3, 0.0, 1.0), [1.0], [])
