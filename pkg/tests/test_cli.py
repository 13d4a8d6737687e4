"""Tests for the floquet-parity command line.

This module tests:
- Output routing (stdout vs. file plus _meta.json sidecar)
- Exit codes for usage, parameter and verification failures
- Status reporting when no symmetry exists
- Config-file loading with flag precedence
"""

from __future__ import annotations

import json
from pathlib import Path

import polars as pl
import pytest
from click.testing import CliRunner

from floquet_parity import symmetry_analytic
from floquet_parity.cli import cli
from floquet_parity.symmetry_analytic import RecurrenceSolution

PARAMS_DIR = Path(__file__).resolve().parents[1] / "config" / "params"


@pytest.fixture
def runner():
    """Click test runner."""
    return CliRunner()


def _invoke(runner, *args):
    return runner.invoke(cli, list(args), catch_exceptions=False)


class TestHelp:
    """Test the command group wiring."""

    def test_lists_commands(self, runner):
        """Test --help names every subcommand."""
        result = _invoke(runner, "--help")
        assert result.exit_code == 0
        for command in (
            "spectrum",
            "splitting-map",
            "parity",
            "crossings",
            "verify-table",
            "q-operator",
        ):
            assert command in result.output


class TestVerifyTable:
    """Test the recurrence check command."""

    def test_passes(self, runner):
        """Test the default orders pass and report the worst error."""
        result = _invoke(runner, "verify-table", "--random", "3", "--seed", "7")
        assert result.exit_code == 0
        assert "max relative error" in result.output
        assert "PASS" in result.output

    def test_mismatch_exits_4(self, runner, monkeypatch):
        """Test a corrupted reference coefficient fails with exit code 4."""
        original = symmetry_analytic.table_reference

        def corrupted(n, alpha, beta, omega):
            ref = original(n, alpha, beta, omega)
            mu = dict(ref.mu)
            mu[n] *= 1.01
            return RecurrenceSolution(ref.n, ref.lam, mu, ref.norm_constant)

        monkeypatch.setattr(symmetry_analytic, "table_reference", corrupted)
        result = runner.invoke(cli, ["verify-table", "--n", "2"])
        assert result.exit_code == 4
        assert "error:" in result.output


class TestSpectrum:
    """Test the parity-labeled spectrum command."""

    def test_writes_file_and_sidecar(self, runner, tmp_path):
        """Test CSV output plus provenance next to it."""
        out = tmp_path / "spectrum.csv"
        result = _invoke(
            runner, "spectrum", "--epsilon", "1", "--alpha", "1:3:3", "--threads", "1",
            "-o", str(out),
        )
        assert result.exit_code == 0
        frame = pl.read_csv(out)
        assert frame.columns == ["alpha/omega", "zone_index", "quasienergy/omega", "parity"]
        assert frame.height == 18
        meta = json.loads((tmp_path / "spectrum_meta.json").read_text())
        assert meta["command"] == "spectrum"
        assert meta["params"]["beta"] == pytest.approx(2.7)

    def test_json_status(self, runner, tmp_path):
        """Test the JSON variant reports a detected symmetry."""
        out = tmp_path / "spectrum.json"
        _invoke(
            runner, "spectrum", "--epsilon", "2", "--alpha", "2", "--threads", "1",
            "--format", "json", "-o", str(out),
        )
        payload = json.loads(out.read_text())
        assert payload["status"] == "detected"
        assert payload["points"][0]["solution"]["n_detected"] == 2

    def test_config_with_flag_override(self, runner, tmp_path):
        """Test config values are used unless a flag is given explicitly."""
        out = tmp_path / "spectrum.json"
        result = _invoke(
            runner, "spectrum", "--config", str(PARAMS_DIR / "spectrum_eps4.yaml"),
            "--alpha", "2", "--threads", "1", "--format", "json", "-o", str(out),
        )
        assert result.exit_code == 0
        params = json.loads(out.read_text())["params"]
        assert params["epsilon"] == pytest.approx(4.0)
        assert params["beta"] == pytest.approx(2.7)
        assert params["alpha"] == pytest.approx(2.0)


class TestSplittingMap:
    """Test the splitting-map command."""

    def test_stdout_csv(self, runner):
        """Test a 2 x 2 grid prints a header and four rows."""
        result = _invoke(
            runner, "splitting-map", "--epsilon", "1:2:2", "--alpha", "1:2:2", "--threads", "1"
        )
        assert result.exit_code == 0
        lines = result.output.splitlines()
        assert "epsilon/omega,alpha/omega,splitting/omega" in lines
        start = lines.index("epsilon/omega,alpha/omega,splitting/omega")
        assert len(lines[start + 1 : start + 5]) == 4

    def test_absolute_units(self, runner, tmp_path):
        """Test --units absolute divides by omega in the output."""
        out = tmp_path / "map.json"
        _invoke(
            runner, "splitting-map", "--units", "absolute", "--omega", "2", "--beta", "2.6",
            "--epsilon", "2", "--alpha", "2:4:2", "--threads", "1", "--format", "json",
            "-o", str(out),
        )
        payload = json.loads(out.read_text())
        assert payload["epsilon/omega"] == [1.0]
        assert payload["alpha/omega"] == [1.0, 2.0]
        assert payload["beta/omega"] == pytest.approx(1.3)


class TestParity:
    """Test the single-point parity command."""

    def test_integer_detuning(self, runner, tmp_path):
        """Test both parities are +-1 and time-independent."""
        out = tmp_path / "parity.json"
        result = _invoke(
            runner, "parity", "--time", "0", "--time", "0.3", "--format", "json", "-o", str(out)
        )
        assert result.exit_code == 0
        payload = json.loads(out.read_text())
        assert payload["status"] == "detected"
        for mode in payload["modes"]:
            assert mode["parity"] in (1.0, -1.0)
            assert mode["parity_hilbert@0T"] == pytest.approx(mode["parity"], abs=1e-8)
            assert mode["parity_hilbert@0.3T"] == pytest.approx(mode["parity"], abs=1e-8)
            assert mode["parity_sambe"] == pytest.approx(mode["parity"], abs=1e-8)

    def test_non_integer_detuning_is_not_an_error(self, runner, tmp_path):
        """Test epsilon = 1.5 exits 0 with a note and status 'none'."""
        out = tmp_path / "parity.json"
        result = _invoke(runner, "parity", "--epsilon", "1.5", "--format", "json", "-o", str(out))
        assert result.exit_code == 0
        assert "no time-nonlocal symmetry" in result.output
        payload = json.loads(out.read_text())
        assert payload["status"] == "none"
        assert payload["solution"] is None


class TestQOperator:
    """Test the Q(t) dump."""

    def test_agreement_at_n2(self, runner, tmp_path):
        """Test analytic and numeric Q_k agree within 1e-7."""
        out = tmp_path / "q.json"
        result = _invoke(
            runner, "q-operator", "--epsilon", "2", "--format", "json", "-o", str(out)
        )
        assert result.exit_code == 0
        payload = json.loads(out.read_text())
        assert payload["n"] == 2
        assert payload["status"] == "detected"
        assert payload["max_abs_difference"] <= 1e-7
        assert payload["analytic"]["identities"]["unitarity"] <= 1e-10
        assert sorted(payload["analytic"]["q_k"], key=int) == ["-2", "-1", "0", "1", "2"]

    def test_non_integer_detuning(self, runner, tmp_path):
        """Test epsilon = 1.5 has neither closed form nor numeric solution."""
        out = tmp_path / "q.json"
        result = _invoke(
            runner, "q-operator", "--epsilon", "1.5", "--format", "json", "-o", str(out)
        )
        assert result.exit_code == 0
        payload = json.loads(out.read_text())
        assert payload["status"] == "none"
        assert payload["n"] is None
        assert "analytic" not in payload
        assert "numeric" not in payload

    def test_analytic_limited_to_tabulated_orders(self, runner, tmp_path):
        """Test n = 5 emits no closed form by default."""
        out = tmp_path / "q.json"
        result = _invoke(
            runner, "q-operator", "--epsilon", "5", "--format", "json", "-o", str(out)
        )
        assert result.exit_code == 0
        payload = json.loads(out.read_text())
        assert payload["n"] == 5
        assert "analytic" not in payload

    def test_long_csv(self, runner, tmp_path):
        """Test the CSV lists analytic and numeric entries per (k, row, col)."""
        out = tmp_path / "q.csv"
        _invoke(runner, "q-operator", "--epsilon", "1", "-o", str(out))
        frame = pl.read_csv(out)
        assert frame.columns == ["source", "k", "row", "col", "re", "im"]
        assert set(frame["source"].to_list()) == {"analytic", "numeric"}
        assert frame.filter(pl.col("source") == "analytic").height == 3 * 4


class TestUsageErrors:
    """Test exit code 2 for invalid input."""

    def test_bad_range(self, runner):
        """Test hi < lo is rejected by the range parser."""
        result = runner.invoke(cli, ["spectrum", "--alpha", "3:1:5"])
        assert result.exit_code == 2

    def test_malformed_range(self, runner):
        """Test a two-field range is rejected."""
        result = runner.invoke(cli, ["spectrum", "--alpha", "0:1"])
        assert result.exit_code == 2

    def test_negative_beta(self, runner):
        """Test negative tunneling is a parameter error."""
        result = runner.invoke(cli, ["parity", "--beta", "-1"])
        assert result.exit_code == 2
        assert "error:" in result.output

    def test_parquet_needs_path(self, runner):
        """Test parquet cannot be written to stdout."""
        result = runner.invoke(cli, ["parity", "--format", "parquet"])
        assert result.exit_code == 2
