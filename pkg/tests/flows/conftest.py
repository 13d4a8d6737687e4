"""Shared fixtures for flow tests.

This module provides common test fixtures for:
- Synthetic dataset CSVs in the layout the compute tasks write
- Manifests pointing at them
"""

import polars as pl
import pytest


def _manifest(path, dataset):
    return {"dataset": dataset, "output_path": str(path), "row_count": None}


@pytest.fixture
def splitting_map_manifest(tmp_path):
    """Splitting map where integer columns close and midpoint columns stay open."""
    rows = []
    for eps in (0.5, 1.0, 1.5, 2.0):
        for alpha in (0.0, 1.0, 2.0, 3.0):
            if float(eps).is_integer():
                splitting = 0.0 if alpha == 2.0 else 0.1
            else:
                splitting = 0.2 if alpha > 0 else 1e-9
            rows.append(
                {"epsilon/omega": eps, "alpha/omega": alpha, "splitting/omega": splitting}
            )
    path = tmp_path / "splitting_map.csv"
    pl.DataFrame(rows).write_csv(path)
    return _manifest(path, "splitting_map")


@pytest.fixture
def spectrum_manifest(tmp_path):
    """Two alpha points, three zones, parities alternating between zones."""
    rows = []
    for alpha in (1.0, 2.0):
        for zone in (-1, 0, 1):
            for q, parity in ((-0.2, 1.0), (0.3, -1.0)):
                rows.append(
                    {
                        "alpha/omega": alpha,
                        "zone_index": zone,
                        "quasienergy/omega": q + zone,
                        "parity": parity * (-1.0) ** (zone % 2),
                    }
                )
    path = tmp_path / "spectrum_eps1.csv"
    pl.DataFrame(rows).write_csv(path)
    return _manifest(path, "spectrum_eps1")


@pytest.fixture
def crossings_manifest(tmp_path):
    """Two exact opposite-parity crossings and one open same-parity approach."""
    frame = pl.DataFrame(
        {
            "alpha/omega": [1.2, 2.5, 3.9],
            "splitting/omega": [1e-12, 3e-13, 0.02],
            "kind": ["exact", "exact", "avoided"],
            "opposite_parity": [True, True, False],
        }
    )
    path = tmp_path / "crossings.csv"
    frame.write_csv(path)
    return _manifest(path, "crossings")
