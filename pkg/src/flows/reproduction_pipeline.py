"""Prefect flow that regenerates the reference datasets with validation.

Architecture:
    1. Splitting map over (epsilon, alpha) at beta = 1.3 omega, including exact
       integer and midpoint detuning columns
    2. Parity-labeled spectra along alpha at epsilon = omega and 4 omega
    3. Crossing scan at epsilon = omega (exact vs. avoided)
    4. Recurrence vs. tabulated closed forms at random parameters
    5. Validation task per dataset (thresholds in src/flows/config.py)

Every CSV is written through floquet_parity.storage together with its
``_meta.json`` sidecar.

Dependencies:
    - src/floquet_parity (numerics)
    - src/flows/utils/validation.py (dataset checks)
    - src/flows/utils/notifications.py (logging)
    - src/flows/config.py (regimes and tolerances)
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from pathlib import Path
from typing import Any

import numpy as np
import polars as pl
from numpy.typing import NDArray
from prefect import flow, task

from floquet_parity.crossings import crossings_frame, locate_crossings
from floquet_parity.model import HamiltonianParams
from floquet_parity.sambe import splitting_map
from floquet_parity.storage import write_csv_any, write_meta_sidecar
from floquet_parity.symmetry_analytic import TABLE_MAX_N, compare_with_table
from floquet_parity.symmetry_numeric import classify_spectrum
from flows.config import (
    CROSSING_SCAN,
    DEFAULT_OUTPUT_DIR,
    SPECTRA,
    SPLITTING_MAP,
    TABLE_RANDOM_POINTS,
    TABLE_SEED,
    GridRangeConfig,
    get_spectrum_regime,
)
from flows.utils.notifications import log_error, log_info, log_warning
from flows.utils.validation import (
    validate_crossings,
    validate_spectrum,
    validate_splitting_map,
    validate_table,
)

ALL_DATASETS = ("splitting_map", *SPECTRA, "crossings", "table")


def _grid(config: GridRangeConfig) -> NDArray[np.float64]:
    return np.linspace(config["lo"], config["hi"], config["points"])


def _write(frame: pl.DataFrame, output_dir: str, dataset: str, params: dict[str, Any]) -> dict:
    path = str(Path(output_dir) / f"{dataset}.csv")
    write_csv_any(frame, path)
    write_meta_sidecar(path, f"reproduction_pipeline.{dataset}", params)
    return {"dataset": dataset, "output_path": path, "row_count": frame.height}


def integer_column_minima(
    base: HamiltonianParams,
    alphas: NDArray[np.float64],
    n_values: Sequence[int],
    threads: int | None = None,
) -> pl.DataFrame:
    """Refined splitting minima along the columns epsilon = n omega.

    Every interior minimum of each column scan is refined with
    locate_crossings, so exact crossings reach solver precision.

    Args:
        base: Supplies beta and omega
        alphas: Scan grid in absolute units
        n_values: Integer detunings in units of omega
        threads: Worker count for the column scans

    Returns:
        DataFrame with epsilon/omega, alpha/omega, splitting/omega and kind

    """
    omega = base.omega
    columns = ["epsilon/omega", "alpha/omega", "splitting/omega", "kind"]
    frames = [
        crossings_frame(
            locate_crossings(base.with_epsilon(n * omega), alphas, threads=threads), omega
        )
        .with_columns(pl.lit(float(n)).alias("epsilon/omega"))
        .select(columns)
        for n in n_values
    ]
    if not frames:
        return pl.DataFrame(
            schema={
                "epsilon/omega": pl.Float64,
                "alpha/omega": pl.Float64,
                "splitting/omega": pl.Float64,
                "kind": pl.Utf8,
            }
        )
    return pl.concat(frames)


def build_splitting_map(
    omega: float = 1.0, threads: int | None = None
) -> tuple[pl.DataFrame, pl.DataFrame]:
    """Configured splitting grid plus the refined integer-column minima.

    Integer and midpoint detuning columns are merged into the epsilon grid
    so the validation can read them exactly.

    Returns:
        (grid frame, refined minima frame), both in omega units

    """
    eps = _grid(SPLITTING_MAP["epsilon"])
    half_steps = np.arange(0.0, SPLITTING_MAP["epsilon"]["hi"] + 0.25, 0.5)
    eps = np.union1d(eps, half_steps[half_steps <= SPLITTING_MAP["epsilon"]["hi"]])
    alphas = _grid(SPLITTING_MAP["alpha"])

    base = HamiltonianParams(0.0, SPLITTING_MAP["beta"] * omega, 0.0, omega)
    grid = splitting_map(base, eps * omega, alphas * omega, threads=threads)
    n_values = range(1, math.floor(SPLITTING_MAP["epsilon"]["hi"]) + 1)
    minima = integer_column_minima(base, alphas * omega, n_values, threads=threads)
    return grid.to_frame(), minima


@task(name="compute_splitting_map", tags=["compute"])
def compute_splitting_map(output_dir: str, omega: float = 1.0, threads: int | None = None) -> dict:
    """Minimal splitting over the configured (epsilon, alpha) grid.

    The refined minima of the integer columns go to a second CSV,
    ``splitting_map_minima.csv``, referenced as ``minima_path``.

    Args:
        output_dir: Directory (or URI prefix) for the CSVs
        omega: Driving frequency; the grid is given in units of it
        threads: Worker count

    Returns:
        Manifest dict with dataset, output_path, minima_path and row_count

    """
    log_info(
        "Computing splitting map",
        context={"epsilon": SPLITTING_MAP["epsilon"], "alpha": SPLITTING_MAP["alpha"]},
    )
    frame, minima = build_splitting_map(omega, threads)
    params = {"beta/omega": SPLITTING_MAP["beta"], "omega": omega}
    refined = _write(minima, output_dir, "splitting_map_minima", params)
    log_info("Refined integer-column minima", context={"minima": refined["row_count"]})
    manifest = _write(frame, output_dir, "splitting_map", params)
    return {**manifest, "minima_path": refined["output_path"]}


@task(name="compute_spectrum", tags=["compute"])
def compute_spectrum(
    dataset: str, output_dir: str, omega: float = 1.0, threads: int | None = None
) -> dict:
    """Parity-labeled quasienergies for one configured alpha sweep.

    Returns:
        Manifest dict with dataset, output_path and row_count

    """
    regime = get_spectrum_regime(dataset)
    alphas = _grid(regime["alpha"]) * omega
    log_info(f"Computing {dataset}", context={"regime": regime})

    base = HamiltonianParams(regime["epsilon"] * omega, regime["beta"] * omega, 0.0, omega)
    table = classify_spectrum(base, alphas, threads=threads)
    unlabeled = sum(point.method == "none" for point in table.points)
    if unlabeled:
        log_warning(f"{dataset}: {unlabeled} alpha points without parity labels")
    return _write(table.to_frame(), output_dir, dataset, base.in_omega_units())


@task(name="scan_crossings", tags=["compute"])
def scan_crossings(output_dir: str, omega: float = 1.0, threads: int | None = None) -> dict:
    """Locate and refine splitting minima along the configured alpha sweep.

    Returns:
        Manifest dict with dataset, output_path and row_count

    """
    base = HamiltonianParams(
        CROSSING_SCAN["epsilon"] * omega, CROSSING_SCAN["beta"] * omega, 0.0, omega
    )
    found = locate_crossings(base, _grid(CROSSING_SCAN["alpha"]) * omega, threads=threads)
    log_info(
        "Crossing scan complete",
        context={"minima": len(found), "exact": sum(c.kind == "exact" for c in found)},
    )
    return _write(crossings_frame(found, omega), output_dir, "crossings", base.in_omega_units())


@task(name="verify_table_coefficients", tags=["compute"])
def verify_table_coefficients(
    output_dir: str, n_points: int = TABLE_RANDOM_POINTS, seed: int = TABLE_SEED
) -> dict:
    """Recurrence coefficients vs. tabulated closed forms at random parameters.

    Returns:
        Manifest dict with dataset, output_path and row_count

    """
    rng = np.random.default_rng(seed)
    records: list[dict[str, Any]] = []
    for _ in range(n_points):
        alpha, beta, omega = rng.uniform(0.5, 3.0), rng.uniform(0.3, 3.0), rng.uniform(0.5, 2.0)
        for n in range(TABLE_MAX_N + 1):
            for row in compare_with_table(HamiltonianParams(n * omega, beta, alpha, omega)):
                records.append(
                    {
                        "alpha": alpha,
                        "beta": beta,
                        "omega": omega,
                        "n": row.n,
                        "k": row.k,
                        "coeff": row.name,
                        "recurrence": row.recurrence,
                        "reference": row.reference,
                        "rel_error": row.rel_error,
                    }
                )
    return _write(pl.DataFrame(records), output_dir, "table", {"seed": seed, "points": n_points})


@flow(name="reproduction_pipeline")
def reproduction_pipeline(
    output_dir: str = str(DEFAULT_OUTPUT_DIR),
    datasets: list[str] | None = None,
    omega: float = 1.0,
    threads: int | None = None,
    fail_on_violation: bool = True,
) -> dict:
    """Regenerate and validate the reference datasets.

    Args:
        output_dir: Destination directory or gs:// / s3:// prefix
        datasets: Subset of ALL_DATASETS (default: all)
        omega: Driving frequency used for the absolute energies
        threads: Worker count for the grid evaluations
        fail_on_violation: Raise when any validation fails (else warn)

    Returns:
        Dict with manifests and validation results keyed by dataset

    """
    selected = list(datasets or ALL_DATASETS)
    unknown = sorted(set(selected) - set(ALL_DATASETS))
    if unknown:
        log_error("Unknown datasets requested", context={"unknown": unknown})

    log_info("Starting reproduction pipeline", context={"datasets": selected, "output": output_dir})

    manifests: dict[str, dict] = {}
    validations: dict[str, dict] = {}
    for dataset in selected:
        if dataset == "splitting_map":
            manifest = compute_splitting_map(output_dir, omega, threads)
            validation = validate_splitting_map(manifest)
        elif dataset in SPECTRA:
            manifest = compute_spectrum(dataset, output_dir, omega, threads)
            validation = validate_spectrum(manifest)
        elif dataset == "crossings":
            manifest = scan_crossings(output_dir, omega, threads)
            validation = validate_crossings(manifest)
        else:
            manifest = verify_table_coefficients(output_dir)
            validation = validate_table(manifest)
        manifests[dataset] = manifest
        validations[dataset] = validation

        if not validation["is_valid"]:
            notify = log_error if fail_on_violation else log_warning
            notify(
                f"Validation failed for {dataset}",
                context={"anomalies": validation["anomalies"]},
            )

    log_info(
        "Reproduction pipeline complete",
        context={
            "datasets": len(manifests),
            "failed": sum(not v["is_valid"] for v in validations.values()),
        },
    )
    return {"manifests": manifests, "validations": validations}


if __name__ == "__main__":
    result = reproduction_pipeline(datasets=["table", "crossings"])

    print("\n" + "=" * 70)
    print("Reproduction Pipeline Result")
    print("=" * 70)
    for name, validation in result["validations"].items():
        status = "PASS" if validation["is_valid"] else "FAIL"
        print(f"{name}: {status} ({result['manifests'][name]['output_path']})")
    print("=" * 70)
