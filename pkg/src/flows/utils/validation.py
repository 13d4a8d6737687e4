"""Dataset checks for the reproduction flow.

Every task takes the manifest written by a producing task (``output_path``,
``dataset``), reads the CSV back with polars and returns a result dict with
``is_valid`` and a list of human-readable ``anomalies``.
"""

from __future__ import annotations

from typing import Any

import polars as pl
from prefect import task

from flows.config import MIN_EXACT_CROSSINGS, SMALL_ALPHA_CUTOFF, TOLERANCES


def _read(manifest: dict[str, Any]) -> pl.DataFrame:
    return pl.read_csv(manifest["output_path"], infer_schema_length=None)


@task(name="validate_splitting_map", tags=["validation"])
def validate_splitting_map(manifest: dict[str, Any], max_n: int = 4) -> dict[str, Any]:
    """Check that splitting minima collapse only along integer detuning.

    When the manifest carries ``minima_path`` (refined minima written by
    compute_splitting_map), an integer column's minimum is the smaller of
    its grid minimum and its refined minima.

    Args:
        manifest: Manifest of the splitting-map CSV (omega units)
        max_n: Largest integer column checked

    Returns:
        Dict with per-n column minima, midpoint minima and anomalies

    """
    frame = _read(manifest)
    refined = None
    if manifest.get("minima_path"):
        refined = pl.read_csv(manifest["minima_path"], infer_schema_length=None)
    if refined is not None and refined.is_empty():
        refined = None
    tol_int = TOLERANCES["integer_column_min"]
    tol_off = TOLERANCES["off_integer_min"]
    anomalies: list[str] = []

    def column(source: pl.DataFrame, eps: float) -> pl.DataFrame:
        return source.filter((pl.col("epsilon/omega") - eps).abs() < 1e-9)

    integer_minima: dict[int, float | None] = {}
    for n in range(1, max_n + 1):
        values = column(frame, float(n))
        if values.is_empty():
            integer_minima[n] = None
            anomalies.append(f"No column at epsilon/omega={n}")
            continue
        minimum = float(values["splitting/omega"].min())  # type: ignore[arg-type]
        if refined is not None and not (points := column(refined, float(n))).is_empty():
            minimum = min(minimum, float(points["splitting/omega"].min()))  # type: ignore[arg-type]
        integer_minima[n] = minimum
        if minimum > tol_int:
            anomalies.append(f"Column epsilon/omega={n} never closes (min {minimum:.3e})")

    midpoint_minima: dict[float, float | None] = {}
    for n in range(max_n + 1):
        eps = n + 0.5
        values = column(frame, eps).filter(pl.col("alpha/omega") >= SMALL_ALPHA_CUTOFF)
        if values.is_empty():
            midpoint_minima[eps] = None
            continue
        minimum = float(values["splitting/omega"].min())  # type: ignore[arg-type]
        midpoint_minima[eps] = minimum
        if minimum < tol_off:
            anomalies.append(f"Off-integer column epsilon/omega={eps} closes (min {minimum:.3e})")

    return {
        "dataset": manifest["dataset"],
        "is_valid": not anomalies,
        "anomalies": anomalies,
        "integer_minima": integer_minima,
        "midpoint_minima": midpoint_minima,
    }


@task(name="validate_spectrum", tags=["validation"])
def validate_spectrum(manifest: dict[str, Any]) -> dict[str, Any]:
    """Check parity labels and the alternation between neighboring zones.

    Returns:
        Dict with labeled/unlabeled row counts, checked zone pairs and anomalies

    """
    frame = _read(manifest)
    anomalies: list[str] = []

    labeled = frame.filter(pl.col("parity").is_not_null())
    bad_values = labeled.filter(pl.col("parity").abs() != 1.0)
    if bad_values.height:
        anomalies.append(f"{bad_values.height} parity values are not +-1")

    key = (pl.col("quasienergy/omega") - pl.col("zone_index")).round(6).alias("key")
    # degenerate pairs share a key and cannot be matched across zones
    base = labeled.with_columns(key).filter(
        pl.len().over(["alpha/omega", "zone_index", "key"]) == 1
    )
    pairs = base.join(
        base.with_columns(pl.col("zone_index") - 1),
        on=["alpha/omega", "zone_index", "key"],
        suffix="_next",
    )
    same = pairs.filter(pl.col("parity") == pl.col("parity_next"))
    if same.height:
        anomalies.append(f"{same.height} neighboring-zone copies share a parity")

    return {
        "dataset": manifest["dataset"],
        "is_valid": not anomalies,
        "anomalies": anomalies,
        "labeled_rows": labeled.height,
        "unlabeled_rows": frame.height - labeled.height,
        "zone_pairs_checked": pairs.height,
    }


@task(name="validate_crossings", tags=["validation"])
def validate_crossings(manifest: dict[str, Any]) -> dict[str, Any]:
    """Check exact crossings are opposite-parity and some approach is avoided.

    Returns:
        Dict with exact/avoided counts, the widest same-parity gap and anomalies

    """
    frame = _read(manifest)
    anomalies: list[str] = []

    exact = frame.filter(
        (pl.col("kind") == "exact")
        & (pl.col("splitting/omega") <= TOLERANCES["exact_crossing"])
    )
    if exact.height < MIN_EXACT_CROSSINGS:
        anomalies.append(f"Only {exact.height} exact crossings (expected >= {MIN_EXACT_CROSSINGS})")
    if exact.filter(pl.col("opposite_parity") != True).height:  # noqa: E712
        anomalies.append("Exact crossing between modes of equal parity")

    same_parity = frame.filter(pl.col("opposite_parity") == False)  # noqa: E712
    widest = 0.0
    if same_parity.height:
        widest = float(same_parity["splitting/omega"].max())  # type: ignore[arg-type]
    if widest <= TOLERANCES["avoided_gap"]:
        anomalies.append(f"No same-parity approach stays open (widest gap {widest:.3e})")

    return {
        "dataset": manifest["dataset"],
        "is_valid": not anomalies,
        "anomalies": anomalies,
        "exact_count": exact.height,
        "avoided_count": frame.height - exact.height,
        "widest_same_parity_gap": widest,
    }


@task(name="validate_table", tags=["validation"])
def validate_table(manifest: dict[str, Any]) -> dict[str, Any]:
    """Check every recurrence coefficient against the tabulated closed forms.

    Returns:
        Dict with the worst relative error, its (n, k) and anomalies

    """
    frame = _read(manifest)
    tol = TOLERANCES["table_rel_error"]
    worst = frame.sort("rel_error", descending=True).row(0, named=True)
    failing = frame.filter(pl.col("rel_error") > tol)
    anomalies = [
        f"n={row['n']} k={row['k']} {row['coeff']}: rel. error {row['rel_error']:.3e}"
        for row in failing.iter_rows(named=True)
    ]
    return {
        "dataset": manifest["dataset"],
        "is_valid": not anomalies,
        "anomalies": anomalies,
        "max_rel_error": float(worst["rel_error"]),
        "worst": {"n": worst["n"], "k": worst["k"], "coeff": worst["coeff"]},
    }
