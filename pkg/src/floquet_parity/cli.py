"""Command-line front end.

Usage:
    floquet-parity spectrum --epsilon 1 --beta 2.7 --alpha 0:8:400 -o eps1.csv
    floquet-parity splitting-map --beta 1.3 --epsilon 0:4.5:200 --alpha 0:6:200 -o map.csv
    floquet-parity parity --epsilon 1 --beta 2.7 --alpha 2
    floquet-parity crossings --epsilon 1 --beta 2.7 --alpha 0:8:400 --format json
    floquet-parity verify-table --n 2 --alpha 1.5 --beta 0.7
    floquet-parity q-operator --epsilon 1 --beta 2.7 --alpha 2 -o q.json

Energies are given in units of omega unless ``--units absolute``. Ranges use
``lo:hi:npoints`` with inclusive endpoints. Exit codes: 0 success, 2 usage,
3 convergence, 4 verification mismatch.
"""

from __future__ import annotations

import functools
import logging
from collections.abc import Callable
from pathlib import Path
from typing import Any, TypeVar

import click
import numpy as np
import polars as pl
from click.core import ParameterSource
from dotenv import load_dotenv
from numpy.typing import NDArray
from rich.console import Console
from rich.table import Table

from .config import SCHEMA_VERSION, read_params_mapping
from .crossings import crossings_frame, crossings_payload, locate_crossings
from .errors import (
    DegenerateSymmetryError,
    FloquetError,
    ParameterError,
    SymmetryNotDetectedError,
)
from .model import HamiltonianParams
from .sambe import representatives, splitting_map
from .storage import (
    ensure_writable,
    frame_to_csv_text,
    payload_to_json_text,
    write_meta_sidecar,
    write_output,
)
from .symmetry_analytic import (
    TABLE_MAX_N,
    TABLE_TOL,
    analytic_identity_residuals,
    analytic_q,
    check_table,
    compare_with_table,
    eom_residual,
)
from .symmetry_numeric import (
    assign_parities,
    classify_spectrum,
    parity_hilbert,
    parity_sambe,
    series_payload,
    solve_parities,
)

logger = logging.getLogger(__name__)

F = TypeVar("F", bound=Callable[..., Any])

FORMATS = ("csv", "json", "parquet")


class GridRange(click.ParamType):
    """``lo:hi:npoints`` (inclusive) or a single number."""

    name = "lo:hi:n"

    def convert(
        self, value: Any, param: click.Parameter | None, ctx: click.Context | None
    ) -> NDArray[np.float64]:
        if isinstance(value, np.ndarray):
            return value
        parts = str(value).split(":")
        try:
            if len(parts) == 1:
                return np.array([float(parts[0])])
            if len(parts) != 3:
                raise ValueError("expected lo:hi:npoints")
            lo, hi, count = float(parts[0]), float(parts[1]), int(parts[2])
        except ValueError as e:
            self.fail(f"{value!r} is not a valid range ({e})", param, ctx)
        if count < 1:
            self.fail(f"{value!r}: npoints must be >= 1", param, ctx)
        if hi < lo:
            self.fail(f"{value!r}: hi must be >= lo", param, ctx)
        if count == 1 and hi != lo:
            self.fail(f"{value!r}: a single point needs lo == hi", param, ctx)
        return np.linspace(lo, hi, count)


GRID = GridRange()


def _handle_errors(func: F) -> F:
    """Map FloquetError subclasses onto their exit codes."""

    @functools.wraps(func)
    def wrapper(*args: Any, **kwargs: Any) -> Any:
        try:
            return func(*args, **kwargs)
        except FloquetError as e:
            click.echo(f"error: {e}", err=True)
            raise SystemExit(e.exit_code) from e

    return wrapper  # type: ignore[return-value]


def _energy_options(
    epsilon: str, beta: str, alpha: str, epsilon_type: Any = float, alpha_type: Any = float
) -> Callable[[F], F]:
    """Shared --epsilon/--beta/--alpha/--omega/--units/--config options."""

    def decorate(func: F) -> F:
        options = [
            click.option(
                "--epsilon", type=epsilon_type, default=epsilon, show_default=True,
                help="Detuning",
            ),
            click.option("--beta", type=float, default=beta, show_default=True, help="Tunneling"),
            click.option(
                "--alpha", type=alpha_type, default=alpha, show_default=True,
                help="Driving amplitude",
            ),
            click.option(
                "--omega", type=float, default=1.0, show_default=True, help="Driving frequency"
            ),
            click.option(
                "--units",
                type=click.Choice(["omega", "absolute"]),
                default="omega",
                show_default=True,
                help="Interpret energies in units of omega or as absolute values",
            ),
            click.option(
                "--config",
                "config_path",
                type=click.Path(exists=True, dir_okay=False, path_type=Path),
                default=None,
                help="YAML / key=value file; explicit flags take precedence",
            ),
        ]
        for option in reversed(options):
            func = option(func)
        return func

    return decorate


def _output_options(func: F) -> F:
    func = click.option(
        "--format", "fmt", type=click.Choice(FORMATS), default="csv", show_default=True
    )(func)
    func = click.option(
        "--output", "-o", default="-", show_default=True, help="Output path or URI; '-' = stdout"
    )(func)
    return func


def _numeric_options(func: F) -> F:
    func = click.option("--threads", type=int, default=None, help="Worker count")(func)
    func = click.option(
        "--K", "k_cutoff", type=int, default=None, help="Sideband cutoff (default from parameters)"
    )(func)
    return func


def _resolve_energies(
    ctx: click.Context, values: dict[str, Any], config_path: Path | None, units: str
) -> tuple[dict[str, Any], float]:
    """Merge config-file values under explicit flags; return values in absolute units.

    Config files are already resolved to absolute units by read_params_mapping;
    only values given on the command line are scaled by ``--units``.
    """
    from_file: dict[str, Any] = {}
    if config_path is not None:
        from_file = read_params_mapping(config_path)

    def from_flag(key: str) -> bool:
        return not from_file or ctx.get_parameter_source(key) != ParameterSource.DEFAULT

    omega = float(values["omega"] if from_flag("omega") else from_file["omega"])
    scale = omega if units == "omega" else 1.0
    merged: dict[str, Any] = {"omega": omega}
    for key in ("epsilon", "beta", "alpha"):
        if from_flag(key):
            merged[key] = np.asarray(values[key], dtype=float) * scale
        else:
            merged[key] = np.asarray(from_file[key], dtype=float)
    return merged, omega


def _emit(
    output: str,
    fmt: str,
    command: str,
    params_meta: dict[str, Any],
    *,
    frame: pl.DataFrame | None = None,
    payload: dict[str, Any] | None = None,
) -> None:
    if output == "-":
        if fmt == "json" and payload is not None:
            click.echo(payload_to_json_text(payload), nl=False)
        elif fmt == "csv" and frame is not None:
            click.echo(frame_to_csv_text(frame), nl=False)
        else:
            raise ParameterError(f"Format {fmt!r} cannot be written to stdout")
        return
    write_output(output, fmt, frame=frame, payload=payload)
    write_meta_sidecar(output, command, params_meta)
    logger.info("Wrote %s", output)


def _precheck(output: str, fmt: str) -> None:
    if output == "-":
        if fmt == "parquet":
            raise ParameterError("Parquet output needs --output PATH")
        return
    ensure_writable(output)


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.option(
    "--log-level",
    type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR"], case_sensitive=False),
    default="WARNING",
    show_default=True,
)
def cli(log_level: str) -> None:
    """Floquet spectra and hidden time-nonlocal parity of the driven two-level system."""
    load_dotenv()
    logging.basicConfig(
        level=getattr(logging, log_level.upper()),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


@cli.command("spectrum")
@_energy_options("1.0", "2.7", "0:8:400", alpha_type=GRID)
@_numeric_options
@_output_options
@click.pass_context
@_handle_errors
def cmd_spectrum(
    ctx: click.Context,
    epsilon: float,
    beta: float,
    alpha: NDArray[np.float64],
    omega: float,
    units: str,
    config_path: Path | None,
    k_cutoff: int | None,
    threads: int | None,
    output: str,
    fmt: str,
) -> None:
    """Quasienergies and parities over an alpha sweep, three Brillouin zones."""
    _precheck(output, fmt)
    values, omega = _resolve_energies(
        ctx, {"epsilon": epsilon, "beta": beta, "alpha": alpha, "omega": omega}, config_path, units
    )
    alphas = np.atleast_1d(values["alpha"])
    base = HamiltonianParams(
        float(values["epsilon"]), float(values["beta"]), float(alphas[0]), omega
    )
    table = classify_spectrum(base, alphas, k_cutoff, threads=threads)

    detected = any(point.method != "none" for point in table.points)
    if not detected:
        click.echo("note: no time-nonlocal symmetry detected; parity column left empty", err=True)
    payload = {**table.to_payload(), "status": "detected" if detected else "none"}
    _emit(output, fmt, "spectrum", base.in_omega_units(), frame=table.to_frame(), payload=payload)


@cli.command("splitting-map")
@_energy_options("0:4.5:200", "1.3", "0:6:200", epsilon_type=GRID, alpha_type=GRID)
@_numeric_options
@_output_options
@click.pass_context
@_handle_errors
def cmd_splitting_map(
    ctx: click.Context,
    epsilon: NDArray[np.float64],
    beta: float,
    alpha: NDArray[np.float64],
    omega: float,
    units: str,
    config_path: Path | None,
    k_cutoff: int | None,
    threads: int | None,
    output: str,
    fmt: str,
) -> None:
    """Minimal quasienergy splitting over an (epsilon, alpha) grid."""
    _precheck(output, fmt)
    values, omega = _resolve_energies(
        ctx, {"epsilon": epsilon, "beta": beta, "alpha": alpha, "omega": omega}, config_path, units
    )
    epsilons = np.atleast_1d(values["epsilon"])
    alphas = np.atleast_1d(values["alpha"])
    base = HamiltonianParams(float(epsilons[0]), float(values["beta"]), float(alphas[0]), omega)
    grid = splitting_map(base, epsilons, alphas, k_cutoff, threads=threads)
    meta = {"beta/omega": base.beta / omega, "omega": omega}
    _emit(output, fmt, "splitting-map", meta, frame=grid.to_frame(), payload=grid.to_payload())


@cli.command("parity")
@_energy_options("1.0", "2.7", "2.0")
@_numeric_options
@_output_options
@click.option(
    "--time",
    "times",
    type=float,
    multiple=True,
    default=(0.0,),
    show_default=True,
    help="Evaluation times in units of the period (repeatable)",
)
@click.pass_context
@_handle_errors
def cmd_parity(
    ctx: click.Context,
    epsilon: float,
    beta: float,
    alpha: float,
    omega: float,
    units: str,
    config_path: Path | None,
    k_cutoff: int | None,
    threads: int | None,
    output: str,
    fmt: str,
    times: tuple[float, ...],
) -> None:
    """Parities of the two representatives at one parameter point."""
    _precheck(output, fmt)
    values, omega = _resolve_energies(
        ctx, {"epsilon": epsilon, "beta": beta, "alpha": alpha, "omega": omega}, config_path, units
    )
    params = HamiltonianParams(
        float(values["epsilon"]), float(values["beta"]), float(values["alpha"]), omega
    )
    reps = representatives(params, k_cutoff)
    rows: list[dict[str, Any]] = []
    try:
        assignment = assign_parities(params, reps, k_cutoff)
    except (SymmetryNotDetectedError, DegenerateSymmetryError) as e:
        click.echo(f"note: {e}", err=True)
        status, method, solution = "none", "none", None
        for nu, mode in enumerate(reps):
            rows.append({"mode": nu, "quasienergy/omega": mode.quasienergy / omega})
    else:
        status, method, solution = "detected", assignment.method, assignment.solution
        q_series = assignment.q_series
        for nu, mode in enumerate(assignment.modes):
            row: dict[str, Any] = {
                "mode": nu,
                "quasienergy/omega": mode.quasienergy / omega,
                "parity": mode.parity,
                "parity_sambe": parity_sambe(mode, q_series),
            }
            for fraction in times:
                row[f"parity_hilbert@{fraction:g}T"] = parity_hilbert(
                    mode, q_series, fraction * params.period
                )
            rows.append(row)

    payload = {
        "schema_version": SCHEMA_VERSION,
        "status": status,
        "method": method,
        "params": params.in_omega_units(),
        "modes": rows,
        "solution": None if solution is None else solution.to_payload(),
    }
    _emit(output, fmt, "parity", params.in_omega_units(), frame=pl.DataFrame(rows), payload=payload)


@cli.command("crossings")
@_energy_options("1.0", "2.7", "0:8:400", alpha_type=GRID)
@_numeric_options
@_output_options
@click.pass_context
@_handle_errors
def cmd_crossings(
    ctx: click.Context,
    epsilon: float,
    beta: float,
    alpha: NDArray[np.float64],
    omega: float,
    units: str,
    config_path: Path | None,
    k_cutoff: int | None,
    threads: int | None,
    output: str,
    fmt: str,
) -> None:
    """Refined exact and avoided crossings along an alpha sweep."""
    _precheck(output, fmt)
    values, omega = _resolve_energies(
        ctx, {"epsilon": epsilon, "beta": beta, "alpha": alpha, "omega": omega}, config_path, units
    )
    alphas = np.atleast_1d(values["alpha"])
    base = HamiltonianParams(
        float(values["epsilon"]), float(values["beta"]), float(alphas[0]), omega
    )
    found = locate_crossings(base, alphas, k_cutoff, threads=threads)
    _emit(
        output,
        fmt,
        "crossings",
        base.in_omega_units(),
        frame=crossings_frame(found, omega),
        payload=crossings_payload(found, base),
    )


@cli.command("verify-table")
@click.option(
    "--n", "orders", type=click.IntRange(0, TABLE_MAX_N), multiple=True, default=(0, 1, 2, 3, 4),
    show_default=True,
)
@click.option("--alpha", type=float, default=1.5, show_default=True)
@click.option("--beta", type=float, default=0.7, show_default=True)
@click.option("--omega", type=float, default=1.0, show_default=True)
@click.option("--random", "n_random", type=int, default=0, show_default=True,
              help="Additional random (alpha, beta, omega) points")
@click.option("--seed", type=int, default=0, show_default=True)
@_handle_errors
def cmd_verify_table(
    orders: tuple[int, ...],
    alpha: float,
    beta: float,
    omega: float,
    n_random: int,
    seed: int,
) -> None:
    """Compare the recurrence with the tabulated coefficients (exit 4 on mismatch)."""
    rng = np.random.default_rng(seed)
    points = [(alpha, beta, omega)] + [
        (float(rng.uniform(0.5, 3.0)), float(rng.uniform(0.3, 3.0)), float(rng.uniform(0.5, 2.0)))
        for _ in range(n_random)
    ]

    table = Table(title="Recurrence vs. tabulated coefficients")
    for column in ("n", "k", "coeff", "recurrence", "table", "rel. error", ""):
        table.add_column(column, justify="right")
    worst = 0.0
    checks: list[HamiltonianParams] = []
    for a, b, w in points:
        for n in orders:
            params = HamiltonianParams(n * w, b, a, w)
            checks.append(params)
            for row in compare_with_table(params):
                worst = max(worst, row.rel_error)
                verdict = "PASS" if row.rel_error <= TABLE_TOL else "FAIL"
                table.add_row(
                    str(row.n), str(row.k), row.name, f"{row.recurrence:.12g}",
                    f"{row.reference:.12g}", f"{row.rel_error:.2e}", verdict,
                )
    console = Console()
    console.print(table)
    console.print(f"max relative error: {worst:.3e} (tolerance {TABLE_TOL:g})")
    for params in checks:
        check_table(params)
    console.print("PASS")


@cli.command("q-operator")
@_energy_options("1.0", "2.7", "2.0")
@_numeric_options
@_output_options
@click.option(
    "--analytic-max-n", type=int, default=TABLE_MAX_N, show_default=True,
    help="Largest n for which the closed form is also emitted",
)
@click.pass_context
@_handle_errors
def cmd_q_operator(
    ctx: click.Context,
    epsilon: float,
    beta: float,
    alpha: float,
    omega: float,
    units: str,
    config_path: Path | None,
    k_cutoff: int | None,
    threads: int | None,
    output: str,
    fmt: str,
    analytic_max_n: int,
) -> None:
    """Analytic and numeric Q_k with identity residuals."""
    _precheck(output, fmt)
    values, omega = _resolve_energies(
        ctx, {"epsilon": epsilon, "beta": beta, "alpha": alpha, "omega": omega}, config_path, units
    )
    params = HamiltonianParams(
        float(values["epsilon"]), float(values["beta"]), float(values["alpha"]), omega
    )
    payload: dict[str, Any] = {
        "schema_version": SCHEMA_VERSION,
        "params": params.in_omega_units(),
        "n": params.n,
    }
    long_rows: list[dict[str, Any]] = []

    def add_series(source: str, series: Any) -> None:
        for k, coefficient in zip(series.ks, series.coefficients, strict=True):
            for (a, b), z in np.ndenumerate(coefficient):
                long_rows.append(
                    {"source": source, "k": int(k), "row": a, "col": b,
                     "re": float(z.real), "im": float(z.imag)}
                )

    analytic = None
    if params.n is not None and params.n <= analytic_max_n and (params.alpha > 0 or params.n == 0):
        analytic = analytic_q(params)
        payload["analytic"] = {
            "q_k": series_payload(analytic),
            "identities": analytic_identity_residuals(analytic),
            "eom_residual": eom_residual(analytic, params),
        }
        add_series("analytic", analytic)

    try:
        solution = solve_parities(representatives(params, k_cutoff))
    except (SymmetryNotDetectedError, DegenerateSymmetryError) as e:
        click.echo(f"note: {e}", err=True)
        payload["status"] = "none"
    else:
        payload["status"] = "detected"
        payload["numeric"] = {
            **solution.to_payload(),
            "identities": analytic_identity_residuals(solution.q_series),
            "eom_residual": eom_residual(solution.q_series, params),
        }
        add_series("numeric", solution.q_series)
        if analytic is not None:
            payload["max_abs_difference"] = analytic.max_abs_difference(solution.q_series)

    frame = pl.DataFrame(
        long_rows,
        schema={"source": pl.Utf8, "k": pl.Int64, "row": pl.Int64, "col": pl.Int64,
                "re": pl.Float64, "im": pl.Float64},
    )
    _emit(output, fmt, "q-operator", params.in_omega_units(), frame=frame, payload=payload)


def main() -> None:
    """Console-script entry point."""
    cli(prog_name="floquet-parity")


if __name__ == "__main__":
    main()
