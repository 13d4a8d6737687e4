"""Output writers for local paths and remote URIs.

Provides a thin wrapper around PyArrow's filesystem API so callers can
write CSV, JSON, Parquet and the ``_meta.json`` provenance sidecar to either
local paths or ``gs://``/``s3://`` URIs without branching.

Data payloads never carry timestamps; provenance (asof_datetime, command,
parameters, package version) lives in the sidecar only, so identical runs
produce bit-identical data files.
"""

from __future__ import annotations

import json
import logging
import os
from datetime import UTC, datetime
from importlib import metadata
from pathlib import Path
from typing import Any

import polars as pl
import pyarrow.parquet as pq
from pyarrow import fs as pafs

from .errors import ParameterError

logger = logging.getLogger(__name__)

_REMOTE_SCHEMES = ("gs://", "s3://")


def is_remote_uri(uri: str) -> bool:
    """Return True if `uri` points at an object store (gs:// or s3://)."""
    return isinstance(uri, str) and uri.strip().lower().startswith(_REMOTE_SCHEMES)


def _normalize_uri(uri: str) -> str:
    """Return absolute POSIX path for local URIs; leave remote URIs untouched."""
    if is_remote_uri(uri):
        return uri
    return Path(uri).expanduser().resolve().as_posix()


def _ensure_local_dir_for_uri(uri: str) -> None:
    """Create parent directories for a local destination."""
    if not is_remote_uri(uri):
        Path(uri).expanduser().resolve().parent.mkdir(parents=True, exist_ok=True)


def _filesystem_and_path(uri: str) -> tuple[pafs.FileSystem, str]:
    """Return PyArrow filesystem + normalized path for the given URI."""
    return pafs.FileSystem.from_uri(_normalize_uri(uri))


def ensure_writable(dest_uri: str) -> None:
    """Fail early when a local destination cannot be written.

    Raises:
        ParameterError: If the parent directory cannot be created or written

    """
    if is_remote_uri(dest_uri):
        return
    target = Path(dest_uri).expanduser().resolve()
    try:
        target.parent.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise ParameterError(f"Cannot create output directory {target.parent}: {e}") from e
    if target.is_dir():
        raise ParameterError(f"Output path {target} is a directory")
    probe = target if target.exists() else target.parent
    if not os.access(probe, os.W_OK):
        raise ParameterError(f"Output path {target} is not writable")


def write_text_any(text: str, dest_uri: str) -> str:
    """Write a text file at `dest_uri` using PyArrow FS. Returns `dest_uri`."""
    _ensure_local_dir_for_uri(dest_uri)
    filesystem, normalized_path = _filesystem_and_path(dest_uri)
    with filesystem.open_output_stream(normalized_path) as out:
        out.write(text.encode("utf-8"))
    return dest_uri


def format_float(value: float) -> str:
    """Round-trip float formatting used in every CSV."""
    return format(value, ".17g")


def frame_to_csv_text(frame: pl.DataFrame) -> str:
    """Render a frame as CSV with floats formatted ``.17g`` and nulls empty."""
    float_columns = [name for name, dtype in frame.schema.items() if dtype.is_float()]
    rendered = frame.with_columns(
        pl.col(name).map_elements(format_float, return_dtype=pl.Utf8) for name in float_columns
    )
    return rendered.write_csv(null_value="")


def write_csv_any(frame: pl.DataFrame, dest_uri: str) -> str:
    """Write a Polars frame as ``.17g`` CSV to a local path or URI."""
    return write_text_any(frame_to_csv_text(frame), dest_uri)


def payload_to_json_text(payload: dict[str, Any]) -> str:
    """Deterministic JSON: sorted keys, two-space indent, no NaN/inf."""
    return json.dumps(payload, indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_json_any(payload: dict[str, Any], dest_uri: str) -> str:
    """Write a JSON payload to a local path or URI."""
    return write_text_any(payload_to_json_text(payload), dest_uri)


def write_parquet_any(frame: pl.DataFrame, dest_uri: str) -> str:
    """Write a Polars frame to Parquet at `dest_uri` (local or remote)."""
    _ensure_local_dir_for_uri(dest_uri)
    filesystem, normalized_path = _filesystem_and_path(dest_uri)
    pq.write_table(frame.to_arrow(), normalized_path, filesystem=filesystem)
    return dest_uri


def sidecar_uri(dest_uri: str) -> str:
    """Return the ``_meta.json`` path next to an output file."""
    stem, dot, suffix = dest_uri.rpartition(".")
    base = stem if dot and "/" not in suffix else dest_uri
    return f"{base}_meta.json"


def _package_version() -> str:
    try:
        return metadata.version("floquet-parity")
    except metadata.PackageNotFoundError:
        return "unknown"


def write_meta_sidecar(
    dest_uri: str, command: str, params: dict[str, Any], extra: dict[str, Any] | None = None
) -> str:
    """Write provenance for `dest_uri` into its ``_meta.json`` sidecar."""
    meta = {
        "command": command,
        "asof_datetime": datetime.now(UTC).isoformat(),
        "package_version": _package_version(),
        "params": params,
        "output": dest_uri,
        **(extra or {}),
    }
    meta_uri = sidecar_uri(dest_uri)
    write_text_any(json.dumps(meta, indent=2, sort_keys=True), meta_uri)
    logger.debug("Wrote sidecar %s", meta_uri)
    return meta_uri


def write_output(
    dest_uri: str,
    fmt: str,
    *,
    frame: pl.DataFrame | None = None,
    payload: dict[str, Any] | None = None,
) -> str:
    """Dispatch on format: csv/parquet take the frame, json takes the payload.

    Raises:
        ParameterError: If the format is unknown or its input is missing

    """
    if fmt == "csv" and frame is not None:
        return write_csv_any(frame, dest_uri)
    if fmt == "parquet" and frame is not None:
        return write_parquet_any(frame, dest_uri)
    if fmt == "json" and payload is not None:
        return write_json_any(payload, dest_uri)
    raise ParameterError(f"Cannot write format {fmt!r} for this output")
