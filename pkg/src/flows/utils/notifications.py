"""Notification tasks for the reproduction flow."""

from __future__ import annotations

import logging
from typing import Any

from prefect import task
from rich.console import Console

logger = logging.getLogger(__name__)

_console = Console(stderr=True)


def _format(level: str, message: str, context: dict[str, Any] | None) -> str:
    log_msg = f"{level}: {message}"
    if context:
        log_msg += f" | Context: {context}"
    return log_msg


@task(name="log_warning")
def log_warning(message: str, context: dict[str, Any] | None = None) -> None:
    """Log a warning with optional context.

    Args:
        message: Warning message
        context: Optional context dictionary (parameters, tolerances)

    """
    log_msg = _format("WARNING", message, context)
    logger.warning(log_msg)
    _console.print(f"[yellow]{log_msg}[/yellow]", highlight=False)


@task(name="log_error")
def log_error(message: str, context: dict[str, Any] | None = None) -> None:
    """Log an error and fail the flow.

    Args:
        message: Error message
        context: Optional context dictionary

    Raises:
        RuntimeError: Always raises to fail the flow

    """
    log_msg = _format("ERROR", message, context)
    logger.error(log_msg)
    _console.print(f"[red]{log_msg}[/red]", highlight=False)
    raise RuntimeError(log_msg)


@task(name="log_info")
def log_info(message: str, context: dict[str, Any] | None = None) -> None:
    """Log progress with optional context."""
    log_msg = _format("INFO", message, context)
    logger.info(log_msg)
    _console.print(log_msg, highlight=False)
