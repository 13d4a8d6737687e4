"""Shared helpers for Prefect flows."""
