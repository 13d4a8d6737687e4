"""Prefect flows that regenerate the reference datasets."""
