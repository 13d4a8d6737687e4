"""Tests for the reproduction flow tasks and dataset checks."""
