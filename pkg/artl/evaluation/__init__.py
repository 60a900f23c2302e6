"""Test-set metrics, robust validation, correlations and the breakdown stress test."""
