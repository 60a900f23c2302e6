"""Outlier-robust MLP regression: trimmed loss + higher-order variation regularisation."""
