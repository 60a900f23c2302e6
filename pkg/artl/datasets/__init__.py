"""Synthetic surfaces, UCI benchmark ingestion, splits and dataset CSV I/O."""
