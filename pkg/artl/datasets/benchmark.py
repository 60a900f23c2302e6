"""UCI regression benchmarks read from user-supplied CSV files."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd
from sklearn.preprocessing import StandardScaler

from artl.errors import EmptyDataError, InvalidConfigError, SchemaError
from data_models.architecture import DomainBox
from data_models.dataset import Dataset

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class BenchmarkSpec:
    drop_columns: tuple[str, ...]
    target_column: str
    expected_n: int
    expected_j: int


BENCHMARKS = {
    "auto_mpg": BenchmarkSpec(
        drop_columns=("origin", "car_name", "horsepower"),
        target_column="mpg",
        expected_n=398,
        expected_j=5,
    ),
    "liver_disorders": BenchmarkSpec(
        drop_columns=("selector",),
        target_column="drinks",
        expected_n=345,
        expected_j=5,
    ),
    "real_estate": BenchmarkSpec(
        drop_columns=("No", "X1 transaction date", "X5 latitude", "X6 longitude"),
        target_column="Y house price of unit area",
        expected_n=414,
        expected_j=3,
    ),
}


def load_benchmark(
    csv_path: str | Path,
    drop_columns: list[str] | tuple[str, ...],
    target_column: str,
    name: str | None = None,
) -> Dataset:
    """Read, drop columns, keep all-numeric rows, standardise covariates and target."""
    csv_path = Path(csv_path)
    df = pd.read_csv(csv_path, encoding="utf-8", skipinitialspace=True)
    df.columns = [str(c).strip() for c in df.columns]
    if target_column not in df.columns:
        raise SchemaError(f"Target column {target_column!r} not found in {csv_path.name} (columns: {list(df.columns)})")

    absent = [c for c in drop_columns if c not in df.columns]
    if absent:
        logger.warning("Columns to drop not present in %s: %s", csv_path.name, absent)
    df = df.drop(columns=[c for c in drop_columns if c in df.columns])

    numeric = df.apply(pd.to_numeric, errors="coerce")
    kept = numeric.dropna()
    if len(kept) < len(numeric):
        logger.info("Dropped %d rows with non-numeric cells from %s", len(numeric) - len(kept), csv_path.name)
    if kept.empty or kept.shape[1] < 2:
        raise EmptyDataError(f"No usable rows or covariates left in {csv_path.name}")

    y_raw = kept[target_column].to_numpy(dtype=np.float64)
    X_raw = kept.drop(columns=[target_column]).to_numpy(dtype=np.float64)

    x_scaler = StandardScaler().fit(X_raw)
    y_scaler = StandardScaler().fit(y_raw.reshape(-1, 1))
    X = x_scaler.transform(X_raw)
    y = y_scaler.transform(y_raw.reshape(-1, 1)).ravel()

    label = name or csv_path.stem
    logger.info("Loaded benchmark %s: n=%d, J=%d", label, X.shape[0], X.shape[1])
    return Dataset(
        X=X,
        y=y,
        outlier_mask=np.zeros(X.shape[0], dtype=bool),
        domain=DomainBox.bounding(X),
        provenance=f"benchmark:{label}",
        x_scaler=x_scaler,
        y_scaler=y_scaler,
    )


def load_named_benchmark(name: str, csv_path: str | Path) -> Dataset:
    try:
        spec = BENCHMARKS[name]
    except KeyError as exc:
        raise InvalidConfigError(f"Unknown benchmark {name!r} (known: {sorted(BENCHMARKS)})") from exc
    data = load_benchmark(csv_path, spec.drop_columns, spec.target_column, name=name)
    if (data.n, data.input_dim) != (spec.expected_n, spec.expected_j):
        logger.warning(
            "%s: got n=%d, J=%d; the reference file has n=%d, J=%d",
            name, data.n, data.input_dim, spec.expected_n, spec.expected_j,
        )
    return data
