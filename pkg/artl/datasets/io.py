from __future__ import annotations

from pathlib import Path

import numpy as np
import pandas as pd

from data_models.architecture import DomainBox
from data_models.dataset import Dataset


def write_csv(df: pd.DataFrame, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    df.to_csv(path, index=False, lineterminator="\n")
    return path


def dataset_frame(data: Dataset, config_hash: str | None = None) -> pd.DataFrame:
    cols = {f"x_{j + 1}": data.X[:, j] for j in range(data.input_dim)}
    cols["y"] = data.y
    cols["is_outlier"] = data.outlier_mask.astype(int)
    if config_hash is not None:
        cols["config_hash"] = config_hash
    return pd.DataFrame(cols)


def dump_dataset(data: Dataset, path: Path, config_hash: str | None = None) -> Path:
    """CSV with columns x_1..x_J, y, is_outlier (and config_hash when given)."""
    return write_csv(dataset_frame(data, config_hash), path)


def read_dataset(path: Path, domain: DomainBox | None = None) -> Dataset:
    df = pd.read_csv(path)
    x_cols = sorted((c for c in df.columns if c.startswith("x_")), key=lambda c: int(c[2:]))
    X = df[x_cols].to_numpy(dtype=np.float64)
    return Dataset(
        X=X,
        y=df["y"].to_numpy(dtype=np.float64),
        outlier_mask=df["is_outlier"].to_numpy().astype(bool),
        domain=domain or DomainBox.bounding(X),
        provenance=f"csv:{Path(path).name}",
    )
