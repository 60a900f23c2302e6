import logging
import os
from pathlib import Path
from typing import Any, Dict, Mapping, Optional

import mlflow
import pandas as pd
from pydantic import BaseModel

logger = logging.getLogger(__name__)

DEFAULT_TRACKING_URI = "file:./mlruns"


def setup_experiment(experiment_name: str, tracking_uri: Optional[str] = None) -> None:
    """
    Sets the active experiment. Creates it if it doesn't exist.
    """
    uri = tracking_uri or os.environ.get("MLFLOW_TRACKING_URI", DEFAULT_TRACKING_URI)
    mlflow.set_tracking_uri(uri)
    logger.info("Setting MLflow experiment to: %s (%s)", experiment_name, uri)
    mlflow.set_experiment(experiment_name)


def log_pydantic_params(model: BaseModel, prefix: str = "") -> None:
    """
    Logs fields of a Pydantic model as MLflow parameters.
    """
    params = model.model_dump(mode="json", by_alias=True)
    flattened = _flatten_dict(params, parent_key=prefix)
    # long lists (seeds, methods) are truncated
    mlflow.log_params({k: str(v)[:500] for k, v in flattened.items()})


def log_run_metrics(row: Mapping[str, Any], trace: Optional[pd.DataFrame] = None) -> None:
    """
    Logs the scalar results of one training run, plus its per-iteration trace as step metrics.
    """
    metrics = {k: float(v) for k, v in row.items() if isinstance(v, (int, float)) and not isinstance(v, bool)}
    mlflow.log_metrics({k: v for k, v in metrics.items() if k != "seed" and v == v})
    if trace is None or trace.empty:
        return
    columns = [c for c in trace.columns if c != "iteration"]
    for step, values in zip(trace["iteration"], trace[columns].itertuples(index=False, name=None)):
        batch = {c: float(v) for c, v in zip(columns, values) if pd.notna(v)}
        if batch:
            mlflow.log_metrics(batch, step=int(step))


def log_artifact_file(path: Path, artifact_path: Optional[str] = None) -> None:
    if path.exists():
        mlflow.log_artifact(str(path), artifact_path=artifact_path)
    else:
        logger.warning("Artifact %s does not exist; skipped", path)


def _flatten_dict(d: Dict[str, Any], parent_key: str = "", sep: str = ".") -> Dict[str, Any]:
    items = []
    for k, v in d.items():
        new_key = f"{parent_key}{sep}{k}" if parent_key else k
        if isinstance(v, dict):
            items.extend(_flatten_dict(v, new_key, sep=sep).items())
        else:
            items.append((new_key, v))
    return dict(items)
