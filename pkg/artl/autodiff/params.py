"""Flat parameter vector θ with per-layer shape metadata."""
from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd

from artl.autodiff import tape as ops
from artl.errors import InputShapeError
from data_models.architecture import MlpArchitecture

logger = logging.getLogger(__name__)

_SHAPE_RE = re.compile(r"^(\d+)x(\d+)$")


@dataclass(frozen=True)
class ParamVector:
    """θ = (A⁽⁰⁾, b⁽⁰⁾, …, A⁽Q⁾, b⁽Q⁾) flattened row-major, layer by layer.

    ``layout`` lists the (rows, cols) of each weight matrix; every weight is
    followed by a bias of shape (rows, 1).
    """

    values: np.ndarray
    layout: tuple[tuple[int, int], ...]

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64).reshape(-1)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "layout", tuple((int(r), int(c)) for r, c in self.layout))
        expected = self.size_for(self.layout)
        if values.size != expected:
            raise InputShapeError(f"Parameter vector has {values.size} entries, layout needs {expected}")

    @staticmethod
    def size_for(layout: tuple[tuple[int, int], ...]) -> int:
        return sum(rows * cols + rows for rows, cols in layout)

    @classmethod
    def for_architecture(cls, arch: MlpArchitecture, values: np.ndarray) -> "ParamVector":
        return cls(values=values, layout=tuple(arch.layer_shapes))

    @classmethod
    def from_layers(cls, layers: list[tuple[np.ndarray, np.ndarray]]) -> "ParamVector":
        parts = []
        layout = []
        for W, b in layers:
            W = np.atleast_2d(np.asarray(W, dtype=np.float64))
            b = np.asarray(b, dtype=np.float64).reshape(-1)
            layout.append(W.shape)
            parts += [W.ravel(), b]
        return cls(values=np.concatenate(parts), layout=tuple(layout))

    def __len__(self) -> int:
        return self.values.size

    def with_values(self, values: np.ndarray) -> "ParamVector":
        return ParamVector(values=values, layout=self.layout)

    def unflatten(self, flat: Any = None) -> list[tuple[Any, Any]]:
        """Split ``flat`` (defaults to ``values``; may be a tape Node) into (W, b) pairs."""
        flat = self.values if flat is None else flat
        layers = []
        offset = 0
        for rows, cols in self.layout:
            W = ops.reshape(ops.index(flat, slice(offset, offset + rows * cols)), (rows, cols))
            offset += rows * cols
            b = ops.reshape(ops.index(flat, slice(offset, offset + rows)), (rows, 1))
            offset += rows
            layers.append((W, b))
        return layers

    @property
    def layout_string(self) -> str:
        return ";".join(f"{r}x{c}" for r, c in self.layout)

    @staticmethod
    def parse_layout(text: str) -> tuple[tuple[int, int], ...]:
        layout = []
        for part in text.strip().split(";"):
            m = _SHAPE_RE.match(part.strip())
            if not m:
                raise InputShapeError(f"Bad layout entry {part!r} in {text!r}")
            layout.append((int(m.group(1)), int(m.group(2))))
        return tuple(layout)

    def save_csv(self, path: str | Path, config_hash: str | None = None) -> Path:
        """One value per line under a header holding the layout string, plus an optional hash column."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        df = pd.DataFrame({self.layout_string: self.values})
        if config_hash is not None:
            df["config_hash"] = config_hash
        df.to_csv(path, index=False, lineterminator="\n")
        return path

    @classmethod
    def load_csv(cls, path: str | Path) -> "ParamVector":
        df = pd.read_csv(path, usecols=[0], dtype=np.float64, float_precision="round_trip")
        layout = cls.parse_layout(str(df.columns[0]))
        logger.debug("Loaded %d parameters from %s", len(df), path)
        return cls(values=df.iloc[:, 0].to_numpy(), layout=layout)
