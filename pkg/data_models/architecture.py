from __future__ import annotations

from enum import Enum
from typing import List

import numpy as np
from pydantic import BaseModel, Field, field_validator, model_validator


class Activation(str, Enum):
    SIGMOID = "sigmoid"
    TANH = "tanh"


class MlpArchitecture(BaseModel):
    """
    Fully connected network R^J -> R: hidden affine layers followed by an
    elementwise activation, and a final linear layer with a single output.
    """

    input_dim: int = Field(..., ge=1, description="Number of covariates J.")
    hidden_widths: List[int] = Field(
        default_factory=lambda: [100, 100, 100],
        description="Widths L_1..L_Q of the hidden layers; empty gives a linear model.",
    )
    activation: Activation = Field(Activation.SIGMOID, description="Hidden-layer activation.")

    model_config = {"populate_by_name": True, "frozen": True}

    @field_validator("hidden_widths")
    @classmethod
    def _positive_widths(cls, v: List[int]) -> List[int]:
        if any(w < 1 for w in v):
            raise ValueError("all hidden widths must be >= 1")
        return v

    @property
    def widths(self) -> list[int]:
        """All layer widths including input and the scalar output."""
        return [self.input_dim, *self.hidden_widths, 1]

    @property
    def layer_shapes(self) -> list[tuple[int, int]]:
        """(rows, cols) of each weight matrix, in forward order."""
        w = self.widths
        return [(w[q + 1], w[q]) for q in range(len(w) - 1)]

    @property
    def n_params(self) -> int:
        return sum(rows * cols + rows for rows, cols in self.layer_shapes)


class DomainBox(BaseModel):
    """Axis-aligned box Ω = Π_j [lower_j, upper_j] of the covariate space."""

    lower: List[float] = Field(..., description="Per-axis lower bounds.")
    upper: List[float] = Field(..., description="Per-axis upper bounds.")

    model_config = {"populate_by_name": True, "frozen": True}

    @model_validator(mode="after")
    def _check_bounds(self) -> "DomainBox":
        if len(self.lower) != len(self.upper):
            raise ValueError("lower and upper must have the same length")
        if not self.lower:
            raise ValueError("domain must have at least one axis")
        for j, (lo, hi) in enumerate(zip(self.lower, self.upper)):
            if not lo < hi:
                raise ValueError(f"axis {j + 1}: lower ({lo}) must be < upper ({hi})")
        return self

    @classmethod
    def square(cls, low: float, high: float, dim: int) -> "DomainBox":
        return cls(lower=[low] * dim, upper=[high] * dim)

    @classmethod
    def bounding(cls, X: np.ndarray, pad: float = 0.5) -> "DomainBox":
        """Bounding box of the rows of X; degenerate axes are widened by ±pad."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        lo = X.min(axis=0)
        hi = X.max(axis=0)
        flat = hi <= lo
        lo = np.where(flat, lo - pad, lo)
        hi = np.where(flat, hi + pad, hi)
        return cls(lower=lo.tolist(), upper=hi.tolist())

    @property
    def dim(self) -> int:
        return len(self.lower)

    @property
    def volume(self) -> float:
        return float(np.prod(np.subtract(self.upper, self.lower)))

    def contains(self, X: np.ndarray, atol: float = 1e-12) -> bool:
        X = np.atleast_2d(X)
        return bool(np.all(X >= np.asarray(self.lower) - atol) and np.all(X <= np.asarray(self.upper) + atol))

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.uniform(self.lower, self.upper, size=(size, self.dim))
