from __future__ import annotations

from enum import Enum
from typing import Optional

import numpy as np
from pydantic import BaseModel, Field, model_validator
from sklearn.preprocessing import StandardScaler

from data_models.architecture import DomainBox


class SyntheticFunction(str, Enum):
    CHECKERED = "checkered"
    VOLCANO = "volcano"
    STRIPE = "stripe"
    PLANE = "plane"


class SyntheticSpec(BaseModel):
    """Noisy samples of a known surface on a square grid over [0, 2π]², with injected outliers."""

    function: SyntheticFunction = Field(SyntheticFunction.CHECKERED, description="True surface.")
    n: int = Field(100, ge=1, description="Number of grid points; must be a perfect square.")
    noise_sd: float = Field(0.2, ge=0.0, description="Standard deviation of the Gaussian noise.")
    outlier_fraction: float = Field(0.03, ge=0.0, lt=0.5, description="Share of points replaced by outliers.")
    outlier_level: float = Field(5.0, description="Centre of the outlier targets.")
    outlier_jitter: float = Field(0.1, ge=0.0, description="Half-width of the uniform jitter around outlier_level.")
    seed: int = Field(0, description="Seed for noise and outlier selection.")

    model_config = {"populate_by_name": True, "frozen": True}

    @model_validator(mode="after")
    def _square(self) -> "SyntheticSpec":
        side = int(round(np.sqrt(self.n)))
        if side * side != self.n:
            raise ValueError(f"n must be a perfect square, got {self.n}")
        return self

    @property
    def side(self) -> int:
        return int(round(np.sqrt(self.n)))


class Dataset(BaseModel):
    """
    Covariates X (n×J) and targets y, with the mask of injected outliers.
    When the data were standardised the fitted scalers are kept for the way back.
    """

    X: np.ndarray = Field(..., description="Covariate matrix, one row per observation.")
    y: np.ndarray = Field(..., description="Targets.")
    outlier_mask: np.ndarray = Field(..., description="True where the target was contaminated.")
    domain: DomainBox = Field(..., description="Box containing every row of X.")
    provenance: str = Field("", description="Where the data came from.")
    x_scaler: Optional[StandardScaler] = Field(None, description="Scaler fitted on raw covariates.")
    y_scaler: Optional[StandardScaler] = Field(None, description="Scaler fitted on raw targets.")

    model_config = {"populate_by_name": True, "arbitrary_types_allowed": True, "frozen": True}

    @model_validator(mode="after")
    def _shapes(self) -> "Dataset":
        X = np.asarray(self.X, dtype=np.float64)
        if X.ndim != 2:
            raise ValueError(f"X must be 2-D, got shape {X.shape}")
        n = X.shape[0]
        if np.shape(self.y) != (n,) or np.shape(self.outlier_mask) != (n,):
            raise ValueError(
                f"y {np.shape(self.y)} and outlier_mask {np.shape(self.outlier_mask)} must have length {n}"
            )
        if X.shape[1] != self.domain.dim:
            raise ValueError(f"X has {X.shape[1]} columns but the domain has {self.domain.dim} axes")
        if not self.domain.contains(X, atol=1e-9):
            raise ValueError("X rows must lie inside the domain box")
        return self

    @property
    def n(self) -> int:
        return int(self.X.shape[0])

    @property
    def input_dim(self) -> int:
        return int(self.X.shape[1])

    @property
    def n_outliers(self) -> int:
        return int(np.count_nonzero(self.outlier_mask))

    def subset(self, idx: np.ndarray, provenance: str | None = None) -> "Dataset":
        return Dataset(
            X=self.X[idx],
            y=self.y[idx],
            outlier_mask=self.outlier_mask[idx],
            domain=self.domain,
            provenance=provenance or self.provenance,
            x_scaler=self.x_scaler,
            y_scaler=self.y_scaler,
        )

    def with_targets(self, y: np.ndarray, outlier_mask: np.ndarray, provenance: str | None = None) -> "Dataset":
        return Dataset(
            X=self.X,
            y=np.asarray(y, dtype=np.float64),
            outlier_mask=np.asarray(outlier_mask, dtype=bool),
            domain=self.domain,
            provenance=provenance or self.provenance,
            x_scaler=self.x_scaler,
            y_scaler=self.y_scaler,
        )

    def raw_X(self) -> np.ndarray:
        return self.X if self.x_scaler is None else self.x_scaler.inverse_transform(self.X)

    def raw_y(self) -> np.ndarray:
        if self.y_scaler is None:
            return self.y
        return self.y_scaler.inverse_transform(self.y.reshape(-1, 1)).ravel()
