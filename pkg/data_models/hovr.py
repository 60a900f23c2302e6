from __future__ import annotations

from typing import List, Tuple

from pydantic import BaseModel, Field, field_validator, model_validator

from data_models.architecture import DomainBox

SUPPORTED_ORDERS = (1, 2)


class WeightedIndex(BaseModel):
    """One multi-index (1-based coordinate labels) and its weight in the regulariser."""

    multi_index: Tuple[int, ...] = Field(..., description="Coordinates differentiated, e.g. (1, 2) = ∂²/∂x₁∂x₂.")
    w: float = Field(..., ge=0.0, description="Non-negative weight.")

    model_config = {"frozen": True}

    @field_validator("multi_index")
    @classmethod
    def _one_based(cls, v: Tuple[int, ...]) -> Tuple[int, ...]:
        if any(i < 1 for i in v):
            raise ValueError("multi-index entries are 1-based")
        return v


class HovrSpec(BaseModel):
    """
    Higher-order variation regulariser:
    λ · ∫_Ω Σ_i w_i |∂^k f / ∂x_{i1}…∂x_{ik}|^q dx, estimated with M uniform samples.
    """

    k: int = Field(1, description="Derivative order.")
    q: float = Field(2.0, gt=0.0, description="Power applied to the absolute derivative.")
    lam: float = Field(1e-3, ge=0.0, alias="lambda", description="Regularisation weight λ.")
    weights: List[WeightedIndex] = Field(..., description="Multi-indices with weights summing to one.")
    domain: DomainBox = Field(..., description="Integration domain Ω.")
    mc_samples: int = Field(64, ge=1, description="Monte-Carlo points per gradient estimate.")

    model_config = {"populate_by_name": True, "frozen": True}

    @model_validator(mode="after")
    def _check(self) -> "HovrSpec":
        if self.k not in SUPPORTED_ORDERS:
            raise ValueError(f"k must be one of {SUPPORTED_ORDERS}, got {self.k}")
        if not self.weights:
            raise ValueError("at least one weighted multi-index is required")
        total = sum(entry.w for entry in self.weights)
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"weights must sum to 1, got {total!r}")
        for entry in self.weights:
            if len(entry.multi_index) != self.k:
                raise ValueError(f"multi-index {entry.multi_index} does not have length k={self.k}")
            if max(entry.multi_index) > self.domain.dim:
                raise ValueError(f"multi-index {entry.multi_index} exceeds input dimension {self.domain.dim}")
        return self

    @classmethod
    def diagonal(
        cls,
        k: int,
        domain: DomainBox,
        q: float = 2.0,
        lam: float = 1e-3,
        mc_samples: int = 64,
    ) -> "HovrSpec":
        """w_i = 1/J on the pure multi-indices (j, …, j), zero elsewhere."""
        J = domain.dim
        weights = [WeightedIndex(multi_index=(j,) * k, w=1.0 / J) for j in range(1, J + 1)]
        # 1/J summed J times can miss 1 by an ulp
        drift = 1.0 - sum(e.w for e in weights)
        if drift:
            weights[-1] = WeightedIndex(multi_index=weights[-1].multi_index, w=weights[-1].w + drift)
        return cls(k=k, q=q, lam=lam, weights=weights, domain=domain, mc_samples=mc_samples)
