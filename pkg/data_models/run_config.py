from __future__ import annotations

import math
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field, ValidationInfo, field_validator, model_validator

from data_models.architecture import Activation, DomainBox, MlpArchitecture
from data_models.dataset import SyntheticFunction, SyntheticSpec
from data_models.hovr import HovrSpec, WeightedIndex

SYNTHETIC_INPUT_DIM = 2

# --- Enumerations ---


class ExperimentKind(str, Enum):
    SINGLE = "single"
    SYNTHETIC_TABLE = "synthetic_table"
    ABLATION = "ablation"
    VALIDATION_STUDY = "validation_study"
    BENCHMARK = "benchmark"
    BREAKDOWN = "breakdown"


class LossKind(str, Enum):
    ARTL = "artl"
    MSE = "mse"
    HUBER = "huber"
    TUKEY = "tukey"
    TRIMMED_ONLY = "trimmed_only"
    HOVR_ONLY = "hovr_only"
    RANSAC = "ransac"

    @property
    def uses_trimming(self) -> bool:
        return self in (LossKind.ARTL, LossKind.TRIMMED_ONLY, LossKind.HOVR_ONLY)


class ScheduleKind(str, Enum):
    CONSTANT = "constant"
    STEP_DECAY = "step_decay"
    INVERSE_SQRT = "inverse_sqrt"
    INVERSE = "inverse"


class OptimizerKind(str, Enum):
    ADAM = "adam"
    SGSD = "sgsd"


class DataSource(str, Enum):
    SYNTHETIC = "synthetic"
    BENCHMARK = "benchmark"


# --- Sections ---


class ScheduleSpec(BaseModel):
    """Learning-rate schedule ω_t, t = 0, 1, …"""

    kind: ScheduleKind = Field(ScheduleKind.STEP_DECAY, description="Schedule family.")
    base_rate: float = Field(0.01, gt=0.0, description="ω_0 (α for the inverse schedules).")
    gamma: float = Field(0.5, description="Decay factor for step_decay.")
    period: int = Field(1000, ge=1, description="Iterations between decays for step_decay.")

    model_config = {"populate_by_name": True, "frozen": True}

    @model_validator(mode="after")
    def _gamma(self) -> "ScheduleSpec":
        if self.kind is ScheduleKind.STEP_DECAY and not 0.0 < self.gamma < 1.0:
            raise ValueError(f"step_decay gamma must lie in (0, 1), got {self.gamma}")
        return self


class ModelSection(BaseModel):
    hidden_widths: List[int] = Field(default_factory=lambda: [100, 100, 100])
    activation: Activation = Activation.SIGMOID

    def to_architecture(self, input_dim: int) -> MlpArchitecture:
        return MlpArchitecture(input_dim=input_dim, hidden_widths=self.hidden_widths, activation=self.activation)


class LossSection(BaseModel):
    kind: LossKind = Field(LossKind.ARTL, description="Training objective.")
    h_fraction: float = Field(0.9, gt=0.0, le=1.0, description="h = round(h_fraction · n).")
    huber_delta: float = Field(1.0, gt=0.0, description="Huber threshold δ.")
    tukey_c: float = Field(4.685, gt=0.0, description="Tukey constant c.")
    ransac_phase: int = Field(500, ge=1, description="Iterations per RANSAC-like phase.")
    ransac_drop: float = Field(0.1, ge=0.0, lt=1.0, description="Share of highest-loss samples dropped per phase.")


class HovrSection(BaseModel):
    k: int = Field(1, description="Derivative order (1 or 2).")
    q: float = Field(2.0, gt=0.0)
    lam: float = Field(1e-3, ge=0.0, alias="lambda")
    weights: Optional[List[WeightedIndex]] = Field(None, description="Defaults to diagonal weights 1/J.")
    mc_samples: int = Field(64, ge=1, description="Monte-Carlo points per iteration.")

    model_config = {"populate_by_name": True}

    @field_validator("k")
    @classmethod
    def _order(cls, v: int) -> int:
        if v not in (1, 2):
            raise ValueError(f"k must be 1 or 2, got {v}")
        return v

    @field_validator("weights")
    @classmethod
    def _weights(cls, v: Optional[List[WeightedIndex]], info: ValidationInfo) -> Optional[List[WeightedIndex]]:
        if v is None:
            return v
        if not v:
            raise ValueError("at least one weighted multi-index is required")
        total = sum(entry.w for entry in v)
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"weights must sum to 1, got {total!r}")
        k = info.data.get("k")
        for entry in v:
            if k is not None and len(entry.multi_index) != k:
                raise ValueError(f"multi-index {entry.multi_index} does not have length k={k}")
        return v

    @property
    def max_index(self) -> int:
        """Largest input coordinate named by the weights (0 for the diagonal default)."""
        if self.weights is None:
            return 0
        return max(max(entry.multi_index) for entry in self.weights)

    def to_spec(self, domain: DomainBox) -> HovrSpec:
        if self.weights is None:
            return HovrSpec.diagonal(self.k, domain, q=self.q, lam=self.lam, mc_samples=self.mc_samples)
        return HovrSpec(k=self.k, q=self.q, lam=self.lam, weights=self.weights, domain=domain, mc_samples=self.mc_samples)


class OptimizerSection(BaseModel):
    kind: OptimizerKind = Field(OptimizerKind.ADAM)
    iterations: int = Field(5000, ge=1)
    schedule: ScheduleSpec = Field(default_factory=ScheduleSpec)
    beta1: float = Field(0.9, ge=0.0, lt=1.0)
    beta2: float = Field(0.999, ge=0.0, lt=1.0)
    eps: float = Field(1e-8, gt=0.0)
    l_mu1: float = Field(1.0, ge=0.0, description="Proxy for L·μ₁ in the stopping-time bound.")
    l_mu2: Optional[float] = Field(None, gt=0.0, description="Proxy for L·μ₂; defaults to 1/max ω_t.")
    criticality_every: int = Field(100, ge=1)
    criticality_samples: int = Field(4096, ge=1)
    quad_grid: Optional[int] = Field(
        None, ge=2, description="Midpoint grid per axis for the F_quad column; off when unset."
    )


class DataSection(BaseModel):
    source: DataSource = DataSource.SYNTHETIC
    name: Optional[str] = Field(None, description="Label used in result rows.")

    # synthetic
    function: SyntheticFunction = SyntheticFunction.CHECKERED
    n: int = 100
    noise_sd: float = 0.2
    outlier_fraction: float = Field(0.03, ge=0.0, lt=0.5)
    outlier_level: float = 5.0
    outlier_jitter: float = 0.1
    n_test: int = Field(10_000, ge=1)

    # benchmark
    csv_path: Optional[Path] = None
    drop_columns: List[str] = Field(default_factory=list)
    target_column: Optional[str] = None
    train_fraction: float = Field(0.7, gt=0.0, lt=1.0)
    shift_multiplier: float = 2.0

    @field_validator("n")
    @classmethod
    def _square_grid(cls, v: int, info: ValidationInfo) -> int:
        if info.data.get("source", DataSource.SYNTHETIC) is not DataSource.SYNTHETIC:
            return v
        side = math.isqrt(v) if v >= 0 else -1
        if v < 1 or side * side != v:
            raise ValueError(f"synthetic n must be a positive perfect square, got {v}")
        return v

    @model_validator(mode="after")
    def _benchmark_fields(self) -> "DataSection":
        if self.source is DataSource.BENCHMARK and (self.csv_path is None or not self.target_column):
            raise ValueError("benchmark data needs csv_path and target_column")
        return self

    @property
    def label(self) -> str:
        if self.name:
            return self.name
        if self.source is DataSource.SYNTHETIC:
            return self.function.value
        return Path(self.csv_path).stem if self.csv_path else "benchmark"

    def synthetic_spec(self, seed: int) -> SyntheticSpec:
        return SyntheticSpec(
            function=self.function,
            n=self.n,
            noise_sd=self.noise_sd,
            outlier_fraction=self.outlier_fraction,
            outlier_level=self.outlier_level,
            outlier_jitter=self.outlier_jitter,
            seed=seed,
        )


class MethodSpec(BaseModel):
    """A named variant: partial overrides merged onto the run's base sections."""

    name: str
    loss: Dict[str, Any] = Field(default_factory=dict)
    hovr: Dict[str, Any] = Field(default_factory=dict)
    model: Dict[str, Any] = Field(default_factory=dict)
    optimizer: Dict[str, Any] = Field(default_factory=dict)


class ValidationStudySection(BaseModel):
    lambdas: List[float] = Field(default_factory=lambda: [1e-4, 1e-3, 1e-2])
    ks: List[int] = Field(default_factory=lambda: [1, 2])
    h_fractions: List[float] = Field(default_factory=lambda: [0.8, 0.9])
    validation_fraction: float = Field(0.2, gt=0.0, lt=1.0)
    score_h_fraction: float = Field(0.9, gt=0.0, le=1.0)


class BreakdownSection(BaseModel):
    m: Optional[int] = Field(None, ge=0, description="Contaminated targets; defaults to n − h.")
    magnitude: float = Field(1e6, description="Value written into contaminated targets.")
    quad_grid: int = Field(100, ge=2)


class OutputSection(BaseModel):
    dir: Path = Field(Path("results"), description="Root directory for this experiment's outputs.")
    dump_grid: bool = True
    grid_resolution: int = Field(100, ge=2)
    dump_datasets: bool = False
    save_params: bool = True
    record_wall_time: bool = False


class TrackingSection(BaseModel):
    enabled: bool = False
    experiment_name: Optional[str] = None
    tracking_uri: Optional[str] = None


# --- Top level ---


class RunConfig(BaseModel):
    """
    One experiment: a base training setup, optional method variants and datasets,
    and the seeds every (method, dataset) pair is trained with.
    """

    name: str = Field("artl_run", description="Experiment name; also the MLflow experiment name.")
    description: str = ""
    experiment: ExperimentKind = ExperimentKind.SINGLE
    seeds: List[int] = Field(default_factory=lambda: [0, 1, 2, 3, 4])

    data: DataSection = Field(default_factory=DataSection)
    datasets: List[DataSection] = Field(default_factory=list, description="Overrides `data` when non-empty.")
    model: ModelSection = Field(default_factory=ModelSection)
    loss: LossSection = Field(default_factory=LossSection)
    hovr: HovrSection = Field(default_factory=HovrSection)
    optimizer: OptimizerSection = Field(default_factory=OptimizerSection)
    methods: List[MethodSpec] = Field(default_factory=list)

    validation_study: ValidationStudySection = Field(default_factory=ValidationStudySection)
    breakdown: BreakdownSection = Field(default_factory=BreakdownSection)
    output: OutputSection = Field(default_factory=OutputSection)
    tracking: TrackingSection = Field(default_factory=TrackingSection)

    model_config = {"populate_by_name": True}

    @field_validator("seeds")
    @classmethod
    def _seeds(cls, v: List[int]) -> List[int]:
        if not v:
            raise ValueError("at least one seed is required")
        return v

    @model_validator(mode="after")
    def _loss_constraints(self) -> "RunConfig":
        kind = self.loss.kind
        if kind is LossKind.TRIMMED_ONLY:
            self.hovr.lam = 0.0
        elif kind is LossKind.HOVR_ONLY:
            self.loss.h_fraction = 1.0
        elif kind is LossKind.ARTL:
            if self.hovr.lam <= 0.0:
                raise ValueError("loss 'artl' requires hovr.lambda > 0")
            if self.loss.h_fraction >= 1.0:
                raise ValueError("loss 'artl' requires loss.h_fraction < 1")
        return self

    @model_validator(mode="after")
    def _hovr_indices(self) -> "RunConfig":
        # benchmark widths are only known once the CSV is read
        if self.hovr.max_index > SYNTHETIC_INPUT_DIM and any(
            s.source is DataSource.SYNTHETIC for s in self.data_sections
        ):
            raise ValueError(
                f"hovr.weights name coordinate {self.hovr.max_index}, "
                f"but synthetic inputs have {SYNTHETIC_INPUT_DIM} dimensions"
            )
        return self

    @property
    def data_sections(self) -> List[DataSection]:
        return list(self.datasets) if self.datasets else [self.data]

    @property
    def method_name(self) -> str:
        return self.loss.kind.value

    def for_method(self, method: MethodSpec) -> "RunConfig":
        """Copy of this config with the method's overrides merged in (and re-validated)."""
        base = self.model_dump(by_alias=True)
        base["methods"] = []
        for section in ("loss", "hovr", "model", "optimizer"):
            base[section] = _deep_merge(base[section], getattr(method, section))
        return RunConfig.model_validate(base)

    def with_overrides(self, **sections: Dict[str, Any]) -> "RunConfig":
        base = self.model_dump(by_alias=True)
        for section, values in sections.items():
            base[section] = _deep_merge(base[section], values)
        return RunConfig.model_validate(base)


_FIELD_ALIASES = {"lam": "lambda"}


def _deep_merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    out = dict(base)
    for key, value in override.items():
        key = _FIELD_ALIASES.get(key, key)
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _deep_merge(out[key], value)
        else:
            out[key] = value
    return out
