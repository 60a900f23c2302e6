"""Experiment runners.

Every experiment expands its RunConfig into (method, dataset, seed) jobs, trains
them in a thread pool and collects the results in the calling thread, which is
the only one that writes files. Result tables are sorted by (method, dataset,
seed) before writing, so their bytes do not depend on scheduling.

Output layout under ``output.dir``::

    results.csv            one row per run
    summary.csv            mean/sd per (method, dataset)
    convergence.csv        τ_T, bound and criticality of trimmed-loss runs
    correlation.csv        validation_study only
    breakdown.csv          breakdown only
    diagnostics/<run>.csv  per-iteration trace
    params/<run>.csv       trained θ
    grids/<run>.csv        f_θ on a grid over Ω (2-D inputs)
    datasets/<run>.csv     training data (output.dump_datasets)
"""
from __future__ import annotations

import logging
import math
import time
from concurrent.futures import CancelledError, ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterable, TypeVar

import mlflow
import numpy as np
import pandas as pd
from pydantic import ValidationError
from tqdm import tqdm

from artl.autodiff.params import ParamVector
from artl.datasets.benchmark import load_benchmark
from artl.datasets.io import dump_dataset, write_csv
from artl.datasets.splits import split_and_contaminate, train_validation_split
from artl.datasets.synthetic import make_synthetic, make_test_set
from artl.errors import (
    DivergedError,
    InvalidConfigError,
    RunDivergedError,
    UndefinedCorrelationError,
    UnsupportedDimensionError,
)
from artl.evaluation.breakdown import breakdown_stress
from artl.evaluation.metrics import correlations, pmse, robust_validation_score
from artl.hashing import config_hash
from artl.losses import TrimSpec
from artl.mlp import predict
from artl.training import FitResult, fit
from data_models.architecture import DomainBox, MlpArchitecture
from data_models.dataset import Dataset
from data_models.run_config import DataSection, DataSource, ExperimentKind, RunConfig
from mlflow_utils.tracking import log_artifact_file, log_pydantic_params, log_run_metrics, setup_experiment

logger = logging.getLogger(__name__)

RESULT_COLUMNS = ["method", "dataset", "seed", "pmse", "val_score", "wall_time_s", "config_hash"]
SORT_KEYS = ["method", "dataset", "seed"]

# sections that do not change what a single run computes
_RUN_HASH_EXCLUDE = {
    "name", "description", "seeds", "methods", "data", "datasets",
    "validation_study", "breakdown", "output", "tracking",
}

T = TypeVar("T")


@dataclass(frozen=True, eq=False)
class Job:
    experiment: str
    method: str
    config: RunConfig
    data: DataSection
    seed: int

    @property
    def dataset(self) -> str:
        return self.data.label

    @property
    def key(self) -> tuple[str, str, int]:
        return (self.method, self.dataset, self.seed)

    @property
    def stem(self) -> str:
        return f"{self.method}__{self.dataset}__seed{self.seed}"

    @property
    def label(self) -> str:
        return f"{self.experiment}/{self.method}/{self.dataset}/seed={self.seed}"

    @property
    def config_hash(self) -> str:
        return config_hash(
            self.config,
            exclude=_RUN_HASH_EXCLUDE,
            data=self.data.model_dump(mode="json"),
            seed=self.seed,
        )


@dataclass(frozen=True)
class PreparedData:
    """Training set, PMSE test set, the set the robust score is taken on, and Ω for the HOV term."""

    train: Dataset
    test: Dataset
    score: Dataset
    hovr_domain: DomainBox


@dataclass
class RunOutcome:
    row: dict[str, Any]
    fitted: FitResult
    prepared: PreparedData


@dataclass
class ExperimentResult:
    output_dir: Path
    tables: dict[str, pd.DataFrame] = field(default_factory=dict)

    @property
    def results(self) -> pd.DataFrame:
        return self.tables.get("results", pd.DataFrame(columns=RESULT_COLUMNS))


# --- config expansion ---


def resolve_methods(config: RunConfig) -> list[tuple[str, RunConfig]]:
    """(name, method-resolved config) for every method; the base config alone when none are listed."""
    if not config.methods:
        return [(config.method_name, config)]
    resolved = []
    for method in config.methods:
        try:
            resolved.append((method.name, config.for_method(method)))
        except ValidationError as exc:
            first = exc.errors()[0]
            raise InvalidConfigError(f"method {method.name!r}: {first['msg']}", field=f"methods.{method.name}") from exc
    names = [name for name, _ in resolved]
    if len(set(names)) != len(names):
        raise InvalidConfigError(f"method names must be unique, got {names}")
    return resolved


def _check_unique_labels(sections: list[DataSection]) -> None:
    labels = [s.label for s in sections]
    if len(set(labels)) != len(labels):
        raise InvalidConfigError(f"dataset labels must be unique (set data.name), got {labels}")


def load_sources(sections: Iterable[DataSection]) -> dict[str, Dataset]:
    """Standardised benchmark tables, read once per experiment."""
    sources = {}
    for section in sections:
        if section.source is DataSource.BENCHMARK:
            sources[section.label] = load_benchmark(
                section.csv_path, section.drop_columns, section.target_column, name=section.label
            )
    return sources


def prepare_data(section: DataSection, seed: int, sources: dict[str, Dataset]) -> PreparedData:
    if section.source is DataSource.SYNTHETIC:
        train = make_synthetic(section.synthetic_spec(seed))
        test = make_test_set(section.function, section.n_test, seed)
        return PreparedData(train=train, test=test, score=train, hovr_domain=train.domain)
    train, test = split_and_contaminate(
        sources[section.label], section.train_fraction, section.outlier_fraction, section.shift_multiplier, seed
    )
    return PreparedData(train=train, test=test, score=train, hovr_domain=DomainBox.bounding(train.X))


def prepare_validation_data(section: DataSection, seed: int, sources: dict[str, Dataset], validation_fraction: float) -> PreparedData:
    """Contaminated data split into fit/validation parts; PMSE still on the clean test set."""
    base = prepare_data(section, seed, sources)
    fit_part, val_part = train_validation_split(base.train, validation_fraction, seed)
    return PreparedData(train=fit_part, test=base.test, score=val_part, hovr_domain=base.hovr_domain)


# --- grids ---


def grid_frame(theta: ParamVector, arch: MlpArchitecture, domain: DomainBox, resolution: int) -> pd.DataFrame:
    if arch.input_dim != 2 or domain.dim != 2:
        raise UnsupportedDimensionError(f"Grid dumps need 2-D inputs, got J={arch.input_dim}")
    if resolution < 2:
        raise InvalidConfigError(f"grid resolution must be >= 2, got {resolution}")
    a1 = np.linspace(domain.lower[0], domain.upper[0], resolution)
    a2 = np.linspace(domain.lower[1], domain.upper[1], resolution)
    g1, g2 = np.meshgrid(a1, a2, indexing="ij")
    X = np.column_stack([g1.ravel(), g2.ravel()])
    return pd.DataFrame({"x_1": X[:, 0], "x_2": X[:, 1], "f": predict(theta, arch, X)})


def dump_grid(
    theta: ParamVector,
    arch: MlpArchitecture,
    domain: DomainBox,
    resolution: int,
    path: Path,
    config_hash: str | None = None,
) -> Path:
    """CSV of (x_1, x_2, f) on a resolution × resolution grid over Ω, corners included."""
    df = grid_frame(theta, arch, domain, resolution)
    if config_hash is not None:
        df["config_hash"] = config_hash
    return write_csv(df, path)


# --- execution ---


def _execute(
    jobs: list[Job],
    work: Callable[[Job], T],
    workers: int,
    on_done: Callable[[Job, T], None],
    desc: str,
) -> tuple[dict[tuple[str, str, int], T], tuple[Job, DivergedError] | None]:
    """Run jobs in a pool; stop scheduling new ones after the first divergence."""
    done: dict[tuple[str, str, int], T] = {}
    failure: tuple[Job, DivergedError] | None = None
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = {pool.submit(work, job): job for job in jobs}
        for future in tqdm(as_completed(futures), total=len(futures), desc=desc, unit="run"):
            job = futures[future]
            try:
                out = future.result()
            except CancelledError:
                continue
            except DivergedError as exc:
                logger.error("%s diverged: %s", job.label, exc)
                if failure is None or job.key < failure[0].key:
                    failure = (job, exc)
                for pending in futures:
                    pending.cancel()
                continue
            done[job.key] = out
            on_done(job, out)
    return done, failure


class _RunWriter:
    """Per-run files and MLflow runs; called from the collecting thread only."""

    def __init__(self, config: RunConfig, output_dir: Path):
        self.config = config
        self.output_dir = output_dir
        self.tracking = config.tracking.enabled
        if self.tracking:
            setup_experiment(config.tracking.experiment_name or config.name, config.tracking.tracking_uri)

    def __call__(self, job: Job, outcome: RunOutcome) -> None:
        out = self.config.output
        digest = outcome.row["config_hash"]
        fitted = outcome.fitted
        files = []

        trace = fitted.trace.copy()
        trace["config_hash"] = digest
        files.append(write_csv(trace, self.output_dir / "diagnostics" / f"{job.stem}.csv"))
        if out.save_params:
            files.append(fitted.theta.save_csv(self.output_dir / "params" / f"{job.stem}.csv", config_hash=digest))
        if out.dump_grid and fitted.arch.input_dim == 2:
            files.append(
                dump_grid(
                    fitted.theta, fitted.arch, outcome.prepared.hovr_domain, out.grid_resolution,
                    self.output_dir / "grids" / f"{job.stem}.csv", config_hash=digest,
                )
            )
        if out.dump_datasets:
            files.append(
                dump_dataset(
                    outcome.prepared.train, self.output_dir / "datasets" / f"{job.stem}.csv", config_hash=digest
                )
            )

        if self.tracking:
            with mlflow.start_run(run_name=job.stem):
                mlflow.set_tags(
                    {"experiment": job.experiment, "method": job.method, "dataset": job.dataset, "seed": str(job.seed)}
                )
                log_pydantic_params(job.config)
                log_run_metrics(outcome.row, fitted.trace)
                for path in files:
                    log_artifact_file(path)


def _result_row(job: Job, fitted: FitResult, prepared: PreparedData, elapsed: float) -> dict[str, Any]:
    score_h = job.config.validation_study.score_h_fraction
    return {
        "method": job.method,
        "dataset": job.dataset,
        "seed": job.seed,
        "pmse": pmse(fitted.theta, fitted.arch, prepared.test),
        "val_score": robust_validation_score(fitted.theta, fitted.arch, prepared.score, score_h),
        "wall_time_s": elapsed,
        "config_hash": job.config_hash,
    }


def _train(job: Job, prepared: PreparedData) -> RunOutcome:
    start = time.perf_counter()
    fitted = fit(job.config, prepared.train, job.seed, hovr_domain=prepared.hovr_domain)
    elapsed = time.perf_counter() - start
    row = _result_row(job, fitted, prepared, elapsed)
    logger.debug("%s: PMSE=%.6g val=%.6g (%.1fs)", job.label, row["pmse"], row["val_score"], elapsed)
    return RunOutcome(row=row, fitted=fitted, prepared=prepared)


# --- tables ---


def results_table(rows: Iterable[dict[str, Any]], record_wall_time: bool) -> pd.DataFrame:
    df = pd.DataFrame(list(rows), columns=RESULT_COLUMNS)
    if not record_wall_time:
        df = df.drop(columns=["wall_time_s"])
    return df.sort_values(SORT_KEYS, kind="stable").reset_index(drop=True)


def summary_table(results: pd.DataFrame, experiment_hash: str) -> pd.DataFrame:
    """Mean and sample sd of PMSE (and mean robust score) per (method, dataset)."""
    if results.empty:
        return pd.DataFrame(
            columns=["method", "dataset", "n_seeds", "pmse_mean", "pmse_sd", "val_score_mean", "config_hash"]
        )
    grouped = results.groupby(["method", "dataset"], sort=True)
    out = grouped.agg(
        n_seeds=("seed", "count"),
        pmse_mean=("pmse", "mean"),
        pmse_sd=("pmse", "std"),
        val_score_mean=("val_score", "mean"),
    ).reset_index()
    out["config_hash"] = experiment_hash
    return out


def convergence_table(outcomes: dict[tuple[str, str, int], RunOutcome]) -> pd.DataFrame:
    rows = []
    for (method, dataset, seed), outcome in sorted(outcomes.items()):
        report = outcome.fitted.report
        if report is None:
            continue
        trace = report.criticality_trace()
        rows.append(
            {
                "method": method,
                "dataset": dataset,
                "seed": seed,
                "tau": report.stopping_index,
                "convergence_bound": report.convergence_bound,
                "F_initial": report.records[0].F,
                "F_final": report.records[-1].F,
                "criticality_initial": float(trace.iloc[0]) if len(trace) else math.nan,
                "criticality_min": float(trace.min()) if len(trace) else math.nan,
                "config_hash": outcome.row["config_hash"],
            }
        )
    return pd.DataFrame(rows)


def correlation_table(results: pd.DataFrame, experiment_hash: str) -> pd.DataFrame:
    """Per dataset: Pearson/Spearman between per-method mean robust score and mean PMSE."""
    rows = []
    for dataset, part in results.groupby("dataset", sort=True):
        means = part.groupby("method", sort=True)[["val_score", "pmse"]].mean()
        try:
            corr = correlations(means["val_score"].to_numpy(), means["pmse"].to_numpy())
            pearson, spearman = corr.pearson, corr.spearman
        except UndefinedCorrelationError as exc:
            logger.warning("Correlation on %s left empty: %s", dataset, exc)
            pearson = spearman = math.nan
        rows.append(
            {
                "dataset": dataset,
                "n_configs": len(means),
                "n_seeds": int(part["seed"].nunique()),
                "pearson": pearson,
                "spearman": spearman,
                "config_hash": experiment_hash,
            }
        )
    return pd.DataFrame(rows)


def _experiment_hash(config: RunConfig) -> str:
    return config_hash(config, exclude={"output", "tracking"})


def _write_tables(output_dir: Path, tables: dict[str, pd.DataFrame]) -> None:
    for name, df in tables.items():
        write_csv(df, output_dir / f"{name}.csv")
    if "summary" in tables and not tables["summary"].empty:
        logger.info("Summary:\n%s", tables["summary"].drop(columns=["config_hash"]).to_markdown(index=False, floatfmt=".4g"))


def _raise_on_failure(failure: tuple[Job, DivergedError] | None) -> None:
    if failure is not None:
        job, exc = failure
        raise RunDivergedError(job.label, exc) from exc


# --- experiment kinds ---


def _grid_jobs(config: RunConfig, sections: list[DataSection]) -> list[Job]:
    return [
        Job(experiment=config.name, method=name, config=method_config, data=section, seed=seed)
        for name, method_config in resolve_methods(config)
        for section in sections
        for seed in config.seeds
    ]


def _run_training_grid(
    config: RunConfig,
    output_dir: Path,
    workers: int,
    jobs: list[Job],
    prepare: Callable[[Job], PreparedData],
) -> tuple[dict[str, pd.DataFrame], dict, tuple[Job, DivergedError] | None]:
    writer = _RunWriter(config, output_dir)
    outcomes, failure = _execute(jobs, lambda job: _train(job, prepare(job)), workers, writer, config.name)
    results = results_table((o.row for o in outcomes.values()), config.output.record_wall_time)
    tables = {"results": results, "summary": summary_table(results, _experiment_hash(config))}
    convergence = convergence_table(outcomes)
    if not convergence.empty:
        tables["convergence"] = convergence
    return tables, outcomes, failure


def run_grid_experiment(config: RunConfig, output_dir: Path, workers: int) -> ExperimentResult:
    """single / synthetic_table / ablation / benchmark: methods × datasets × seeds."""
    sections = config.data_sections
    _check_unique_labels(sections)
    sources = load_sources(sections)
    jobs = _grid_jobs(config, sections)
    logger.info("%s: %d runs (%s)", config.name, len(jobs), config.experiment.value)

    tables, _, failure = _run_training_grid(
        config, output_dir, workers, jobs, lambda job: prepare_data(job.data, job.seed, sources)
    )
    _write_tables(output_dir, tables)
    _raise_on_failure(failure)
    return ExperimentResult(output_dir=output_dir, tables=tables)


def validation_grid(config: RunConfig) -> list[tuple[str, RunConfig]]:
    """ARTL over λ × k × h_fraction; method names spell out the grid point."""
    study = config.validation_study
    methods = []
    for lam in study.lambdas:
        for k in study.ks:
            for h_fraction in study.h_fractions:
                name = f"artl_lambda={lam:g}_k={k}_h={h_fraction:g}"
                try:
                    variant = config.with_overrides(
                        loss={"kind": "artl", "h_fraction": h_fraction}, hovr={"lambda": lam, "k": k}
                    )
                except ValidationError as exc:
                    raise InvalidConfigError(f"validation grid point {name}: {exc.errors()[0]['msg']}") from exc
                methods.append((name, variant))
    if len(methods) < 3:
        raise InvalidConfigError(f"validation_study needs at least 3 grid points for a correlation, got {len(methods)}")
    return methods


def run_validation_study(config: RunConfig, output_dir: Path, workers: int) -> ExperimentResult:
    """Robust validation score vs. clean-test PMSE across an ARTL hyperparameter grid."""
    study = config.validation_study
    sections = config.data_sections
    _check_unique_labels(sections)
    sources = load_sources(sections)
    jobs = [
        Job(experiment=config.name, method=name, config=variant, data=section, seed=seed)
        for name, variant in validation_grid(config)
        for section in sections
        for seed in config.seeds
    ]
    logger.info("%s: %d grid points × %d seeds", config.name, len(jobs) // max(len(config.seeds), 1), len(config.seeds))

    tables, _, failure = _run_training_grid(
        config,
        output_dir,
        workers,
        jobs,
        lambda job: prepare_validation_data(job.data, job.seed, sources, study.validation_fraction),
    )
    if failure is None:
        tables["correlation"] = correlation_table(tables["results"], _experiment_hash(config))
        row = tables["correlation"].iloc[0]
        logger.info("Validation score vs PMSE: pearson=%.3f spearman=%.3f", row["pearson"], row["spearman"])
    _write_tables(output_dir, tables)
    _raise_on_failure(failure)
    return ExperimentResult(output_dir=output_dir, tables=tables)


BREAKDOWN_COLUMNS = [
    "method", "dataset", "seed", "m", "magnitude", "hov_contaminated", "hov_clean", "ratio", "config_hash",
]


def _breakdown_row(job: Job, sources: dict[str, Dataset]) -> dict[str, Any]:
    clean = prepare_data(job.data, job.seed, sources).train
    settings = job.config.breakdown
    m = settings.m if settings.m is not None else clean.n - TrimSpec.from_fraction(job.config.loss.h_fraction, clean.n).h
    result = breakdown_stress(job.config, clean, m, settings.magnitude, seed=job.seed, quad_grid=settings.quad_grid)
    return {
        "method": job.method,
        "dataset": job.dataset,
        "seed": job.seed,
        "m": m,
        "magnitude": settings.magnitude,
        "hov_contaminated": result.hov_contaminated,
        "hov_clean": result.hov_clean,
        "ratio": result.ratio,
        "config_hash": job.config_hash,
    }


def run_breakdown_experiment(config: RunConfig, output_dir: Path, workers: int) -> ExperimentResult:
    """HOV of fits with m gross target outliers against the clean fit, per method and seed."""
    sections = config.data_sections
    _check_unique_labels(sections)
    sources = load_sources(sections)
    jobs = _grid_jobs(config, sections)
    rows, failure = _execute(jobs, lambda job: _breakdown_row(job, sources), workers, lambda job, row: None, config.name)
    table = pd.DataFrame(list(rows.values()), columns=BREAKDOWN_COLUMNS)
    table = table.sort_values(SORT_KEYS, kind="stable").reset_index(drop=True)
    tables = {"breakdown": table}
    _write_tables(output_dir, tables)
    _raise_on_failure(failure)
    return ExperimentResult(output_dir=output_dir, tables=tables)


_RUNNERS: dict[ExperimentKind, Callable[[RunConfig, Path, int], ExperimentResult]] = {
    ExperimentKind.SINGLE: run_grid_experiment,
    ExperimentKind.SYNTHETIC_TABLE: run_grid_experiment,
    ExperimentKind.ABLATION: run_grid_experiment,
    ExperimentKind.BENCHMARK: run_grid_experiment,
    ExperimentKind.VALIDATION_STUDY: run_validation_study,
    ExperimentKind.BREAKDOWN: run_breakdown_experiment,
}


def run_experiment(config: RunConfig, workers: int = 1, output_dir: Path | None = None) -> ExperimentResult:
    """Run the configured experiment; result tables are written even when a run diverges."""
    output_dir = Path(output_dir or config.output.dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    runner = _RUNNERS[config.experiment]
    return runner(config, output_dir, workers)
