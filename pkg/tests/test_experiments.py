import contextlib

import numpy as np
import pandas as pd
import pytest

import artl.experiments as experiments
from artl.autodiff.params import ParamVector
from artl.errors import DivergedError, InvalidConfigError, RunDivergedError, UnsupportedDimensionError
from artl.experiments import (
    correlation_table,
    dump_grid,
    grid_frame,
    resolve_methods,
    run_experiment,
    validation_grid,
)
from data_models.architecture import DomainBox, MlpArchitecture
from support import linear_theta

TWO_PI = 2 * np.pi


def _read(path):
    return pd.read_csv(path)


def test_single_run_writes_every_table(tiny_config, tmp_path):
    out = tmp_path / "single"
    result = run_experiment(tiny_config, output_dir=out)

    results = _read(out / "results.csv")
    assert list(results.columns) == ["method", "dataset", "seed", "pmse", "val_score", "config_hash"]
    assert results[["method", "dataset"]].drop_duplicates().values.tolist() == [["artl", "checkered"]]
    assert results["seed"].tolist() == [0, 1]
    assert results["config_hash"].str.len().eq(12).all()
    assert results["config_hash"].nunique() == 2
    pd.testing.assert_frame_equal(results, result.results, check_dtype=False)

    trace = _read(out / "diagnostics" / "artl__checkered__seed0.csv")
    assert len(trace) == tiny_config.optimizer.iterations + 1
    assert "config_hash" in trace.columns

    grid = _read(out / "grids" / "artl__checkered__seed0.csv")
    assert len(grid) == 9
    assert list(grid.columns) == ["x_1", "x_2", "f", "config_hash"]

    theta = ParamVector.load_csv(out / "params" / "artl__checkered__seed1.csv")
    assert theta.layout_string == "3x2;1x3"

    summary = _read(out / "summary.csv")
    assert summary.loc[0, "n_seeds"] == 2
    convergence = _read(out / "convergence.csv")
    assert convergence["seed"].tolist() == [0, 1]
    assert (convergence["criticality_min"] <= convergence["criticality_initial"]).all()


def test_wall_time_is_opt_in(tiny_config, tmp_path):
    config = tiny_config.with_overrides(output={"record_wall_time": True, "dump_grid": False, "save_params": False})
    run_experiment(config, output_dir=tmp_path)
    assert "wall_time_s" in _read(tmp_path / "results.csv").columns
    assert not (tmp_path / "grids").exists()
    assert not (tmp_path / "params").exists()


def test_reruns_are_byte_identical(tiny_config, tmp_path):
    run_experiment(tiny_config, workers=1, output_dir=tmp_path / "a")
    run_experiment(tiny_config, workers=2, output_dir=tmp_path / "b")
    run_experiment(tiny_config, workers=1, output_dir=tmp_path / "a")
    for name in ["results.csv", "summary.csv", "convergence.csv", "diagnostics/artl__checkered__seed1.csv"]:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_worker_count_does_not_change_the_tables(tiny_config, tmp_path):
    config = tiny_config.model_copy(update={"seeds": [0, 1, 2, 3]})
    run_experiment(config, workers=1, output_dir=tmp_path / "serial")
    run_experiment(config, workers=4, output_dir=tmp_path / "parallel")
    for name in ["results.csv", "summary.csv", "convergence.csv"]:
        assert (tmp_path / "serial" / name).read_bytes() == (tmp_path / "parallel" / name).read_bytes()


def test_ablation_has_a_row_per_arm_and_seed(tiny_config, tmp_path):
    config = tiny_config.model_validate(
        {
            **tiny_config.model_dump(by_alias=True),
            "experiment": "ablation",
            "methods": [
                {"name": "ttl_hovr"},
                {"name": "ttl_only", "loss": {"kind": "trimmed_only"}},
                {"name": "hovr_only", "loss": {"kind": "hovr_only"}},
            ],
        }
    )
    results = run_experiment(config, output_dir=tmp_path).results
    assert len(results) == 6
    assert results["method"].tolist() == ["hovr_only"] * 2 + ["ttl_hovr"] * 2 + ["ttl_only"] * 2


def test_duplicate_method_names_are_rejected(tiny_config):
    config = tiny_config.model_validate({**tiny_config.model_dump(by_alias=True), "methods": [{"name": "a"}, {"name": "a"}]})
    with pytest.raises(InvalidConfigError):
        resolve_methods(config)


def test_invalid_method_override_is_a_config_error(tiny_config):
    config = tiny_config.model_validate(
        {**tiny_config.model_dump(by_alias=True), "methods": [{"name": "bad", "hovr": {"k": 5}}]}
    )
    with pytest.raises(InvalidConfigError, match="bad"):
        resolve_methods(config)


def test_validation_study_writes_a_correlation_row(tiny_config, tmp_path):
    config = tiny_config.model_validate(
        {
            **tiny_config.model_dump(by_alias=True),
            "experiment": "validation_study",
            "validation_study": {"lambdas": [1e-3, 1e-1], "ks": [1], "h_fractions": [0.8, 0.9]},
        }
    )
    assert [name for name, _ in validation_grid(config)][0] == "artl_lambda=0.001_k=1_h=0.8"
    result = run_experiment(config, output_dir=tmp_path)
    assert len(result.results) == 8
    corr = _read(tmp_path / "correlation.csv")
    assert corr.loc[0, "n_configs"] == 4
    assert -1.0 <= corr.loc[0, "pearson"] <= 1.0


def test_constant_scores_leave_the_correlation_empty(caplog):
    results = pd.DataFrame(
        {
            "method": ["a", "b", "c"] * 2,
            "dataset": ["plane"] * 6,
            "seed": [0, 0, 0, 1, 1, 1],
            "pmse": [0.1, 0.2, 0.3, 0.1, 0.2, 0.3],
            "val_score": [0.5] * 6,
        }
    )
    table = correlation_table(results, "abc")
    assert table["n_configs"].tolist() == [3]
    assert table[["pearson", "spearman"]].isna().all(axis=None)
    assert "left empty" in caplog.text


def test_validation_grid_needs_three_points(tiny_config):
    config = tiny_config.with_overrides(validation_study={"lambdas": [1e-3], "ks": [1], "h_fractions": [0.9]})
    with pytest.raises(InvalidConfigError):
        validation_grid(config)


def test_breakdown_table(tiny_config, tmp_path):
    config = tiny_config.model_validate(
        {
            **tiny_config.model_dump(by_alias=True),
            "experiment": "breakdown",
            "breakdown": {"magnitude": 1e6, "quad_grid": 4},
            "methods": [{"name": "artl"}, {"name": "mse", "loss": {"kind": "mse"}}],
        }
    )
    table = run_experiment(config, output_dir=tmp_path).tables["breakdown"]
    assert len(table) == 4
    assert table["m"].eq(2).all()
    assert np.isfinite(table["hov_clean"]).all()
    assert (tmp_path / "breakdown.csv").exists()


def test_grid_corners_and_values():
    frame = grid_frame(linear_theta([1.0, 2.0]), MlpArchitecture(input_dim=2, hidden_widths=[]), DomainBox.square(0.0, TWO_PI, 2), 3)
    assert len(frame) == 9
    assert frame.iloc[0][["x_1", "x_2"]].tolist() == [0.0, 0.0]
    assert frame.iloc[-1][["x_1", "x_2"]].tolist() == pytest.approx([TWO_PI, TWO_PI])
    np.testing.assert_allclose(frame["f"], frame["x_1"] + 2 * frame["x_2"])


def test_constant_model_grid(tmp_path, unit_square):
    arch = MlpArchitecture(input_dim=2, hidden_widths=[])
    path = dump_grid(linear_theta([0.0, 0.0], 1.5), arch, unit_square, 4, tmp_path / "g.csv", config_hash="h")
    df = _read(path)
    assert df["f"].eq(1.5).all()
    assert df["config_hash"].eq("h").all()


def test_grid_needs_two_inputs(unit_square):
    arch = MlpArchitecture(input_dim=3, hidden_widths=[])
    theta = ParamVector.for_architecture(arch, np.zeros(4))
    with pytest.raises(UnsupportedDimensionError):
        grid_frame(theta, arch, DomainBox.square(0.0, 1.0, 3), 3)
    arch2 = MlpArchitecture(input_dim=2, hidden_widths=[])
    with pytest.raises(InvalidConfigError):
        grid_frame(linear_theta([1.0, 1.0]), arch2, unit_square, 1)


def test_divergence_keeps_completed_runs(tiny_config, tmp_path, monkeypatch):
    real_fit = experiments.fit

    def fit(config, train, seed, hovr_domain=None):
        if seed == 1:
            raise DivergedError(4)
        return real_fit(config, train, seed, hovr_domain=hovr_domain)

    monkeypatch.setattr(experiments, "fit", fit)
    with pytest.raises(RunDivergedError) as err:
        run_experiment(tiny_config, output_dir=tmp_path)
    assert err.value.run == "tiny/artl/checkered/seed=1"
    assert err.value.cause.iteration == 4
    results = _read(tmp_path / "results.csv")
    assert results["seed"].tolist() == [0]
    assert (tmp_path / "diagnostics" / "artl__checkered__seed0.csv").exists()


def test_benchmark_experiment(tiny_config, tmp_path, rng):
    X = rng.normal(size=(30, 2))
    df = pd.DataFrame({"a": X[:, 0], "b": X[:, 1], "id": range(30), "target": X[:, 0] - X[:, 1]})
    csv = tmp_path / "toy.csv"
    df.to_csv(csv, index=False)
    config = tiny_config.model_validate(
        {
            **tiny_config.model_dump(by_alias=True),
            "experiment": "benchmark",
            "data": {
                "source": "benchmark",
                "name": "toy",
                "csv_path": str(csv),
                "drop_columns": ["id"],
                "target_column": "target",
                "outlier_fraction": 0.05,
            },
            "output": {"dir": str(tmp_path / "out"), "grid_resolution": 3, "dump_datasets": True},
        }
    )
    run_experiment(config)
    results = _read(tmp_path / "out" / "results.csv")
    assert results["dataset"].unique().tolist() == ["toy"]
    train = _read(tmp_path / "out" / "datasets" / "artl__toy__seed0.csv")
    assert len(train) == 21
    assert train["is_outlier"].sum() == 1
    seed0 = results.loc[results["seed"] == 0, "config_hash"].item()
    assert train["config_hash"].unique().tolist() == [seed0]


def test_tracking_logs_each_run(tiny_config, tmp_path, monkeypatch):
    import mlflow

    runs, artifacts = [], []
    monkeypatch.setattr(mlflow, "set_tracking_uri", lambda uri: None)
    monkeypatch.setattr(mlflow, "set_experiment", lambda name: None)
    monkeypatch.setattr(mlflow, "start_run", lambda run_name=None: runs.append(run_name) or contextlib.nullcontext())
    monkeypatch.setattr(mlflow, "set_tags", lambda tags: None)
    monkeypatch.setattr(mlflow, "log_params", lambda params: None)
    monkeypatch.setattr(mlflow, "log_metrics", lambda metrics, step=None: None)
    monkeypatch.setattr(mlflow, "log_artifact", lambda path, artifact_path=None: artifacts.append(path))

    config = tiny_config.with_overrides(tracking={"enabled": True, "tracking_uri": "file:/dev/null"})
    run_experiment(config, output_dir=tmp_path)
    assert sorted(runs) == ["artl__checkered__seed0", "artl__checkered__seed1"]
    assert len(artifacts) == 6
