import pandas as pd
import pytest

import artl.experiments as experiments
from artl.errors import DivergedError
from artl.run_experiment import EXIT_DIVERGED, EXIT_INVALID_CONFIG, EXIT_OK, main

TINY = """\
name: cli_tiny
seeds: [0, 1, 2]
data:
  function: plane
  n: 16
  n_test: 20
model.hidden_widths: [2]
hovr:
  k: 1
  lambda: 0.001
  mc_samples: 2
optimizer:
  iterations: 3
  criticality_every: 2
  criticality_samples: 8
output:
  dir: unused
  grid_resolution: 2
"""


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "config.yaml"
    path.write_text(TINY)
    return path


def _run(config_file, out, *extra):
    return main(["run", str(config_file), "--output-dir", str(out), "--no-show-progress", *extra])


def test_run_honours_seed_and_output_overrides(config_file, tmp_path):
    out = tmp_path / "out"
    assert _run(config_file, out, "--seeds", "0") == EXIT_OK
    results = pd.read_csv(out / "results.csv")
    assert results["seed"].tolist() == [0]
    assert not (tmp_path / "unused").exists()


def test_invalid_config_exits_with_two(tmp_path):
    path = tmp_path / "bad.yaml"
    path.write_text("hovr:\n  k: 4\n")
    assert _run(path, tmp_path / "out") == EXIT_INVALID_CONFIG


def test_missing_config_exits_with_two(tmp_path):
    assert _run(tmp_path / "absent.yaml", tmp_path / "out") == EXIT_INVALID_CONFIG


def test_bad_seed_list_exits_with_two(config_file, tmp_path):
    assert _run(config_file, tmp_path / "out", "--seeds", "x") == EXIT_INVALID_CONFIG


def test_divergence_exits_with_three(config_file, tmp_path, monkeypatch):
    def fit(config, train, seed, hovr_domain=None):
        raise DivergedError(0)

    monkeypatch.setattr(experiments, "fit", fit)
    out = tmp_path / "out"
    assert _run(config_file, out, "--seeds", "0", "--workers", "1") == EXIT_DIVERGED
    assert (out / "results.csv").exists()


@pytest.mark.parametrize(
    "patch",
    [
        ("  n: 16\n", "  n: 12\n"),
        ("  mc_samples: 2\n", "  mc_samples: 2\n  weights: [{multi_index: [1], w: 0.5}]\n"),
        ("  mc_samples: 2\n", "  mc_samples: 2\n  weights: [{multi_index: [3], w: 1.0}]\n"),
    ],
    ids=["non_square_n", "weights_sum", "index_out_of_range"],
)
def test_invalid_values_exit_with_two(tmp_path, patch):
    path = tmp_path / "config.yaml"
    path.write_text(TINY.replace(*patch))
    out = tmp_path / "out"
    assert _run(path, out) == EXIT_INVALID_CONFIG
    assert not (out / "results.csv").exists()


def test_benchmark_index_beyond_the_csv_exits_with_two(tmp_path, rng):
    X = rng.normal(size=(20, 2))
    pd.DataFrame({"a": X[:, 0], "b": X[:, 1], "y": X.sum(axis=1)}).to_csv(tmp_path / "toy.csv", index=False)
    path = tmp_path / "config.yaml"
    path.write_text(
        "experiment: benchmark\n"
        "seeds: [0]\n"
        "data:\n  source: benchmark\n  csv_path: toy.csv\n  target_column: y\n"
        "model.hidden_widths: [2]\n"
        "hovr:\n  k: 1\n  weights: [{multi_index: [3], w: 1.0}]\n"
        "optimizer.iterations: 2\n"
    )
    assert _run(path, tmp_path / "out") == EXIT_INVALID_CONFIG
