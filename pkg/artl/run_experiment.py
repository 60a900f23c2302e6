from __future__ import annotations

import argparse
import contextlib
import logging
import sys
from pathlib import Path
from typing import Sequence

from pydantic import ValidationError

from artl.config import load_config, parse_seeds, resolve_workers
from artl.errors import (
    EmptyDataError,
    InvalidConfigError,
    InvalidInputError,
    RunDivergedError,
    SchemaError,
    UnsupportedDimensionError,
)
from artl.experiments import run_experiment

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVALID_CONFIG = 2
EXIT_DIVERGED = 3


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="artl",
        description="Robust MLP regression with trimmed loss and higher-order variation regularisation.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="Run the experiment described by a YAML config.")
    run.add_argument("config", type=Path, help="Path to the experiment config.yaml.")
    run.add_argument("--seeds", default=None, help="Comma-separated seeds overriding the config, e.g. 0,1,2.")
    run.add_argument("--output-dir", type=Path, default=None, help="Overrides output.dir from the config.")
    run.add_argument("--workers", type=int, default=None, help="Parallel runs (falls back to $ARTL_WORKERS, then 1).")
    run.add_argument("--env-file", default=None, help="Path to a .env file (defaults to .env discovery).")
    run.add_argument(
        "--log-level",
        default="INFO",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        help="Python logging verbosity.",
    )
    run.add_argument("--log-file", default=None, help="Optional log file path (in addition to stderr).")
    run.add_argument(
        "--show-progress",
        action=argparse.BooleanOptionalAction,
        default=True,
        help="Route log lines through tqdm so progress bars stay intact.",
    )
    return p


def _setup_logging(*, level: str, log_file: str | None) -> None:
    handlers: list[logging.Handler] = [logging.StreamHandler()]
    if log_file:
        handlers.append(logging.FileHandler(log_file))

    logging.basicConfig(
        level=getattr(logging, level, logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        datefmt="%H:%M:%S",
        handlers=handlers,
    )


def run(
    config_path: Path,
    *,
    seeds: str | None = None,
    output_dir: Path | None = None,
    workers: int | None = None,
    env_file: str | None = None,
) -> int:
    """Load, run and report; returns the process exit status."""
    try:
        config = load_config(config_path)
        if seeds is not None:
            config = config.model_copy(update={"seeds": parse_seeds(seeds)})
        n_workers = resolve_workers(workers, env_file)
    except InvalidConfigError as exc:
        logger.error("Invalid config: %s", exc)
        return EXIT_INVALID_CONFIG

    try:
        result = run_experiment(config, workers=n_workers, output_dir=output_dir)
    except RunDivergedError as exc:
        logger.error("Training diverged in %s; completed runs were written", exc)
        return EXIT_DIVERGED
    except (
        InvalidConfigError,
        InvalidInputError,
        UnsupportedDimensionError,
        SchemaError,
        EmptyDataError,
        FileNotFoundError,
        ValidationError,
    ) as exc:
        logger.error("Invalid config: %s", exc)
        return EXIT_INVALID_CONFIG

    logger.info("Results written to %s", result.output_dir)
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    _setup_logging(level=str(args.log_level).upper(), log_file=args.log_file)

    if args.show_progress:
        from tqdm.contrib.logging import logging_redirect_tqdm

        progress_ctx = logging_redirect_tqdm()
    else:
        progress_ctx = contextlib.nullcontext()

    with progress_ctx:
        return run(
            args.config,
            seeds=args.seeds,
            output_dir=args.output_dir,
            workers=args.workers,
            env_file=args.env_file,
        )


if __name__ == "__main__":
    sys.exit(main())
