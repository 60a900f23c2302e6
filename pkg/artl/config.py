"""YAML experiment configs → validated RunConfig, with line-precise error messages."""
from __future__ import annotations

import logging
import os
import re
from pathlib import Path
from typing import Any, Sequence

import yaml
from dotenv import load_dotenv
from pydantic import ValidationError

from artl.errors import InvalidConfigError
from data_models.run_config import RunConfig

logger = logging.getLogger(__name__)

WORKERS_ENV = "ARTL_WORKERS"

# cross-field messages name the offending key as section.field
_DOTTED_FIELD = re.compile(r"\b([a-z_]+\.[a-z_]+)\b")


def expand_dotted(data: dict[str, Any]) -> dict[str, Any]:
    """{"hovr.k": 2} → {"hovr": {"k": 2}}, merged with any nested section of the same name."""
    out: dict[str, Any] = {}
    for key, value in data.items():
        if isinstance(value, dict):
            value = expand_dotted(value)
        parts = str(key).split(".")
        target = out
        for part in parts[:-1]:
            existing = target.get(part)
            if not isinstance(existing, dict):
                existing = {}
                target[part] = existing
            target = existing
        leaf = parts[-1]
        if isinstance(value, dict) and isinstance(target.get(leaf), dict):
            target[leaf].update(value)
        else:
            target[leaf] = value
    return out


def _key_line(root: yaml.Node | None, loc: Sequence[Any]) -> int | None:
    """1-based line of the deepest key along ``loc`` that exists in the YAML node tree."""
    node = root
    line: int | None = None
    remaining = [str(p) for p in loc]
    while remaining and node is not None:
        if isinstance(node, yaml.MappingNode):
            match = None
            for key_node, value_node in node.value:
                key = str(key_node.value)
                key_parts = key.split(".")
                if remaining[: len(key_parts)] == key_parts:
                    match = (key_node, value_node, len(key_parts))
                    break
            if match is None:
                break
            key_node, node, consumed = match
            line = key_node.start_mark.line + 1
            remaining = remaining[consumed:]
        elif isinstance(node, yaml.SequenceNode) and remaining[0].isdigit():
            idx = int(remaining[0])
            if idx >= len(node.value):
                break
            node = node.value[idx]
            line = node.start_mark.line + 1
            remaining = remaining[1:]
        else:
            break
    return line


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    try:
        raw = yaml.safe_load(text)
        root = yaml.compose(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line = mark.line + 1 if mark is not None else None
        problem = getattr(exc, "problem", None) or str(exc)
        raise InvalidConfigError(f"{source}: invalid YAML: {problem}", line=line) from exc

    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise InvalidConfigError(f"{source}: top level must be a mapping", line=1)

    try:
        return RunConfig.model_validate(expand_dotted(raw))
    except ValidationError as exc:
        first = exc.errors()[0]
        loc = [p for p in first["loc"] if not str(p).startswith("function-")]
        field = ".".join(str(p) for p in loc) or "<root>"
        if not loc:
            hint = _DOTTED_FIELD.search(first["msg"])
            loc = hint.group(1).split(".") if hint else []
        line = _key_line(root, loc) if loc else None
        raise InvalidConfigError(f"{source}: {field}: {first['msg']}", line=line, field=field) from exc


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise InvalidConfigError(f"Config file not found: {path}")
    config = parse_config(path.read_text(encoding="utf-8"), source=path.name)
    if config.data.csv_path is not None or config.datasets:
        config = _resolve_csv_paths(config, path.parent)
    logger.debug("Loaded config %s (%s)", path, config.experiment.value)
    return config


def _resolve_csv_paths(config: RunConfig, base: Path) -> RunConfig:
    """Relative csv_path entries are taken relative to the config file, unless they exist as given."""

    def resolve(section):
        if section.csv_path is None or section.csv_path.is_absolute() or section.csv_path.exists():
            return section
        candidate = base / section.csv_path
        return section.model_copy(update={"csv_path": candidate}) if candidate.exists() else section

    return config.model_copy(
        update={"data": resolve(config.data), "datasets": [resolve(d) for d in config.datasets]}
    )


def parse_seeds(text: str) -> list[int]:
    try:
        seeds = [int(part) for part in text.split(",") if part.strip()]
    except ValueError as exc:
        raise InvalidConfigError(f"--seeds must be a comma-separated list of integers, got {text!r}") from exc
    if not seeds:
        raise InvalidConfigError("--seeds is empty")
    return seeds


def resolve_workers(cli_value: int | None, env_file: str | None = None) -> int:
    """--workers, else $ARTL_WORKERS, else 1."""
    load_dotenv(dotenv_path=env_file, override=False)
    if cli_value is not None:
        workers = cli_value
    else:
        raw = os.getenv(WORKERS_ENV)
        try:
            workers = int(raw) if raw else 1
        except ValueError as exc:
            raise InvalidConfigError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from exc
    if workers < 1:
        raise InvalidConfigError(f"worker count must be >= 1, got {workers}")
    return workers
