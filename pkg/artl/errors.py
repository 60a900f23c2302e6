from __future__ import annotations


class ArtlError(Exception):
    """Base class for all errors raised by the package."""


class NumericalOverflowError(ArtlError, FloatingPointError):
    def __init__(self, node_index: int, op: str | None = None):
        self.node_index = node_index
        self.op = op
        where = f" ({op})" if op else ""
        super().__init__(f"Non-finite value at tape node {node_index}{where}")


class UnsupportedOrderError(ArtlError, ValueError):
    pass


class InputShapeError(ArtlError, ValueError):
    pass


class InvalidConfigError(ArtlError, ValueError):
    def __init__(self, message: str, *, line: int | None = None, field: str | None = None):
        self.line = line
        self.field = field
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(f"{prefix}{message}")


class UnsupportedDimensionError(ArtlError, ValueError):
    pass


class InvalidInputError(ArtlError, ValueError):
    pass


class DivergedError(ArtlError, FloatingPointError):
    def __init__(self, iteration: int, detail: str = "non-finite gradient"):
        self.iteration = iteration
        super().__init__(f"Training diverged at iteration {iteration}: {detail}")


class SchemaError(ArtlError, KeyError):
    def __str__(self) -> str:  # KeyError quotes its message otherwise
        return str(self.args[0]) if self.args else ""


class EmptyDataError(ArtlError, ValueError):
    pass


class UndefinedCorrelationError(ArtlError, ValueError):
    pass


class RunDivergedError(ArtlError):
    """A training run of an experiment diverged; ``run`` names experiment/method/dataset/seed."""

    def __init__(self, run: str, cause: DivergedError):
        self.run = run
        self.cause = cause
        super().__init__(f"{run}: {cause}")
