"""
Exception hierarchy for the Dual Curriculum Design laboratory.

Every error raised on purpose by the package derives from DcdError, so the
CLI can turn any of them into a clean exit status.
"""

from typing import Optional


class DcdError(Exception):
    """Base class for all package errors."""


class InvalidInputError(DcdError, ValueError):
    """Bad arguments: dimension mismatch, out-of-range values, empty inputs."""


class LevelParseError(InvalidInputError):
    """Malformed level text. Line and column are 1-based."""

    def __init__(self, message: str, line: int, column: int = 1):
        self.line = line
        self.column = column
        super().__init__(f"line {line}, column {column}: {message}")


class SolverError(DcdError, RuntimeError):
    """The zero-sum solver did not certify within the tolerance."""

    def __init__(self, message: str, exploitability: float):
        self.exploitability = exploitability
        super().__init__(f"{message} (last exploitability {exploitability:.3e})")


class PreconditionError(DcdError, ValueError):
    """An operation was called on inputs that do not meet its precondition."""


class ContractViolationError(DcdError, RuntimeError):
    """An orchestration contract was broken (e.g. training on an eval rollout)."""


class ConfigError(DcdError, ValueError):
    """Invalid configuration. `key` is the flag-style name of the offending knob."""

    def __init__(self, message: str, key: Optional[str] = None):
        self.key = key
        if key is not None and key not in message:
            message = f"{key}: {message}"
        super().__init__(message)
