"""
Exception hierarchy for perimeter-defense-lab.

Library code raises these; the CLI and the HTTP router translate them.
"""

from __future__ import annotations

from typing import Optional


class PerimeterDefenseError(Exception):
    """Base class for every error raised by this package."""


class DomainError(PerimeterDefenseError, ValueError):
    """Numeric input outside the domain of an operation (non-finite, R <= 0, ...)."""


class AlreadyAtPerimeter(PerimeterDefenseError, ValueError):
    """The intruder is on or inside the perimeter; the one-on-one game is over."""


class NoBracket(PerimeterDefenseError, RuntimeError):
    """The sign scan found no cell where the breaching-angle residual changes sign."""


class SolverError(PerimeterDefenseError, RuntimeError):
    """Bisection did not converge within the iteration budget."""


class MatchingSizeError(PerimeterDefenseError, ValueError):
    """Brute-force matching refused because the instance is too large."""


class ShapeError(PerimeterDefenseError, ValueError):
    """Array shapes violate the network contract."""


class LabelError(PerimeterDefenseError, ValueError):
    """A training label points at a masked (invalid) slot."""


class CheckpointError(PerimeterDefenseError, ValueError):
    """A model checkpoint is malformed or its shapes do not match its hyperparameters."""


class ConfigError(PerimeterDefenseError, ValueError):
    """A configuration value (usually from the environment) is malformed."""


class DatasetFormatError(PerimeterDefenseError, ValueError):
    """A dataset line could not be parsed."""

    def __init__(self, message: str, line_number: Optional[int] = None):
        self.line_number = line_number
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)


__all__ = [
    "PerimeterDefenseError",
    "DomainError",
    "AlreadyAtPerimeter",
    "NoBracket",
    "SolverError",
    "MatchingSizeError",
    "ShapeError",
    "LabelError",
    "CheckpointError",
    "ConfigError",
    "DatasetFormatError",
]
