"""
Exception hierarchy shared by the oscholder subpackages.

Every error raised on purpose by the library derives from ``OscHolderError`` so
the CLI can tell configuration problems (exit code 2) from check failures
(exit code 1).
"""

from __future__ import annotations

from typing import Optional

import numpy as np


class OscHolderError(Exception):
    """Base class for all oscholder errors."""

    pass


class GridFormatError(OscHolderError):
    """Raised when a grid-function file or array violates the grid format."""

    pass


class UnsupportedDimensionError(OscHolderError):
    """Raised when an operation is asked for a dimension it cannot handle."""

    pass


class StencilBudgetError(OscHolderError):
    """Raised when a ball stencil would exceed the configured offset budget."""

    pass


class EmptySweepError(OscHolderError):
    """Raised when a δ-sweep has no entries."""

    pass


class OutsideHypothesisError(OscHolderError):
    """Raised when the parameters of a check violate the statement's hypothesis."""

    pass


class OnTargetSetError(OscHolderError):
    """
    Raised when a membership oracle is evaluated on (or numerically on) the
    target set H.

    The ``mask`` attribute flags the offending rows of a batch so that Monte
    Carlo callers can discard exactly those samples and draw replacements.
    """

    def __init__(self, message: str, mask: Optional[np.ndarray] = None):
        super().__init__(message)
        self.mask = mask


class InvalidParameterError(OscHolderError, ValueError):
    """Raised when a library function receives an argument outside its domain."""

    pass


class ScenarioSpecError(OscHolderError):
    """Raised when a scenario specification is invalid."""

    pass


class ScenarioFileNotFoundError(FileNotFoundError):
    """Raised when a scenario or grid file referenced by a scenario is missing."""

    pass
