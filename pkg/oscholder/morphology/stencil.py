"""
stencil.py

Plantillas de desplazamientos enteros para bolas euclídeas abiertas o
cerradas de radio r a paso h.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Dict

import numpy as np
from scipy.special import gamma

from oscholder.errors import InvalidParameterError, StencilBudgetError

logger = logging.getLogger(__name__)

DEFAULT_MAX_OFFSETS = 4_000_000
DEFAULT_TIE_RTOL = 1e-9


class BallMode(str, Enum):
    """Open ball |y − x| < r or closed ball |y − x| ≤ r."""

    OPEN = "open"
    CLOSED = "closed"


def as_ball_mode(mode: "BallMode | str") -> BallMode:
    """Convierte ``"open"``/``"closed"`` en ``BallMode``."""
    try:
        return BallMode(mode)
    except ValueError:
        raise InvalidParameterError(f"Ball mode must be 'open' or 'closed', got {mode!r}") from None


@dataclass(frozen=True, eq=False)
class BallOffsets:
    """
    Integer offsets k with |k|·h inside the ball of radius r.

    ``offsets`` is an ``(n, d)`` int64 array ordered lexicographically and
    always contains the zero vector. ``squared`` holds Σk_i² per offset.
    """

    radius: float
    spacing: float
    mode: BallMode
    offsets: np.ndarray = field(repr=False)
    squared: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return self.offsets.shape[1]

    def __len__(self) -> int:
        return self.offsets.shape[0]

    @property
    def reach(self) -> int:
        """Largest |k_i| over all offsets and axes."""
        return int(np.max(np.abs(self.offsets)))

    def row_half_widths(self) -> Dict[int, int]:
        """
        Map first-axis offset k₀ to the half-width of its row along the last axis.

        Rows of a ball stencil are symmetric integer intervals.
        """
        widths: Dict[int, int] = {}
        for k0 in np.unique(self.offsets[:, 0]):
            row = self.offsets[self.offsets[:, 0] == k0]
            widths[int(k0)] = int(np.max(np.abs(row[:, -1])))
        return widths


def _unit_ball_volume(d: int) -> float:
    return math.pi ** (d / 2) / float(gamma(d / 2 + 1))


def _admit(squared: np.ndarray, tau: float, mode: BallMode, tie_rtol: float) -> np.ndarray:
    tie = np.abs(squared - tau) <= tie_rtol * max(1.0, tau)
    if mode is BallMode.OPEN:
        return (squared < tau) & ~tie
    return (squared <= tau) | tie


@lru_cache(maxsize=256)
def _cached_offsets(
    r: float, h: float, d: int, mode: BallMode, max_offsets: int, tie_rtol: float
) -> BallOffsets:
    ratio = r / h
    tau = ratio * ratio
    reach = int(math.floor(ratio * (1.0 + tie_rtol))) + 1

    estimate = _unit_ball_volume(d) * (ratio + 1.0) ** d
    if estimate > max_offsets * 2:
        raise StencilBudgetError(
            f"Ball stencil r={r}, h={h}, d={d} needs about {estimate:.3g} offsets "
            f"(budget {max_offsets})"
        )

    axis = np.arange(-reach, reach + 1, dtype=np.int64)
    grids = np.meshgrid(*([axis] * d), indexing="ij")
    candidates = np.stack([gr.ravel() for gr in grids], axis=1)
    squared = np.sum(candidates * candidates, axis=1)
    keep = _admit(squared.astype(np.float64), tau, mode, tie_rtol)
    offsets = candidates[keep]
    squared = squared[keep]

    if len(offsets) > max_offsets:
        raise StencilBudgetError(
            f"Ball stencil r={r}, h={h}, d={d} has {len(offsets)} offsets "
            f"(budget {max_offsets})"
        )
    offsets.setflags(write=False)
    squared.setflags(write=False)
    logger.debug(f"Ball stencil r={r} h={h} d={d} {mode.value}: {len(offsets)} offsets")
    return BallOffsets(r, h, mode, offsets, squared)


def ball_offsets(
    r: float,
    h: float,
    d: int,
    mode: BallMode | str = BallMode.OPEN,
    max_offsets: int = DEFAULT_MAX_OFFSETS,
    tie_rtol: float = DEFAULT_TIE_RTOL,
) -> BallOffsets:
    """
    Enumerate the integer offsets of a ball of radius r at spacing h.

    The squared offset norm s is compared with τ = (r/h)²; when
    |s − τ| ≤ tie_rtol·max(1, τ) the offset lies on the sphere, which the
    open ball excludes and the closed ball includes.

    Parameters
    ----------
    r : float
        Radius (> 0 for open balls, ≥ 0 for closed balls).
    h : float
        Grid spacing (> 0).
    d : int
        Dimension.
    mode : BallMode or str
        ``"open"`` or ``"closed"``.
    max_offsets : int
        Budget on the number of offsets.
    tie_rtol : float
        Relative tolerance of the tie rule.

    Returns
    -------
    BallOffsets

    Raises
    ------
    StencilBudgetError
        If the stencil would exceed ``max_offsets``.
    """
    mode = as_ball_mode(mode)
    if not h > 0:
        raise InvalidParameterError(f"Spacing h must be > 0, got {h}")
    if d < 1:
        raise InvalidParameterError(f"Dimension must be >= 1, got {d}")
    if r < 0 or (r == 0 and mode is BallMode.OPEN):
        raise InvalidParameterError(f"Radius must be > 0 for {mode.value} balls, got {r}")
    return _cached_offsets(float(r), float(h), int(d), mode, int(max_offsets), float(tie_rtol))
