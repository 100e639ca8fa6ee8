"""
hull.py

Envolvente convexa de los centros enmascarados: volumen μ(Conv D), diámetro
del dominio y la extensión de f a la envolvente cerrada D̂ con el valor inf_D f.

Las envolventes se construyen con ``scipy.spatial.ConvexHull`` (d = 2, 3); los
conjuntos degenerados se reducen a su envolvente afín mediante SVD.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
from scipy.spatial import ConvexHull
from scipy.spatial.distance import pdist

from oscholder.errors import InvalidParameterError, UnsupportedDimensionError
from oscholder.grid.grid_function import GridFunction
from oscholder.utils.summation import stable_sum

logger = logging.getLogger(__name__)

MAX_HULL_DIM = 3
DEFAULT_HULL_RTOL = 1e-9


@dataclass(frozen=True)
class HullInfo:
    """
    Convex hull of the masked cell centers.

    Attributes
    ----------
    volume : float
        Lebesgue volume of the hull (length in d=1, area in d=2).
    vertices : np.ndarray
        Hull vertices as an ``(m, d)`` array.
    supported : bool
        False when the volume comes from an override for d > 3.
    degenerate : bool
        True when the centers span a lower-dimensional affine subspace.
    rank : int
        Dimension of that affine subspace.
    """

    volume: float
    vertices: np.ndarray = field(repr=False)
    supported: bool = True
    degenerate: bool = False
    rank: int = 0


@dataclass(frozen=True)
class _AffineFrame:
    center: np.ndarray
    basis: np.ndarray  # (rank, d), orthonormal rows
    rank: int
    scale: float


def _canonical_order(points: np.ndarray) -> np.ndarray:
    # Lexicographic order so the hull does not depend on enumeration order
    order = np.lexsort(points.T[::-1])
    return points[order]


def _affine_frame(points: np.ndarray, rtol: float) -> _AffineFrame:
    center = points.mean(axis=0)
    centered = points - center
    scale = float(np.max(np.abs(centered))) if centered.size else 0.0
    if scale == 0.0:
        return _AffineFrame(center, np.zeros((0, points.shape[1])), 0, 0.0)
    _, singular, vt = np.linalg.svd(centered, full_matrices=False)
    rank = int(np.count_nonzero(singular > rtol * singular[0]))
    return _AffineFrame(center, vt[:rank], rank, scale)


def _polygon_area(vertices: np.ndarray) -> float:
    x, y = vertices[:, 0], vertices[:, 1]
    return 0.5 * abs(stable_sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def _polyhedron_volume(hull: ConvexHull) -> float:
    apex = hull.points[hull.vertices].mean(axis=0)
    tets = hull.points[hull.simplices] - apex
    return stable_sum(np.abs(np.linalg.det(tets))) / 6.0


def _hull_in_frame(points: np.ndarray, frame: _AffineFrame) -> Tuple[np.ndarray, Optional[ConvexHull]]:
    """Project onto the affine frame; build a Qhull hull when rank >= 2."""
    coords = (points - frame.center) @ frame.basis.T
    if frame.rank >= 2:
        return coords, ConvexHull(coords)
    return coords, None


def convex_hull_volume(
    g: GridFunction,
    volume_override: Optional[float] = None,
    hull_rtol: float = DEFAULT_HULL_RTOL,
) -> HullInfo:
    """
    Volume of the convex hull of the masked cell centers.

    d=1 uses the interval length, d=2 the shoelace formula over the hull
    vertices and d=3 a tetrahedral decomposition of the Qhull facets. A
    volume override replaces the computed value and is the only way to get a
    hull volume for d > 3.

    Parameters
    ----------
    g : GridFunction
        Function whose mask defines D.
    volume_override : float, optional
        Configured value of μ(Conv D)/c.
    hull_rtol : float
        Relative tolerance used to decide the affine rank.

    Returns
    -------
    HullInfo

    Raises
    ------
    UnsupportedDimensionError
        If d > 3 and no override is given.
    """
    if volume_override is not None:
        if volume_override < 0:
            raise InvalidParameterError(f"Hull volume override must be >= 0, got {volume_override}")
        logger.info(f"Using configured hull volume {volume_override}")
        return HullInfo(
            volume=float(volume_override),
            vertices=np.empty((0, g.dim)),
            supported=g.dim <= MAX_HULL_DIM,
            degenerate=False,
            rank=g.dim,
        )
    if g.dim > MAX_HULL_DIM:
        raise UnsupportedDimensionError(
            f"Convex hull volume is only computed for d <= {MAX_HULL_DIM}, got d={g.dim}; "
            "set a hull volume override"
        )

    points = _canonical_order(g.centers())
    if g.dim == 1:
        lo, hi = float(points[0, 0]), float(points[-1, 0])
        return HullInfo(
            volume=hi - lo,
            vertices=np.array([[lo], [hi]]),
            degenerate=(hi == lo),
            rank=0 if hi == lo else 1,
        )

    frame = _affine_frame(points, hull_rtol)
    if frame.rank < g.dim:
        logger.warning(
            f"Degenerate hull: masked centers span a {frame.rank}-dimensional "
            f"subspace of R^{g.dim}; volume is 0"
        )
        return HullInfo(
            volume=0.0,
            vertices=_degenerate_vertices(points, frame),
            degenerate=True,
            rank=frame.rank,
        )

    hull = ConvexHull(points)
    if g.dim == 2:
        volume = _polygon_area(points[hull.vertices])
    else:
        volume = _polyhedron_volume(hull)
    return HullInfo(volume=volume, vertices=points[hull.vertices], rank=g.dim)


def _degenerate_vertices(points: np.ndarray, frame: _AffineFrame) -> np.ndarray:
    if frame.rank == 0:
        return points[:1]
    coords, hull = _hull_in_frame(points, frame)
    if hull is None:
        return points[[int(np.argmin(coords[:, 0])), int(np.argmax(coords[:, 0]))]]
    return points[hull.vertices]


def hull_membership(
    g: GridFunction,
    hull_rtol: float = DEFAULT_HULL_RTOL,
) -> np.ndarray:
    """
    Boolean array over the whole grid: cell center inside the closed hull of
    the masked centers, with relative tolerance on every half-space test.
    """
    if g.dim > MAX_HULL_DIM:
        raise UnsupportedDimensionError(
            f"Hull extension is only supported for d <= {MAX_HULL_DIM}, got d={g.dim}"
        )
    points = _canonical_order(g.centers())
    cells = g.centers(full=True)
    frame = _affine_frame(points, hull_rtol)
    tol = hull_rtol * max(1.0, frame.scale)

    if frame.rank == 0:
        inside = np.zeros(len(cells), dtype=bool)
    else:
        coords = (cells - frame.center) @ frame.basis.T
        residual = np.linalg.norm(cells - frame.center - coords @ frame.basis, axis=1)
        inside = residual <= tol
        point_coords, hull = _hull_in_frame(points, frame)
        if hull is None:
            lo, hi = point_coords[:, 0].min(), point_coords[:, 0].max()
            inside &= (coords[:, 0] >= lo - tol) & (coords[:, 0] <= hi + tol)
        else:
            # equations rows are [unit normal, offset]; n·u + b <= 0 inside
            signed = coords @ hull.equations[:, :-1].T + hull.equations[:, -1]
            inside &= np.all(signed <= tol, axis=1)

    return inside.reshape(g.shape) | g.mask


def extend_to_hull(
    g: GridFunction,
    hull_rtol: float = DEFAULT_HULL_RTOL,
) -> GridFunction:
    """
    Extend ``g`` to every grid cell whose center lies in the closed convex hull
    of the masked centers, filling new cells with ``inf_D g``.

    A single masked cell has no hull to extend to and is returned unchanged.
    The operation is idempotent and leaves the original cells untouched.

    Raises
    ------
    UnsupportedDimensionError
        If d > 3.
    """
    if g.dim > MAX_HULL_DIM:
        raise UnsupportedDimensionError(
            f"Hull extension is only supported for d <= {MAX_HULL_DIM}, got d={g.dim}"
        )
    if g.masked_count == 1 or g.mask.all():
        return g

    new_mask = hull_membership(g, hull_rtol)
    added = int(np.count_nonzero(new_mask & ~g.mask))
    if added == 0:
        return g

    floor = g.inf()
    values = np.where(g.mask, g.values, floor)
    logger.debug(f"Hull extension added {added} cells with value {floor}")
    return g.with_mask(values, new_mask)


def domain_diameter(g: GridFunction, hull_rtol: float = DEFAULT_HULL_RTOL) -> float:
    """
    Largest distance between two masked cell centers.

    For d <= 3 only hull vertices are compared; above that all pairs are
    compared when feasible and the bounding-box diagonal is used otherwise.
    """
    if g.masked_count == 1:
        return 0.0
    if g.dim <= MAX_HULL_DIM:
        info = convex_hull_volume(g, hull_rtol=hull_rtol)
        candidates = info.vertices
    else:
        candidates = g.centers()
        if len(candidates) > 5000:
            extent = candidates.max(axis=0) - candidates.min(axis=0)
            logger.warning("Using bounding-box diagonal as domain diameter for d > 3")
            return float(math.sqrt(stable_sum(extent**2)))
    if len(candidates) < 2:
        return 0.0
    return float(pdist(candidates).max())
