"""
target.py

Conjunto objetivo H como lista finita de sitios, proyección al sitio más
cercano π y el mapa de aproximación T_Δ.

    T_Δ x = x + Δ·(π(x) − x)/|π(x) − x|   si d(x, H) > Δ
    T_Δ x = π(x)                          si d(x, H) ≤ Δ

Las consultas de vecino más cercano usan ``scipy.spatial.cKDTree``; el árbol
es inmutable y puede compartirse entre hilos.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Any, Literal, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial import cKDTree

from oscholder.errors import InvalidParameterError, ScenarioSpecError
from oscholder.grid.grid_function import GridFunction, load_grid_function
from oscholder.utils.streams import philox_generator

logger = logging.getLogger(__name__)

DEFAULT_TIE_RTOL = 1e-12
DUPLICATE_RTOL = 1e-12
_NEIGHBOURS = 4
TARGET_STREAM = 11

Provenance = Literal["explicit", "mask", "sample"]


@dataclass(frozen=True, eq=False)
class TargetSet:
    """
    Conjunto finito y no vacío de sitios distintos H ⊂ ℝ^d.

    Attributes
    ----------
    sites : np.ndarray
        Array ``(m, d)`` con las coordenadas de los sitios.
    provenance : str
        ``"explicit"``, ``"mask"`` (centros de las celdas de una máscara) o
        ``"sample"`` (puntos muestreados de una forma analítica).
    """

    sites: np.ndarray = field(repr=False)
    provenance: Provenance = "explicit"

    def __post_init__(self) -> None:
        sites = np.array(self.sites, dtype=np.float64, copy=True)
        if sites.ndim == 1:
            sites = sites.reshape(1, -1)
        if sites.ndim != 2 or sites.shape[0] == 0 or sites.shape[1] == 0:
            raise InvalidParameterError("Target set must be a nonempty (m, d) array of sites")
        if not np.isfinite(sites).all():
            raise InvalidParameterError("Target set sites must be finite")
        sites.setflags(write=False)
        object.__setattr__(self, "sites", sites)
        duplicates = self.tree.query_pairs(DUPLICATE_RTOL * self.scale)
        if duplicates:
            i, j = sorted(next(iter(duplicates)))
            raise InvalidParameterError(f"Duplicate sites {i} and {j} in target set")

    @property
    def dim(self) -> int:
        return self.sites.shape[1]

    def __len__(self) -> int:
        return self.sites.shape[0]

    @cached_property
    def scale(self) -> float:
        return max(1.0, float(np.max(np.abs(self.sites))))

    @cached_property
    def tree(self) -> cKDTree:
        return cKDTree(self.sites)

    @classmethod
    def from_points(cls, points: Sequence[Sequence[float]]) -> "TargetSet":
        return cls(np.asarray(points, dtype=np.float64), "explicit")

    @classmethod
    def from_mask(cls, g: GridFunction) -> "TargetSet":
        return cls(g.centers(), "mask")

    @classmethod
    def random(
        cls,
        n: int,
        d: int,
        seed: int = 0,
        low: float = -1.0,
        high: float = 1.0,
        stream: int = TARGET_STREAM,
    ) -> "TargetSet":
        """``n`` sitios uniformes en el cubo [low, high)^d de un flujo Philox con semilla."""
        rng = philox_generator(seed, stream)
        return cls(rng.uniform(low, high, size=(n, d)), "sample")

    @classmethod
    def from_dict(cls, spec: Mapping[str, Any], base_dir: Optional[Path] = None) -> "TargetSet":
        """
        Interpreta ``{"sites": [[..], ..]}``, ``{"mask": "<grid header>"}`` o
        ``{"random": {"n": .., "d": .., "seed": .., "low": .., "high": ..}}``.
        """
        if "sites" in spec:
            try:
                return cls.from_points(spec["sites"])
            except ValueError as e:
                raise ScenarioSpecError(f"Invalid target sites: {e}")
        if "mask" in spec:
            path = Path(spec["mask"])
            if base_dir is not None and not path.is_absolute():
                path = base_dir / path
            return cls.from_mask(load_grid_function(path))
        if "random" in spec:
            params = spec["random"]
            return cls.random(int(params["n"]), int(params["d"]), int(params.get("seed", 0)),
                              float(params.get("low", -1.0)), float(params.get("high", 1.0)))
        raise ScenarioSpecError(f"Target set needs 'sites', 'mask' or 'random': {dict(spec)!r}")

    def to_dict(self) -> dict:
        return {"sites": self.sites.tolist(), "provenance": self.provenance}


@dataclass(frozen=True)
class ProjectionResult:
    """Índice del sitio más cercano, su distancia y si otro sitio empata."""

    site: int
    distance: float
    tie: bool = False


def _as_points(points: np.ndarray, d: int) -> np.ndarray:
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if pts.shape[1] != d:
        raise InvalidParameterError(f"Points of dimension {pts.shape[1]} queried against {d}-D sites")
    return pts


def project_many(
    points: np.ndarray,
    H: TargetSet,
    tie_rtol: float = DEFAULT_TIE_RTOL,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Sitios más cercanos de muchos puntos.

    Devuelve los arrays ``(site, distance, tie)``. Empatan los sitios a
    distancia relativa ``tie_rtol`` del más cercano; gana el menor índice.
    """
    pts = _as_points(points, H.dim)
    k = min(len(H), _NEIGHBOURS)
    dist, idx = H.tree.query(pts, k=k)
    dist = dist.reshape(len(pts), k)
    idx = idx.reshape(len(pts), k)

    nearest = dist[:, :1]
    tied = dist <= nearest * (1.0 + tie_rtol)
    n_tied = tied.sum(axis=1)
    site = np.where(tied, idx, np.iinfo(np.int64).max).min(axis=1)

    # todos los vecinos consultados empatan: se recorren todos los sitios
    overflow = np.nonzero((n_tied == k) & (len(H) > k))[0]
    for row in overflow:
        all_dist = np.linalg.norm(H.sites - pts[row], axis=1)
        ties = np.nonzero(all_dist <= all_dist.min() * (1.0 + tie_rtol))[0]
        site[row] = ties[0]
        n_tied[row] = len(ties)

    distance = np.linalg.norm(pts - H.sites[site], axis=1)
    return site.astype(np.int64), distance, n_tied > 1


def project(x: Sequence[float], H: TargetSet, tie_rtol: float = DEFAULT_TIE_RTOL) -> ProjectionResult:
    """
    Sitio más cercano a ``x``; los empates se resuelven con el menor índice y se marcan.
    """
    site, distance, tie = project_many(np.asarray(x, dtype=np.float64)[None, :], H, tie_rtol)
    if tie[0]:
        logger.debug(f"Projection tie at {list(x)}; site {int(site[0])} chosen")
    return ProjectionResult(int(site[0]), float(distance[0]), bool(tie[0]))


def distance_to(points: np.ndarray, H: TargetSet) -> np.ndarray:
    """d(x, H) para cada fila de ``points``."""
    pts = _as_points(points, H.dim)
    dist, _ = H.tree.query(pts, k=1)
    return np.asarray(dist, dtype=np.float64)


def approach_many(
    points: np.ndarray,
    H: TargetSet,
    delta: float,
    tie_rtol: float = DEFAULT_TIE_RTOL,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Aplica T_Δ a cada fila de ``points``.

    Devuelve las imágenes y las marcas de empate de las proyecciones usadas.
    """
    if delta < 0:
        raise InvalidParameterError(f"Δ must be >= 0, got {delta}")
    pts = _as_points(points, H.dim)
    if delta == 0:
        return pts.copy(), np.zeros(len(pts), dtype=bool)
    site, distance, tie = project_many(pts, H, tie_rtol)
    targets = H.sites[site]
    out = targets.copy()
    far = distance > delta
    step = delta / distance[far]
    out[far] = pts[far] + step[:, None] * (targets[far] - pts[far])
    return out, tie


def approach(
    x: Sequence[float],
    H: TargetSet,
    delta: float,
    tie_rtol: float = DEFAULT_TIE_RTOL,
) -> np.ndarray:
    """
    T_Δ x: mueve ``x`` una distancia Δ hacia π(x), o hasta π(x) si d(x, H) ≤ Δ.

    Con Δ = 0, y en los puntos de H, es la identidad.
    """
    images, _ = approach_many(np.asarray(x, dtype=np.float64)[None, :], H, delta, tie_rtol)
    return images[0]
