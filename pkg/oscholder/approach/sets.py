"""
sets.py

Predicados de pertenencia analíticos para los conjuntos A (bolas, coronas,
cajas, semiespacios, combinaciones booleanas y máscaras de rejilla).

Formato JSON::

    {"shape": "ball",      "params": {"center": [..], "radius": R, "closed": false}}
    {"shape": "annulus",   "params": {"center": [..], "inner": a, "outer": b,
                                      "inner_closed": true, "outer_closed": false}}
    {"shape": "box",       "params": {"lo": [..], "hi": [..]}}
    {"shape": "halfspace", "params": {"normal": [..], "offset": t}}   # n·x <= t
    {"shape": "union" | "intersection", "params": {"sets": [ {...}, ... ]}}
    {"shape": "difference", "params": {"base": {...}, "minus": {...}}}
    {"shape": "mask",      "params": {"path": "<grid header>"}}
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Literal, Mapping, Optional, Sequence, Tuple

import numpy as np

from oscholder.errors import InvalidParameterError, ScenarioSpecError
from oscholder.grid.grid_function import GridFunction, load_grid_function

logger = logging.getLogger(__name__)

Shape = Literal[
    "ball", "annulus", "box", "halfspace", "union", "intersection", "difference", "mask"
]
SHAPES = ("ball", "annulus", "box", "halfspace", "union", "intersection", "difference", "mask")


def _vector(raw: Any, name: str) -> np.ndarray:
    try:
        vec = np.asarray(raw, dtype=np.float64).reshape(-1)
    except (TypeError, ValueError):
        raise ScenarioSpecError(f"'{name}' must be a list of numbers, got {raw!r}")
    if vec.size == 0 or not np.isfinite(vec).all():
        raise ScenarioSpecError(f"'{name}' must be a non-empty list of finite numbers")
    return vec


@dataclass(frozen=True, eq=False)
class SetSpec:
    """
    Predicado de pertenencia de un subconjunto de ℝ^d.

    Las instancias se construyen con los classmethods de fábrica o ``from_dict``.
    """

    shape: Shape
    params: Mapping[str, Any] = field(default_factory=dict)
    children: Tuple["SetSpec", ...] = ()
    grid: Optional[GridFunction] = field(default=None, repr=False)

    # ------------------------------------------------------------------
    # fábricas
    # ------------------------------------------------------------------

    @classmethod
    def ball(cls, center: Sequence[float], radius: float, closed: bool = False) -> "SetSpec":
        if radius <= 0:
            raise ScenarioSpecError(f"Ball radius must be > 0, got {radius}")
        return cls("ball", {"center": _vector(center, "center"), "radius": float(radius),
                            "closed": bool(closed)})

    @classmethod
    def annulus(
        cls,
        center: Sequence[float],
        inner: float,
        outer: float,
        inner_closed: bool = True,
        outer_closed: bool = False,
    ) -> "SetSpec":
        """{inner ≤ |x − center| < outer}, con cada esfera abierta o cerrada a elección."""
        if not 0 <= inner < outer:
            raise ScenarioSpecError(f"Annulus needs 0 <= inner < outer, got {inner}, {outer}")
        return cls(
            "annulus",
            {"center": _vector(center, "center"), "inner": float(inner), "outer": float(outer),
             "inner_closed": bool(inner_closed), "outer_closed": bool(outer_closed)},
        )

    @classmethod
    def box(cls, lo: Sequence[float], hi: Sequence[float]) -> "SetSpec":
        lo_v, hi_v = _vector(lo, "lo"), _vector(hi, "hi")
        if lo_v.shape != hi_v.shape or np.any(hi_v <= lo_v):
            raise ScenarioSpecError(f"Box needs lo < hi componentwise, got {lo}, {hi}")
        return cls("box", {"lo": lo_v, "hi": hi_v})

    @classmethod
    def halfspace(cls, normal: Sequence[float], offset: float) -> "SetSpec":
        normal_v = _vector(normal, "normal")
        if not np.any(normal_v):
            raise ScenarioSpecError("Halfspace normal must be nonzero")
        return cls("halfspace", {"normal": normal_v, "offset": float(offset)})

    @classmethod
    def union(cls, *sets: "SetSpec") -> "SetSpec":
        return cls._combine("union", sets)

    @classmethod
    def intersection(cls, *sets: "SetSpec") -> "SetSpec":
        return cls._combine("intersection", sets)

    @classmethod
    def difference(cls, base: "SetSpec", minus: "SetSpec") -> "SetSpec":
        return cls._combine("difference", (base, minus))

    @classmethod
    def from_mask(cls, g: GridFunction) -> "SetSpec":
        """Unión de las celdas semiabiertas de los puntos enmascarados de la rejilla."""
        return cls("mask", {"spacing": g.spacing, "origin": np.asarray(g.origin)}, grid=g)

    @classmethod
    def _combine(cls, shape: Shape, sets: Sequence["SetSpec"]) -> "SetSpec":
        if not sets:
            raise ScenarioSpecError(f"'{shape}' needs at least one set")
        dims = {s.dim for s in sets}
        if len(dims) != 1:
            raise ScenarioSpecError(f"'{shape}' combines sets of different dimensions {dims}")
        return cls(shape, {}, tuple(sets))

    @classmethod
    def from_dict(cls, spec: Mapping[str, Any], base_dir: Optional[Path] = None) -> "SetSpec":
        """Interpreta la forma JSON descrita en la cabecera del módulo."""
        if not isinstance(spec, Mapping) or "shape" not in spec:
            raise ScenarioSpecError(f"Set specification needs a 'shape' field: {spec!r}")
        shape = spec["shape"]
        params = spec.get("params", {})
        if shape not in SHAPES:
            raise ScenarioSpecError(f"Unknown set shape '{shape}'. Must be one of {SHAPES}")
        try:
            if shape == "ball":
                return cls.ball(params["center"], params["radius"], params.get("closed", False))
            if shape == "annulus":
                return cls.annulus(
                    params["center"], params["inner"], params["outer"],
                    params.get("inner_closed", True), params.get("outer_closed", False),
                )
            if shape == "box":
                return cls.box(params["lo"], params["hi"])
            if shape == "halfspace":
                return cls.halfspace(params["normal"], params["offset"])
            if shape in ("union", "intersection"):
                children = [cls.from_dict(s, base_dir) for s in params["sets"]]
                return cls._combine(shape, children)
            if shape == "difference":
                return cls.difference(
                    cls.from_dict(params["base"], base_dir),
                    cls.from_dict(params["minus"], base_dir),
                )
            path = Path(params["path"])
            if base_dir is not None and not path.is_absolute():
                path = base_dir / path
            return cls.from_mask(load_grid_function(path))
        except KeyError as e:
            raise ScenarioSpecError(f"Missing parameter {e} for set shape '{shape}'")

    # ------------------------------------------------------------------
    # consultas
    # ------------------------------------------------------------------

    @property
    def dim(self) -> int:
        if self.shape in ("ball", "annulus"):
            return int(self.params["center"].size)
        if self.shape == "box":
            return int(self.params["lo"].size)
        if self.shape == "halfspace":
            return int(self.params["normal"].size)
        if self.shape == "mask":
            return self.grid.dim
        return self.children[0].dim

    def contains(self, points: np.ndarray) -> np.ndarray:
        """
        Prueba de pertenencia vectorizada.

        ``points`` es un array ``(n, d)`` (o un único vector de dimensión d);
        devuelve un array booleano de longitud n (o un bool).
        """
        pts = np.asarray(points, dtype=np.float64)
        single = pts.ndim == 1
        pts = np.atleast_2d(pts)
        if pts.shape[1] != self.dim:
            raise InvalidParameterError(f"Points of dimension {pts.shape[1]} tested against a {self.dim}-D set")
        inside = self._contains(pts)
        return bool(inside[0]) if single else inside

    def _contains(self, pts: np.ndarray) -> np.ndarray:
        p = self.params
        if self.shape == "ball":
            dist = np.linalg.norm(pts - p["center"], axis=1)
            return dist <= p["radius"] if p["closed"] else dist < p["radius"]
        if self.shape == "annulus":
            dist = np.linalg.norm(pts - p["center"], axis=1)
            lower = dist >= p["inner"] if p["inner_closed"] else dist > p["inner"]
            upper = dist <= p["outer"] if p["outer_closed"] else dist < p["outer"]
            return lower & upper
        if self.shape == "box":
            return np.all((pts >= p["lo"]) & (pts < p["hi"]), axis=1)
        if self.shape == "halfspace":
            return pts @ p["normal"] <= p["offset"]
        if self.shape == "union":
            return np.logical_or.reduce([c._contains(pts) for c in self.children])
        if self.shape == "intersection":
            return np.logical_and.reduce([c._contains(pts) for c in self.children])
        if self.shape == "difference":
            return self.children[0]._contains(pts) & ~self.children[1]._contains(pts)
        return self._mask_contains(pts)

    def _mask_contains(self, pts: np.ndarray) -> np.ndarray:
        g = self.grid
        index = np.floor((pts - np.asarray(g.origin)) / g.spacing + 0.5).astype(np.int64)
        in_grid = np.all((index >= 0) & (index < np.asarray(g.shape)), axis=1)
        inside = np.zeros(len(pts), dtype=bool)
        rows = np.nonzero(in_grid)[0]
        inside[rows] = g.mask[tuple(index[rows].T)]
        return inside

    def bounding_box(self) -> Tuple[np.ndarray, np.ndarray]:
        """Caja alineada con los ejes que contiene al conjunto; ±inf en las direcciones no acotadas."""
        p = self.params
        d = self.dim
        if self.shape == "ball":
            return p["center"] - p["radius"], p["center"] + p["radius"]
        if self.shape == "annulus":
            return p["center"] - p["outer"], p["center"] + p["outer"]
        if self.shape == "box":
            return p["lo"].copy(), p["hi"].copy()
        if self.shape == "halfspace":
            return np.full(d, -np.inf), np.full(d, np.inf)
        if self.shape == "mask":
            centers = self.grid.centers()
            half = self.grid.spacing / 2
            return centers.min(axis=0) - half, centers.max(axis=0) + half
        boxes = [c.bounding_box() for c in self.children]
        if self.shape == "union":
            return (np.min([b[0] for b in boxes], axis=0), np.max([b[1] for b in boxes], axis=0))
        if self.shape == "intersection":
            return (np.max([b[0] for b in boxes], axis=0), np.min([b[1] for b in boxes], axis=0))
        return boxes[0]

    def to_dict(self) -> Dict[str, Any]:
        if self.children:
            if self.shape == "difference":
                params = {"base": self.children[0].to_dict(), "minus": self.children[1].to_dict()}
            else:
                params = {"sets": [c.to_dict() for c in self.children]}
            return {"shape": self.shape, "params": params}
        if self.shape == "mask":
            return {"shape": "mask", "params": {"shape": list(self.grid.shape),
                                                "spacing": self.grid.spacing}}
        params = {k: (v.tolist() if isinstance(v, np.ndarray) else v) for k, v in self.params.items()}
        return {"shape": self.shape, "params": params}
