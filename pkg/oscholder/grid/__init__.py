"""
Módulo grid: funciones muestreadas en rejillas uniformes, E/S binaria y
utilidades de envolvente convexa.
"""

from oscholder.grid.grid_function import (
    GridFunction,
    from_samples,
    integrate,
    load_grid_function,
    save_grid_function,
)
from oscholder.grid.hull import (
    HullInfo,
    convex_hull_volume,
    domain_diameter,
    extend_to_hull,
    hull_membership,
)

__all__ = [
    "GridFunction",
    "HullInfo",
    "convex_hull_volume",
    "domain_diameter",
    "extend_to_hull",
    "from_samples",
    "hull_membership",
    "integrate",
    "load_grid_function",
    "save_grid_function",
]
