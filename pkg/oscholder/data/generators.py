"""
generators.py

Construcción determinista de funciones de rejilla de entrada para los
escenarios:

* ``constant``: valor constante sobre una rejilla completa.
* ``lattice``: indicador de D ∩ 4rℤ^d con D = [0, L]^d.
* ``disconnected``: D = [−N−1, −N+1] ∪ {0} ∪ [N−1, N+1] y f = indicador de {0}.
* ``disconnected-2d``: dos cuadrados unidos por una franja de una celda.
* ``random``: ruido uniforme con semilla, opcionalmente suavizado.
* ``file``: función leída con ``load_grid_function``.
"""

from __future__ import annotations

import logging
import math
from pathlib import Path
from typing import Any, Callable, Dict, Mapping, Optional

import numpy as np
from scipy.ndimage import gaussian_filter

from oscholder.errors import ScenarioFileNotFoundError, ScenarioSpecError
from oscholder.grid.grid_function import GridFunction, from_samples, load_grid_function
from oscholder.utils.streams import philox_generator

logger = logging.getLogger(__name__)

GENERATOR_STREAM = 13
GRID_RTOL = 1e-9


def _cells(length: float, h: float, name: str) -> int:
    """Number of grid points on [0, length] with spacing h."""
    if h <= 0:
        raise ScenarioSpecError(f"Spacing h must be > 0, got {h}")
    steps = length / h
    if abs(steps - round(steps)) > GRID_RTOL * max(1.0, steps):
        raise ScenarioSpecError(f"{name}={length} is not a multiple of h={h}")
    return int(round(steps)) + 1


_REQUIRED = object()


def _arg(
    spec: Mapping[str, Any], key: str, generator: str, cast: Callable[[Any], Any] = float,
    default: Any = _REQUIRED,
) -> Any:
    """``spec[key]`` convertido con ``cast``; ScenarioSpecError si falta o no convierte."""
    if key not in spec or spec[key] is None:
        if default is _REQUIRED:
            raise ScenarioSpecError(f"Generator '{generator}' needs parameter '{key}'")
        return default
    try:
        return cast(spec[key])
    except (TypeError, ValueError) as e:
        raise ScenarioSpecError(
            f"Generator '{generator}' got an invalid '{key}'={spec[key]!r}: {e}"
        ) from e


def constant_input(
    value: float, n: int, h: float, d: int = 1, origin: Optional[float] = None, c: float = 1.0
) -> GridFunction:
    if n < 1:
        raise ScenarioSpecError(f"Constant generator needs n >= 1, got {n}")
    values = np.full((n,) * d, float(value))
    start = 0.0 if origin is None else float(origin)
    return from_samples(values, h, (start,) * d, c=c)


def lattice_input(L: float, r: float, h: float, d: int = 1, c: float = 1.0) -> GridFunction:
    """
    Indicator of D ∩ 4rℤ^d on D = [0, L]^d.

    Every lattice point marks the grid cell whose center is nearest to it,
    i.e. the cell whose center lies within h/2.
    """
    if r <= 0 or L <= 0:
        raise ScenarioSpecError(f"Lattice generator needs L > 0 and r > 0, got L={L}, r={r}")
    n = _cells(L, h, "L")
    step = 4.0 * r
    count = int(math.floor(L / step * (1.0 + GRID_RTOL))) + 1
    index = np.unique(np.rint(np.arange(count) * step / h).astype(np.int64))
    index = index[index < n]
    values = np.zeros((n,) * d)
    values[np.ix_(*([index] * d))] = 1.0
    logger.debug(f"lattice generator: {len(index) ** d} marked cells out of {n ** d}")
    return from_samples(values, h, (0.0,) * d, c=c)


def disconnected_input(N: float, h: float, c: float = 1.0) -> GridFunction:
    """
    D = [−N−1, −N+1] ∪ {0} ∪ [N−1, N+1] on the grid of spacing h starting at
    −N−1, with f the indicator of {0}; the singleton is a single cell.
    """
    if N < 2:
        raise ScenarioSpecError(f"Disconnected generator needs N >= 2 so the pieces are apart, got {N}")
    n = _cells(2.0 * N + 2.0, h, "2N+2")
    x = -N - 1.0 + h * np.arange(n)
    tol = GRID_RTOL * h
    left = (x >= -N - 1 - tol) & (x <= -N + 1 + tol)
    right = (x >= N - 1 - tol) & (x <= N + 1 + tol)
    centre = np.zeros(n, dtype=bool)
    zero = int(round((N + 1.0) / h))
    centre[zero] = True
    values = np.zeros(n)
    values[zero] = 1.0
    return from_samples(values, h, (-N - 1.0,), left | right | centre, c)


def disconnected_2d_input(N: float, h: float, c: float = 1.0) -> GridFunction:
    """
    Two squares [±N−1, ±N+1] × [−1, 1] joined along y = 0 by a strip one cell
    wide; f is the indicator of the cell at the origin.
    """
    if N < 2:
        raise ScenarioSpecError(f"Disconnected generator needs N >= 2 so the pieces are apart, got {N}")
    nx = _cells(2.0 * N + 2.0, h, "2N+2")
    ny = _cells(2.0, h, "2")
    x = -N - 1.0 + h * np.arange(nx)
    y = -1.0 + h * np.arange(ny)
    X, Y = np.meshgrid(x, y, indexing="ij")
    tol = GRID_RTOL * h
    in_y = np.abs(Y) <= 1 + tol
    squares = in_y & ((np.abs(X + N) <= 1 + tol) | (np.abs(X - N) <= 1 + tol))
    mid = int(round(1.0 / h))
    strip = np.zeros_like(squares)
    strip[:, mid] = True
    zero = int(round((N + 1.0) / h))
    values = np.zeros((nx, ny))
    values[zero, mid] = 1.0
    return from_samples(values, h, (-N - 1.0, -1.0), squares | strip, c)


def random_input(
    n: int,
    h: float,
    d: int = 1,
    seed: int = 0,
    low: float = 0.0,
    high: float = 1.0,
    smooth: float = 0.0,
    domain: str = "full",
    c: float = 1.0,
) -> GridFunction:
    """
    Seeded uniform noise on n^d cells, optionally Gaussian-smoothed with
    standard deviation ``smooth`` cells. ``domain="disk"`` keeps the cells
    inside the inscribed ball.
    """
    if n < 1 or high <= low:
        raise ScenarioSpecError(f"Random generator needs n >= 1 and low < high, got n={n}, [{low}, {high}]")
    rng = philox_generator(seed, GENERATOR_STREAM)
    values = rng.uniform(low, high, size=(n,) * d)
    if smooth > 0:
        values = gaussian_filter(values, sigma=smooth, mode="nearest")
    if domain == "full":
        mask = np.ones(values.shape, dtype=bool)
    elif domain == "disk":
        centre = (n - 1) / 2.0
        grids = np.meshgrid(*([np.arange(n)] * d), indexing="ij")
        radius2 = sum((grid - centre) ** 2 for grid in grids)
        mask = radius2 <= centre**2
    else:
        raise ScenarioSpecError(f"Unknown random domain '{domain}', expected 'full' or 'disk'")
    if not mask.any():
        raise ScenarioSpecError(f"Random generator with domain '{domain}' and n={n} masks every cell")
    return from_samples(values, h, (0.0,) * d, mask, c)


def _from_file(spec: Mapping[str, Any], base_dir: Optional[Path]) -> GridFunction:
    path = Path(_arg(spec, "path", "file", str)).expanduser()
    if base_dir is not None and not path.is_absolute():
        path = base_dir / path
    if not path.exists():
        raise ScenarioFileNotFoundError(f"Grid file not found: {path}")
    return load_grid_function(path)


_BUILDERS: Dict[str, Callable[[Mapping[str, Any]], GridFunction]] = {
    "constant": lambda s: constant_input(
        _arg(s, "value", "constant"), _arg(s, "n", "constant", int), _arg(s, "h", "constant"),
        _arg(s, "d", "constant", int, 1), _arg(s, "origin", "constant", default=None),
        _arg(s, "c", "constant", default=1.0),
    ),
    "lattice": lambda s: lattice_input(
        _arg(s, "L", "lattice", default=1.0), _arg(s, "r", "lattice"), _arg(s, "h", "lattice"),
        _arg(s, "d", "lattice", int, 1), _arg(s, "c", "lattice", default=1.0),
    ),
    "disconnected": lambda s: disconnected_input(
        _arg(s, "N", "disconnected"), _arg(s, "h", "disconnected"),
        _arg(s, "c", "disconnected", default=1.0),
    ),
    "disconnected-2d": lambda s: disconnected_2d_input(
        _arg(s, "N", "disconnected-2d"), _arg(s, "h", "disconnected-2d"),
        _arg(s, "c", "disconnected-2d", default=1.0),
    ),
    "random": lambda s: random_input(
        _arg(s, "n", "random", int), _arg(s, "h", "random"), _arg(s, "d", "random", int, 1),
        _arg(s, "seed", "random", int, 0), _arg(s, "low", "random", default=0.0),
        _arg(s, "high", "random", default=1.0), _arg(s, "smooth", "random", default=0.0),
        _arg(s, "domain", "random", str, "full"), _arg(s, "c", "random", default=1.0),
    ),
}

GENERATORS = tuple(_BUILDERS) + ("file",)


def generate_input(spec: Mapping[str, Any], base_dir: Optional[Path] = None) -> GridFunction:
    """
    Build the input grid function described by ``spec``.

    Parameters
    ----------
    spec : mapping
        ``{"generator": <name>, ...parameters}``; see the module docstring.
    base_dir : Path, optional
        Directory against which relative ``file`` paths are resolved.

    Raises
    ------
    ScenarioSpecError
        Unknown generator, missing parameters or an empty mask.
    ScenarioFileNotFoundError
        Missing grid file for the ``file`` generator.
    """
    if not isinstance(spec, Mapping) or "generator" not in spec:
        raise ScenarioSpecError(f"Input specification needs a 'generator' field: {spec!r}")
    name = spec["generator"]
    if name == "file":
        g = _from_file(spec, base_dir)
    elif name in _BUILDERS:
        g = _BUILDERS[name](spec)
    else:
        raise ScenarioSpecError(f"Unknown generator '{name}'. Must be one of {GENERATORS}")
    logger.info(f"Generated input '{name}': d={g.dim}, shape={g.shape}, masked cells={g.masked_count}")
    return g
