"""
grid_function.py

Representación de funciones f: D → ℝ muestreadas en una rejilla uniforme
d-dimensional con máscara de dominio, lectura/escritura del formato binario de
rejilla y la integral respecto a μ = c·Leb.

Grid-function file format
-------------------------
A JSON header::

    {"dim": d, "shape": [...], "spacing": h, "origin": [...], "c": 1.0,
     "data": "<path>", "mask": "<path>" | "full"}

plus raw little-endian IEEE-754 float64 values in row-major order (last axis
fastest) and a mask file with one byte (0/1) per cell in the same order.
Relative paths are resolved against the header's directory.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Sequence, Tuple

import numpy as np

from oscholder.errors import GridFormatError, InvalidParameterError
from oscholder.utils.summation import stable_sum

logger = logging.getLogger(__name__)

# Value stored in unmasked cells. Operators never read it.
SENTINEL = np.nan

_HEADER_KEYS = ("dim", "shape", "spacing", "origin", "data", "mask")


@dataclass(frozen=True, eq=False)
class GridFunction:
    """
    Sampled real function on a uniform isotropic grid with a domain mask.

    Cell ``i`` (a d-tuple of integers) has center ``origin + i * spacing``.
    Masked cells (``mask[i] == True``) are the cells whose centers belong to D.

    Attributes
    ----------
    values : np.ndarray
        float64 array of shape ``shape``; finite on the mask, ``SENTINEL``
        elsewhere.
    mask : np.ndarray
        bool array of shape ``shape``.
    spacing : float
        Isotropic grid spacing h > 0.
    origin : tuple of float
        Center of cell (0, ..., 0).
    c : float
        Constant of μ = c·Leb carried from the file header (1.0 by default).
    """

    values: np.ndarray
    mask: np.ndarray
    spacing: float
    origin: Tuple[float, ...]
    c: float = 1.0

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=np.float64, copy=True)
        mask = np.array(self.mask, dtype=bool, copy=True)

        if values.ndim < 1:
            raise GridFormatError("Grid function must have dim >= 1")
        if mask.shape != values.shape:
            raise GridFormatError(
                f"Mask shape {mask.shape} does not match values shape {values.shape}"
            )
        if any(n < 1 for n in values.shape):
            raise GridFormatError(f"Shape sizes must be >= 1, got {values.shape}")
        if not np.isfinite(self.spacing) or self.spacing <= 0:
            raise GridFormatError(f"Spacing h must be > 0, got {self.spacing}")
        origin = tuple(float(o) for o in self.origin)
        if len(origin) != values.ndim:
            raise GridFormatError(
                f"Origin has {len(origin)} coordinates, expected {values.ndim}"
            )
        if not mask.any():
            raise GridFormatError("Grid function has an empty mask")
        if not np.isfinite(values[mask]).all():
            raise GridFormatError("non-finite value in a masked cell")
        if not np.isfinite(self.c) or self.c <= 0:
            raise GridFormatError(f"Measure constant c must be > 0, got {self.c}")

        values[~mask] = SENTINEL
        values.setflags(write=False)
        mask.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "mask", mask)
        object.__setattr__(self, "spacing", float(self.spacing))
        object.__setattr__(self, "origin", origin)
        object.__setattr__(self, "c", float(self.c))

    @property
    def dim(self) -> int:
        return self.values.ndim

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.values.shape

    @property
    def masked_count(self) -> int:
        return int(np.count_nonzero(self.mask))

    def centers(self, full: bool = False) -> np.ndarray:
        """
        Cell centers as an ``(n, d)`` array in C index order.

        Only masked cells unless ``full`` is True.
        """
        if full:
            index = np.indices(self.shape).reshape(self.dim, -1).T
        else:
            index = np.argwhere(self.mask)
        return np.asarray(self.origin) + index * self.spacing

    def sup(self) -> float:
        return float(np.max(self.values[self.mask]))

    def inf(self) -> float:
        return float(np.min(self.values[self.mask]))

    def measure(self, c: float | None = None) -> float:
        """Estimate of μ(D) = c·h^d·(masked count)."""
        scale = self.c if c is None else c
        return scale * self.spacing**self.dim * self.masked_count

    def perimeter_count(self) -> int:
        """Number of masked cells with a face neighbour outside the mask or the grid."""
        padded = np.pad(self.mask, 1, mode="constant", constant_values=False)
        interior = np.ones(self.shape, dtype=bool)
        core = tuple(slice(1, -1) for _ in range(self.dim))
        for axis in range(self.dim):
            for step in (-1, 1):
                shifted = np.roll(padded, step, axis=axis)[core]
                interior &= shifted
        return int(np.count_nonzero(self.mask & ~interior))

    def with_values(self, values: np.ndarray) -> "GridFunction":
        return GridFunction(values, self.mask, self.spacing, self.origin, self.c)

    def with_mask(self, values: np.ndarray, mask: np.ndarray) -> "GridFunction":
        return GridFunction(values, mask, self.spacing, self.origin, self.c)

    def shifted(self, constant: float) -> "GridFunction":
        return self.with_values(np.where(self.mask, self.values + constant, SENTINEL))

    def scaled(self, factor: float) -> "GridFunction":
        return self.with_values(np.where(self.mask, self.values * factor, SENTINEL))

    def negated(self) -> "GridFunction":
        return self.with_values(np.where(self.mask, -self.values, SENTINEL))


def integrate(g: GridFunction, c: float | None = None) -> float:
    """
    μ-integral of ``g`` over its domain as midpoint quadrature.

    Returns ``c · h^d · Σ_{masked cells} value``; the sum is correctly rounded
    and therefore independent of enumeration order.

    Parameters
    ----------
    g : GridFunction
        Function to integrate.
    c : float, optional
        Constant of μ = c·Leb; defaults to ``g.c``.

    Returns
    -------
    float
        The integral estimate.
    """
    scale = g.c if c is None else c
    if scale <= 0:
        raise InvalidParameterError(f"Measure constant c must be > 0, got {scale}")
    return scale * g.spacing**g.dim * stable_sum(g.values[g.mask])


def _read_header(path: Path) -> Dict[str, Any]:
    try:
        with path.open("r", encoding="utf-8") as fh:
            header = json.load(fh)
    except json.JSONDecodeError as e:
        raise GridFormatError(f"malformed header in {path}: {e}")
    if not isinstance(header, dict):
        raise GridFormatError(f"malformed header in {path}: expected a JSON object")
    missing = [key for key in _HEADER_KEYS if key not in header]
    if missing:
        raise GridFormatError(f"malformed header in {path}: missing {missing}")
    return header


def _parse_spacing(raw: Any) -> float:
    if isinstance(raw, (list, tuple)):
        if len(raw) == 0:
            raise GridFormatError("malformed header: empty spacing list")
        if any(float(s) != float(raw[0]) for s in raw):
            raise GridFormatError(f"anisotropic spacing {raw} is not supported")
        raw = raw[0]
    try:
        spacing = float(raw)
    except (TypeError, ValueError):
        raise GridFormatError(f"malformed header: spacing {raw!r} is not a number")
    if not np.isfinite(spacing) or spacing <= 0:
        raise GridFormatError(f"spacing h must be > 0, got {spacing}")
    return spacing


def load_grid_function(path: str | Path) -> GridFunction:
    """
    Load a grid function from a JSON header and its raw data/mask files.

    Values are read bit-exactly as little-endian float64.

    Raises
    ------
    FileNotFoundError
        If the header or a referenced file does not exist.
    GridFormatError
        Malformed header, data length mismatch, non-finite masked value,
        non-positive or anisotropic spacing.
    """
    header_path = Path(path).expanduser().resolve()
    if not header_path.exists():
        raise FileNotFoundError(f"Grid header not found: {header_path}")
    header = _read_header(header_path)

    dim = int(header["dim"])
    shape = tuple(int(n) for n in header["shape"])
    if dim < 1 or len(shape) != dim:
        raise GridFormatError(f"malformed header: dim={dim} but shape={list(shape)}")
    spacing = _parse_spacing(header["spacing"])
    origin = [float(o) for o in header["origin"]]
    c = float(header.get("c", 1.0))
    n_cells = int(np.prod(shape))

    data_path = (header_path.parent / header["data"]).resolve()
    if not data_path.exists():
        raise FileNotFoundError(f"Grid data file not found: {data_path}")
    data = np.fromfile(data_path, dtype="<f8")
    if data.size != n_cells:
        raise GridFormatError(
            f"length mismatch: shape {list(shape)} needs {n_cells} values, "
            f"{data_path.name} holds {data.size}"
        )

    if header["mask"] == "full":
        mask = np.ones(n_cells, dtype=bool)
    else:
        mask_path = (header_path.parent / header["mask"]).resolve()
        if not mask_path.exists():
            raise FileNotFoundError(f"Grid mask file not found: {mask_path}")
        raw_mask = np.fromfile(mask_path, dtype=np.uint8)
        if raw_mask.size != n_cells:
            raise GridFormatError(
                f"length mismatch: mask {mask_path.name} holds {raw_mask.size} bytes, "
                f"expected {n_cells}"
            )
        if np.any(raw_mask > 1):
            raise GridFormatError(f"mask file {mask_path.name} must contain only 0/1 bytes")
        mask = raw_mask.astype(bool)

    values = data.astype(np.float64).reshape(shape)
    mask = mask.reshape(shape)
    if not np.isfinite(values[mask]).all():
        raise GridFormatError(f"non-finite value in a masked cell of {data_path.name}")

    logger.debug(f"Loaded grid function {shape} h={spacing} from {header_path}")
    return GridFunction(values, mask, spacing, tuple(origin), c)


def save_grid_function(
    g: GridFunction,
    path: str | Path,
    c: float | None = None,
) -> Path:
    """
    Write ``g`` as ``<stem>.json`` + ``<stem>.f64`` (+ ``<stem>.mask``).

    A full mask is recorded as ``"full"`` and no mask file is written.

    Returns
    -------
    Path
        Path of the written header.
    """
    header_path = Path(path).expanduser().resolve()
    header_path.parent.mkdir(parents=True, exist_ok=True)
    stem = header_path.stem
    data_name = f"{stem}.f64"
    g.values.astype("<f8").tofile(header_path.parent / data_name)

    if g.mask.all():
        mask_ref = "full"
    else:
        mask_ref = f"{stem}.mask"
        g.mask.astype(np.uint8).tofile(header_path.parent / mask_ref)

    header = {
        "dim": g.dim,
        "shape": list(g.shape),
        "spacing": g.spacing,
        "origin": list(g.origin),
        "c": g.c if c is None else c,
        "data": data_name,
        "mask": mask_ref,
    }
    with header_path.open("w", encoding="utf-8") as fh:
        json.dump(header, fh, indent=2)
    logger.debug(f"Saved grid function to {header_path}")
    return header_path


def from_samples(
    values: Sequence | np.ndarray,
    spacing: float,
    origin: Sequence[float] | None = None,
    mask: np.ndarray | None = None,
    c: float = 1.0,
) -> GridFunction:
    """Build a GridFunction from an array of samples (full mask by default)."""
    values = np.asarray(values, dtype=np.float64)
    if mask is None:
        mask = np.ones(values.shape, dtype=bool)
    if origin is None:
        origin = (0.0,) * values.ndim
    return GridFunction(values, mask, spacing, tuple(origin), c)
