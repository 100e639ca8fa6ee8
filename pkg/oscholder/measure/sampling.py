"""
sampling.py

Estimación Monte Carlo de volúmenes por fracción de aciertos en una caja,
con flujos Philox por bloques: el bloque i de un flujo se genera siempre con
el mismo contador, por lo que el resultado no depende del número de hilos.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from oscholder.errors import InvalidParameterError, OnTargetSetError
from oscholder.utils.execution import ordered_map
from oscholder.utils.streams import philox_generator

logger = logging.getLogger(__name__)

DEFAULT_CHUNK_SIZE = 65_536
DEFAULT_MAX_RETRIES = 8

Membership = Callable[[np.ndarray], np.ndarray]
Box = Tuple[np.ndarray, np.ndarray]


@dataclass(frozen=True)
class VolumeEstimate:
    """
    Estimación de volumen por fracción de aciertos.

    ``estimate`` = volumen de la caja × aciertos/n y ``stderr`` =
    volumen de la caja × sqrt(p̂(1 − p̂)/n).
    """

    estimate: float
    stderr: float
    n: int
    hits: int
    seed: int
    box: Box = field(repr=False)
    box_volume: float = 0.0
    stream: int = 0
    redraws: int = 0

    @property
    def fraction(self) -> float:
        return self.hits / self.n

    def to_dict(self) -> dict:
        return {
            "estimate": self.estimate,
            "stderr": self.stderr,
            "n": self.n,
            "hits": self.hits,
            "seed": self.seed,
            "stream": self.stream,
            "box_lo": np.asarray(self.box[0]).tolist(),
            "box_hi": np.asarray(self.box[1]).tolist(),
            "box_volume": self.box_volume,
            "redraws": self.redraws,
        }


def as_box(box: Tuple[Sequence[float], Sequence[float]]) -> Box:
    lo = np.asarray(box[0], dtype=np.float64).reshape(-1)
    hi = np.asarray(box[1], dtype=np.float64).reshape(-1)
    if lo.shape != hi.shape:
        raise InvalidParameterError(f"Box corners have different dimensions: {lo.shape} vs {hi.shape}")
    if not (np.isfinite(lo).all() and np.isfinite(hi).all()):
        raise InvalidParameterError("Sampling box must be bounded")
    if np.any(hi <= lo):
        raise InvalidParameterError(f"Sampling box is degenerate: lo={lo.tolist()}, hi={hi.tolist()}")
    return lo, hi


def grow_box(box: Box, margin: float) -> Box:
    lo, hi = box
    return lo - margin, hi + margin


def box_volume(box: Box) -> float:
    return math.prod(float(v) for v in box[1] - box[0])


def uniform_points(rng: np.random.Generator, box: Box, n: int) -> np.ndarray:
    lo, hi = box
    return lo + (hi - lo) * rng.random((n, lo.size))


def _chunk_sizes(n: int, chunk_size: int) -> list:
    full, rest = divmod(n, chunk_size)
    return [chunk_size] * full + ([rest] if rest else [])


def _count_chunk(
    membership: Membership,
    box: Box,
    size: int,
    seed: int,
    stream: int,
    chunk: int,
    max_retries: int,
) -> Tuple[int, int]:
    rng = philox_generator(seed, stream, chunk)
    points = uniform_points(rng, box, size)
    redraws = 0
    for _ in range(max_retries + 1):
        try:
            return int(np.count_nonzero(membership(points))), redraws
        except OnTargetSetError as e:
            if e.mask is None:
                raise
            offending = np.asarray(e.mask, dtype=bool)
            redraws += int(offending.sum())
            points[offending] = uniform_points(rng, box, int(offending.sum()))
            logger.debug(f"Chunk {chunk}: redrew {int(offending.sum())} on-target samples")
    raise OnTargetSetError(
        f"Chunk {chunk} still hits the target set after {max_retries} redraws"
    )


def mc_volume(
    membership: Membership,
    box: Tuple[Sequence[float], Sequence[float]],
    n: int,
    seed: int = 0,
    stream: int = 0,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
    max_retries: int = DEFAULT_MAX_RETRIES,
    threads: int = 1,
) -> VolumeEstimate:
    """
    Volumen Monte Carlo de ``{x ∈ box : membership(x)}``.

    Las muestras se generan uniformes en ``box`` en bloques de ``chunk_size``;
    el bloque i usa el bloque de contador i de ``(seed, stream)`` y los aciertos
    se suman en orden de bloque. Las muestras para las que ``membership`` lanza
    ``OnTargetSetError`` se vuelven a generar con el mismo generador del bloque.

    Parameters
    ----------
    membership : callable
        Predicado vectorizado que lleva un array ``(m, d)`` a m booleanos.
    box : (lo, hi)
        Caja de muestreo acotada y no degenerada.
    n : int
        Número de muestras (≥ 1).
    seed, stream : int
        Componentes de la clave Philox.

    Returns
    -------
    VolumeEstimate
    """
    if n < 1:
        raise InvalidParameterError(f"Sample count must be >= 1, got {n}")
    if chunk_size < 1:
        raise InvalidParameterError(f"Chunk size must be >= 1, got {chunk_size}")
    bx = as_box(box)
    volume = box_volume(bx)
    sizes = _chunk_sizes(n, chunk_size)

    def _work(chunk: int) -> Tuple[int, int]:
        return _count_chunk(membership, bx, sizes[chunk], seed, stream, chunk, max_retries)

    counts = ordered_map(_work, range(len(sizes)), threads)
    hits = sum(c for c, _ in counts)
    redraws = sum(r for _, r in counts)
    p = hits / n
    estimate = volume * p
    stderr = volume * math.sqrt(p * (1.0 - p) / n)
    logger.debug(f"mc_volume: n={n} hits={hits} estimate={estimate:.6g} ± {stderr:.3g}")
    return VolumeEstimate(estimate, stderr, n, hits, seed, bx, volume, stream, redraws)


def sample_in_set(
    contains: Membership,
    box: Tuple[Sequence[float], Sequence[float]],
    n: int,
    seed: int = 0,
    stream: int = 0,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
    max_chunks: int = 1000,
) -> np.ndarray:
    """
    ``n`` puntos uniformes en ``{x ∈ box : contains(x)}`` por muestreo de rechazo.

    Raises
    ------
    InvalidParameterError
        Si se aceptan menos de ``n`` puntos en ``max_chunks`` bloques.
    """
    bx = as_box(box)
    accepted = []
    total = 0
    for chunk in range(max_chunks):
        rng = philox_generator(seed, stream, chunk)
        points = uniform_points(rng, bx, chunk_size)
        keep = points[np.asarray(contains(points), dtype=bool)]
        accepted.append(keep)
        total += len(keep)
        if total >= n:
            return np.concatenate(accepted)[:n]
    raise InvalidParameterError(
        f"Only {total} of {n} samples fell inside the set after {max_chunks} chunks"
    )


def ratio_stderr(num: VolumeEstimate, den: VolumeEstimate) -> Tuple[float, float]:
    """Cociente de dos estimaciones independientes y su error estándar de primer orden."""
    if den.estimate <= 0:
        return float("nan"), float("inf")
    ratio = num.estimate / den.estimate
    rel_num = num.stderr / num.estimate if num.estimate > 0 else 0.0
    rel_den = den.stderr / den.estimate
    err = abs(ratio) * math.sqrt(rel_num**2 + rel_den**2)
    if num.estimate == 0:
        err = num.stderr / den.estimate
    return ratio, err
