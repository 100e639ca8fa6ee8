"""
streams.py

Flujos pseudoaleatorios reproducibles basados en contador (numpy Philox).

La clave de 128 bits combina semilla y número de flujo; el índice de bloque
ocupa la mitad alta del contador de 256 bits, de modo que cada bloque de
muestras es independiente del orden y del número de hilos que lo generen.
"""

from __future__ import annotations

import numpy as np

from oscholder.errors import InvalidParameterError

_WORD = 1 << 64


def philox_generator(seed: int, stream: int = 0, chunk: int = 0) -> np.random.Generator:
    """
    Generator for block ``chunk`` of stream ``stream`` under ``seed``.

    Parameters
    ----------
    seed : int
        Seed in [0, 2^64).
    stream : int
        Independent stream label in [0, 2^64).
    chunk : int
        Block index in [0, 2^128).
    """
    if not 0 <= seed < _WORD:
        raise InvalidParameterError(f"Seed must lie in [0, 2^64), got {seed}")
    if not 0 <= stream < _WORD:
        raise InvalidParameterError(f"Stream must lie in [0, 2^64), got {stream}")
    if chunk < 0:
        raise InvalidParameterError(f"Chunk index must be >= 0, got {chunk}")
    key = seed + stream * _WORD
    counter = chunk * _WORD * _WORD
    return np.random.Generator(np.random.Philox(key=key, counter=counter))
