"""
Módulo de ejecución concurrente con orden de resultados fijo.

Los resultados de las comprobaciones deben ser idénticos byte a byte con
cualquier número de hilos, así que todo el paralelismo pasa por
``ordered_map``: las tareas se reparten entre hilos pero los resultados se
devuelven siempre en el orden de entrada.
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, Optional, TypeVar

logger = logging.getLogger(__name__)

THREADS_ENV_VAR = "OSC_THREADS"

T = TypeVar("T")
R = TypeVar("R")


def resolve_threads(flag: Optional[int] = None, configured: Optional[int] = None) -> int:
    """
    Resuelve el número de hilos a utilizar.

    Prioridad: flag ``--threads`` > variable de entorno ``OSC_THREADS`` >
    valor de configuración > núcleos disponibles.

    Parameters
    ----------
    flag : int, optional
        Valor recibido por línea de comandos.
    configured : int, optional
        Valor de ``execution.threads`` en el YAML de configuración.

    Returns
    -------
    int
        Número de hilos (>= 1).
    """
    if flag is not None:
        threads = flag
    elif os.environ.get(THREADS_ENV_VAR):
        raw = os.environ[THREADS_ENV_VAR]
        try:
            threads = int(raw)
        except ValueError:
            raise ValueError(f"{THREADS_ENV_VAR} must be an integer, got {raw!r}")
    elif configured is not None:
        threads = configured
    else:
        threads = os.cpu_count() or 1

    if threads < 1:
        raise ValueError(f"Thread count must be >= 1, got {threads}")
    return threads


def ordered_map(func: Callable[[T], R], items: Iterable[T], threads: int = 1) -> List[R]:
    """Aplica ``func`` a cada elemento y devuelve los resultados en el orden de entrada."""
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [func(item) for item in items]

    workers = min(threads, len(items))
    logger.debug(f"Dispatching {len(items)} tasks to {workers} threads")
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, items))
