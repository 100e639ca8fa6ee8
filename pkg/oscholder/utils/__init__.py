"""
Utilidades compartidas: resolución de hilos de ejecución, sumas deterministas
y flujos pseudoaleatorios reproducibles.
"""

from oscholder.utils.execution import ordered_map, resolve_threads
from oscholder.utils.streams import philox_generator
from oscholder.utils.summation import stable_sum

__all__ = ["ordered_map", "philox_generator", "resolve_threads", "stable_sum"]
