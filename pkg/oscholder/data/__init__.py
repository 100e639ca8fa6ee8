"""
Módulo data: configuración del arnés y generadores de funciones de entrada.
"""

from oscholder.data.config import HarnessConfig, load_harness_config
from oscholder.data.generators import GENERATORS, generate_input

__all__ = ["GENERATORS", "HarnessConfig", "generate_input", "load_harness_config"]
