"""
Módulo cli: interfaz de línea de comandos del arnés.
"""

from oscholder.cli.main import build_parser, configure_logging, main, run_main

__all__ = ["build_parser", "configure_logging", "main", "run_main"]
