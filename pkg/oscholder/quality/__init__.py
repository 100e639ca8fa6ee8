"""
Módulo quality: informes de verificación y su serialización.
"""

from oscholder.quality.report import (
    CheckReport,
    print_check_report,
    print_summary,
    save_report,
    to_jsonable,
    write_csv,
    write_json,
)

__all__ = [
    "CheckReport",
    "print_check_report",
    "print_summary",
    "save_report",
    "to_jsonable",
    "write_csv",
    "write_json",
]
