"""
report.py

Informes de verificación (CheckReport): valores medidos, cota, holgura,
veredicto y avisos, con escritura JSON determinista e impresión legible.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional

import numpy as np
import pandas as pd

logger = logging.getLogger(__name__)


def to_jsonable(value: Any) -> Any:
    """
    Convert numpy scalars/arrays and non-finite floats into plain JSON values.

    NaN and ±inf become the strings ``"nan"``, ``"inf"`` and ``"-inf"``.
    """
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [to_jsonable(v) for v in value.tolist()]
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return value
    if isinstance(value, Path):
        return str(value)
    if hasattr(value, "value") and isinstance(getattr(value, "value"), str):
        return value.value
    return value


@dataclass
class CheckReport:
    """
    Verdict of one numerical check.

    ``measured`` is compared against ``bound``; ``slack`` is ``bound − measured``
    (positive when the check holds with room to spare). ``sigma`` is the
    standard error of a Monte Carlo measurement, if any.
    """

    check: str
    inputs: Dict[str, Any] = field(default_factory=dict)
    measured: Optional[float] = None
    bound: Optional[float] = None
    slack: Optional[float] = None
    sigma: Optional[float] = None
    verdict: bool = True
    details: Dict[str, Any] = field(default_factory=dict)
    warnings: List[str] = field(default_factory=list)
    errors: List[str] = field(default_factory=list)

    def add_warning(self, message: str) -> None:
        """Añade un warning al informe."""
        self.warnings.append(message)
        logger.warning(f"[{self.check}] {message}")

    def add_error(self, message: str) -> None:
        """Añade un error al informe y marca el veredicto como fallido."""
        self.errors.append(message)
        self.verdict = False
        logger.error(f"[{self.check}] {message}")

    def require(self, condition: bool, message: str) -> bool:
        """Record ``message`` as an error when ``condition`` is false."""
        if not condition:
            self.add_error(message)
        return bool(condition)

    def set_measurement(
        self, measured: float, bound: float, sigma: Optional[float] = None
    ) -> None:
        self.measured = float(measured)
        self.bound = float(bound)
        self.slack = float(bound) - float(measured)
        if sigma is not None:
            self.sigma = float(sigma)

    def to_dict(self) -> Dict[str, Any]:
        return to_jsonable(
            {
                "check": self.check,
                "inputs": self.inputs,
                "measured": self.measured,
                "bound": self.bound,
                "slack": self.slack,
                "sigma": self.sigma,
                "verdict": bool(self.verdict),
                "details": self.details,
                "warnings": self.warnings,
                "errors": self.errors,
            }
        )


def write_json(payload: Any, path: Path) -> Path:
    """Write ``payload`` with sorted keys and two-space indent."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        json.dump(to_jsonable(payload), fh, indent=2, sort_keys=True, ensure_ascii=False)
        fh.write("\n")
    return path


def write_csv(frame: pd.DataFrame, path: Path) -> Path:
    """Write a table with full float precision and no index column."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format="%.17g")
    return path


def save_report(report: CheckReport, output_dir: Path, name: Optional[str] = None) -> Path:
    path = Path(output_dir) / f"{name or report.check}.json"
    write_json(report.to_dict(), path)
    logger.info(f"Saved report '{report.check}' to {path}")
    return path


def _fmt(value: Optional[float]) -> str:
    if value is None:
        return "-"
    return f"{value:.6g}"


def print_check_report(report: CheckReport) -> None:
    """
    Imprime un informe de verificación de forma legible.

    Parameters
    ----------
    report : CheckReport
        Informe a imprimir.
    """
    print(f"\n{'='*80}")
    print(f"CHECK - {report.check}")
    print(f"{'='*80}")
    print(f"  Verdict:   {'PASS' if report.verdict else 'FAIL'}")
    print(f"  Measured:  {_fmt(report.measured)}")
    print(f"  Bound:     {_fmt(report.bound)}")
    print(f"  Slack:     {_fmt(report.slack)}")
    if report.sigma is not None:
        print(f"  Sigma:     {_fmt(report.sigma)}")
    if report.inputs:
        print()
        print("  Inputs:")
        for key in sorted(report.inputs):
            print(f"    - {key}: {to_jsonable(report.inputs[key])}")

    if report.errors:
        print()
        print(f"  Errors ({len(report.errors)}):")
        for error in report.errors:
            print(f"    - {error}")

    if report.warnings:
        print()
        print(f"  Warnings ({len(report.warnings)}):")
        for warning in report.warnings[:10]:
            print(f"    - {warning}")
        if len(report.warnings) > 10:
            print(f"    ... and {len(report.warnings) - 10} more")

    print(f"{'='*80}")


def print_summary(reports: Iterable[CheckReport]) -> None:
    """Print a one-line-per-check summary table."""
    reports = list(reports)
    passed = sum(1 for r in reports if r.verdict)
    print()
    print("=" * 80)
    print("VERIFICATION SUMMARY")
    print("=" * 80)
    for report in reports:
        status = "PASS" if report.verdict else "FAIL"
        print(f"  {report.check:<32} {status:<6} slack={_fmt(report.slack)}")
    print(f"  Checks passed:       {passed}/{len(reports)}")
    print("=" * 80)
