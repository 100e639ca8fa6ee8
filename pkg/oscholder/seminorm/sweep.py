"""
sweep.py

Barrido en δ de las integrales de oscilación I(δ) = ∫_D osc_δ g dμ y el
estimador de la seminorma de Hölder generalizada

    |g|_{α;gH} ≈ max_{δ ∈ sweep} I(δ) / δ^α,

que es una cota inferior del supremo continuo sobre δ > 0.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from oscholder.errors import EmptySweepError, InvalidParameterError
from oscholder.grid.grid_function import GridFunction, integrate
from oscholder.grid.hull import DEFAULT_HULL_RTOL, domain_diameter
from oscholder.morphology.operators import Kernel, oscillation
from oscholder.morphology.stencil import (
    DEFAULT_MAX_OFFSETS,
    DEFAULT_TIE_RTOL,
    BallMode,
    as_ball_mode,
)
from oscholder.utils.execution import ordered_map

logger = logging.getLogger(__name__)

DEFAULT_RATIO = 2.0 ** 0.25
DEFAULT_DELTA_MIN_CELLS = 2.0
DEFAULT_PLATEAU_RTOL = 0.02
CSV_COLUMNS = ["delta", "I", "I_over_delta_alpha"]


def _is_tie(delta: float, h: float, tie_rtol: float) -> bool:
    tau = (delta / h) ** 2
    return abs(round(tau) - tau) <= tie_rtol * max(1.0, tau)


@dataclass(frozen=True)
class SweepGrid:
    """
    Lista estrictamente creciente de radios δ > 0 en los que se evalúa I(δ).

    ``delta_min``, ``delta_max`` y ``ratio`` guardan la regla de generación
    (``ratio`` es None para listas explícitas).
    """

    deltas: Tuple[float, ...]
    delta_min: float = 0.0
    delta_max: float = 0.0
    ratio: Optional[float] = None

    def __post_init__(self) -> None:
        deltas = tuple(float(d) for d in self.deltas)
        if not deltas:
            raise EmptySweepError("Sweep grid has no δ values")
        if any(not math.isfinite(d) or d <= 0 for d in deltas):
            raise InvalidParameterError(f"Sweep δ values must be finite and > 0, got {deltas}")
        if any(b <= a for a, b in zip(deltas, deltas[1:])):
            raise InvalidParameterError("Sweep δ values must be strictly increasing")
        object.__setattr__(self, "deltas", deltas)
        if not self.delta_min:
            object.__setattr__(self, "delta_min", deltas[0])
        if not self.delta_max:
            object.__setattr__(self, "delta_max", deltas[-1])

    def __len__(self) -> int:
        return len(self.deltas)

    def __iter__(self):
        return iter(self.deltas)

    @classmethod
    def from_values(cls, deltas: Sequence[float]) -> "SweepGrid":
        return cls(tuple(sorted(float(d) for d in deltas)))

    @classmethod
    def geometric(
        cls, delta_min: float, delta_max: float, ratio: float = DEFAULT_RATIO
    ) -> "SweepGrid":
        """δ_k = δ_min·q^k para todo k con δ_k ≤ δ_max."""
        if delta_min <= 0:
            raise InvalidParameterError(f"delta_min must be > 0, got {delta_min}")
        if ratio <= 1:
            raise InvalidParameterError(f"Geometric ratio must be > 1, got {ratio}")
        if delta_max < delta_min:
            raise EmptySweepError(
                f"delta_max={delta_max} is smaller than delta_min={delta_min}"
            )
        count = int(math.floor(math.log(delta_max / delta_min) / math.log(ratio) + 1e-9)) + 1
        deltas = tuple(delta_min * ratio**k for k in range(count))
        return cls(deltas, delta_min, delta_max, ratio)

    @classmethod
    def default_for(
        cls,
        g: GridFunction,
        delta_min_cells: float = DEFAULT_DELTA_MIN_CELLS,
        ratio: float = DEFAULT_RATIO,
        delta_max: Optional[float] = None,
        tie_rtol: float = DEFAULT_TIE_RTOL,
        hull_rtol: float = DEFAULT_HULL_RTOL,
    ) -> "SweepGrid":
        """
        Barrido por defecto de ``g``: desde δ_min = 2h hasta el diámetro del dominio con
        razón 2^{1/4}, evaluado en el límite por la derecha de cada radio de empate.
        """
        delta_min = delta_min_cells * g.spacing
        if delta_max is None:
            delta_max = max(domain_diameter(g, hull_rtol), delta_min)
        grid = cls.geometric(delta_min, delta_max, ratio)
        return grid.tie_free(g.spacing, tie_rtol)

    def tie_free(self, h: float, tie_rtol: float = DEFAULT_TIE_RTOL) -> "SweepGrid":
        """
        Desplaza ligeramente hacia arriba cada δ que cae en un empate (|δ/h|² entero).

        La bola abierta justo por encima de un radio de empate coincide con la
        cerrada en ese radio, así que ambos modos dan las mismas integrales.
        """
        nudge = 1.0 + 4.0 * tie_rtol
        deltas = tuple(d * nudge if _is_tie(d, h, tie_rtol) else d for d in self.deltas)
        return SweepGrid(deltas, self.delta_min, self.delta_max, self.ratio)

    def validation_warnings(self, g: GridFunction, hull_rtol: float = DEFAULT_HULL_RTOL) -> List[str]:
        warnings = []
        if self.deltas[0] < 2.0 * g.spacing * (1.0 - 1e-12):
            warnings.append(
                f"δ_min={self.deltas[0]:.6g} is below the recommended 2h={2 * g.spacing:.6g}"
            )
        diameter = domain_diameter(g, hull_rtol)
        if diameter > 0 and self.deltas[-1] > diameter * (1.0 + 1e-9) and self.deltas[-1] > self.deltas[0]:
            warnings.append(
                f"δ_max={self.deltas[-1]:.6g} exceeds the domain diameter {diameter:.6g}"
            )
        return warnings


@dataclass(frozen=True)
class SweepRecord:
    delta: float
    integral: float
    normalized: float


@dataclass
class SweepReport:
    """
    Integrales de la oscilación por δ y estimación de la seminorma.

    ``estimate`` es max I(δ)/δ^α sobre el barrido, cota inferior del supremo
    continuo. En una rejilla discreta I(δ)/δ^α suele ser plano por debajo de
    la escala donde se alcanza el supremo; por eso ``argmax_delta`` es el mayor
    δ cuyo cociente queda a ``plateau_rtol`` de la estimación.
    """

    records: List[SweepRecord]
    alpha: float
    c: float
    mode: BallMode
    warnings: List[str] = field(default_factory=list)
    plateau_rtol: float = DEFAULT_PLATEAU_RTOL

    @property
    def estimate(self) -> float:
        return max(rec.normalized for rec in self.records)

    @property
    def argmax_delta(self) -> float:
        floor = self.estimate * (1.0 - self.plateau_rtol)
        return max(rec.delta for rec in self.records if rec.normalized >= floor)

    @property
    def deltas(self) -> np.ndarray:
        return np.array([rec.delta for rec in self.records])

    @property
    def integrals(self) -> np.ndarray:
        return np.array([rec.integral for rec in self.records])

    def is_monotone(self) -> bool:
        values = self.integrals
        return bool(np.all(np.diff(values) >= 0))

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [(rec.delta, rec.integral, rec.normalized) for rec in self.records],
            columns=CSV_COLUMNS,
        )

    def to_dict(self) -> Dict:
        return {
            "alpha": self.alpha,
            "c": self.c,
            "mode": self.mode.value,
            "estimate": self.estimate,
            "argmax_delta": self.argmax_delta,
            "plateau_rtol": self.plateau_rtol,
            "records": [
                {"delta": rec.delta, "I": rec.integral, "I_over_delta_alpha": rec.normalized}
                for rec in self.records
            ],
            "warnings": list(self.warnings),
        }


def save_sweep_csv(report: SweepReport, path: str | Path) -> Path:
    """Escribe el barrido como ``delta,I,I_over_delta_alpha`` sin pérdida de precisión."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    report.to_frame().to_csv(path, index=False, float_format="%.17g")
    logger.info(f"Saved sweep CSV ({len(report.records)} rows) to {path}")
    return path


def _check_alpha(alpha: float) -> None:
    if not 0 < alpha <= 1:
        raise InvalidParameterError(f"α must lie in (0, 1], got {alpha}")


def osc_integral_sweep(
    g: GridFunction,
    mode: BallMode | str = BallMode.OPEN,
    sweep: Optional[SweepGrid] = None,
    alpha: float = 1.0,
    c: Optional[float] = None,
    threads: int = 1,
    kernel: Kernel = "auto",
    max_offsets: int = DEFAULT_MAX_OFFSETS,
    tie_rtol: float = DEFAULT_TIE_RTOL,
) -> SweepReport:
    """
    Calcula I(δ) = ∫_D osc_δ g dμ para cada δ del barrido.

    Parameters
    ----------
    g : GridFunction
        Función cuya seminorma se estima.
    mode : BallMode or str
        Modo de bola de la oscilación.
    sweep : SweepGrid, optional
        Radios; ``SweepGrid.default_for(g)`` si se omite.
    alpha : float
        Exponente de Hölder en (0, 1].
    c : float, optional
        Constante de μ = c·Leb; por defecto ``g.c``.
    threads : int
        Hilos de trabajo; las entradas se combinan en orden de δ.

    Returns
    -------
    SweepReport

    Raises
    ------
    EmptySweepError
        Si el barrido no tiene valores de δ.
    """
    _check_alpha(alpha)
    mode = as_ball_mode(mode)
    if sweep is None:
        sweep = SweepGrid.default_for(g, tie_rtol=tie_rtol)
    if len(sweep) == 0:
        raise EmptySweepError("Sweep grid has no δ values")
    scale = g.c if c is None else c

    def _entry(delta: float) -> SweepRecord:
        osc = oscillation(g, delta, mode, kernel, max_offsets, tie_rtol)
        value = integrate(osc, scale)
        return SweepRecord(delta, value, value / delta**alpha)

    records = ordered_map(_entry, sweep.deltas, threads)
    for rec in records:
        logger.debug(f"δ={rec.delta:.6g} I={rec.integral:.6g} I/δ^α={rec.normalized:.6g}")

    report = SweepReport(records, alpha, scale, mode, sweep.validation_warnings(g))
    for message in report.warnings:
        logger.warning(message)
    if not report.is_monotone():
        logger.warning("I(δ) is not nondecreasing over the sweep")
    return report


def gen_holder_seminorm(
    g: GridFunction,
    mode: BallMode | str = BallMode.OPEN,
    sweep: Optional[SweepGrid] = None,
    alpha: float = 1.0,
    c: Optional[float] = None,
    **kwargs,
) -> float:
    """
    Estimación de la seminorma de Hölder generalizada sup_δ δ^{−α}∫_D osc_δ g dμ.

    El valor es una cota inferior del supremo continuo, tomada sobre el barrido
    finito. Los argumentos con nombre se pasan a ``osc_integral_sweep``.
    """
    return osc_integral_sweep(g, mode, sweep, alpha, c, **kwargs).estimate
