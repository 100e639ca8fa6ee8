"""
checks.py

Verificaciones ejecutables de la cadena de prueba del teorema de la
oscilación: cota final, descomposición g₁/g₂, rama trivial, emparedado
h₁/h₂, densidad de las medidas imagen y módulo de continuidad, además del
acuerdo entre bolas abiertas y cerradas.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from oscholder.errors import InvalidParameterError, OutsideHypothesisError
from oscholder.grid.grid_function import GridFunction, integrate
from oscholder.grid.hull import DEFAULT_HULL_RTOL, convex_hull_volume, extend_to_hull
from oscholder.morphology.operators import Kernel, dilate, erode, oscillation
from oscholder.morphology.stencil import DEFAULT_MAX_OFFSETS, DEFAULT_TIE_RTOL, BallMode, as_ball_mode
from oscholder.quality.report import CheckReport
from oscholder.seminorm.sweep import SweepGrid, SweepReport, osc_integral_sweep
from oscholder.utils.streams import philox_generator

logger = logging.getLogger(__name__)

SPLIT_RTOL = 1e-12
DENSITY_STREAM = 7


def _normalized(g: GridFunction) -> Tuple[GridFunction, float]:
    """Desplaza ``g`` a 0 ≤ g ≤ M y lo devuelve junto con M = sup − inf."""
    floor = g.inf()
    return g.shifted(-floor), g.sup() - floor


def lemma_constant(r: float, delta: float, d: int) -> float:
    """Cota de densidad C(r, δ, d) = 1 / (1 − 2dδ/(r − δ))."""
    return 1.0 / (1.0 - 2.0 * d * delta / (r - delta))


def _require_lemma_hypothesis(r: float, delta: float, d: int) -> None:
    limit = r / (2 * d + 1)
    if not 0 < delta < limit:
        raise OutsideHypothesisError(
            f"outside lemma hypothesis: need 0 < δ < r/(2d+1) = {limit:.6g}, got δ={delta:.6g}"
        )


def _stat_allowance(g: GridFunction, c: float, multiplier: float) -> float:
    return multiplier * c * g.spacing**g.dim * g.perimeter_count()


# ---------------------------------------------------------------------------
# Cota del teorema
# ---------------------------------------------------------------------------


@dataclass
class Thm1Report(CheckReport):
    """
    Bound |osc_r f|_{α;gH} ≤ 2·M·μ(Conv D)·((2d+1)/r)^α.

    ``measured`` es la estimación del lado izquierdo y ``bound`` el derecho; el
    veredicto exige además la descomposición g₁/g₂ y la rama trivial.
    """

    r: float = 0.0
    alpha: float = 1.0
    mode: str = BallMode.OPEN.value
    M: float = 0.0
    hull_volume: float = 0.0
    sweep: Optional[SweepReport] = field(default=None, repr=False)

    @property
    def lhs(self) -> Optional[float]:
        return self.measured

    @property
    def rhs(self) -> Optional[float]:
        return self.bound


def theorem_rhs(M: float, hull_measure: float, d: int, r: float, alpha: float) -> float:
    """2·M·μ(Conv D)·((2d+1)/r)^α."""
    return 2.0 * M * hull_measure * ((2 * d + 1) / r) ** alpha


def trivial_branch_check(
    report: SweepReport,
    r: float,
    M: float,
    measure: float,
    d: int,
    alpha: float,
    rtol: float = SPLIT_RTOL,
) -> Tuple[bool, List[float]]:
    """
    Para cada δ ≥ r/(2d+1) del barrido, I(δ)/δ^α ≤ ((2d+1)/r)^α·M·μ(D).

    Devuelve el veredicto y los valores de δ comprobados.
    """
    limit = ((2 * d + 1) / r) ** alpha * M * measure
    checked = [rec.delta for rec in report.records if rec.delta >= r / (2 * d + 1)]
    ok = all(
        rec.normalized <= limit * (1.0 + rtol) + 1e-300
        for rec in report.records
        if rec.delta >= r / (2 * d + 1)
    )
    return ok, checked


def thm1_check(
    g: GridFunction,
    r: float,
    alpha: float = 1.0,
    mode: BallMode | str = BallMode.OPEN,
    sweep: Optional[SweepGrid] = None,
    c: Optional[float] = None,
    hull_volume: Optional[float] = None,
    rtol: float = 1e-9,
    threads: int = 1,
    kernel: Kernel = "auto",
    max_offsets: int = DEFAULT_MAX_OFFSETS,
    tie_rtol: float = DEFAULT_TIE_RTOL,
    hull_rtol: float = DEFAULT_HULL_RTOL,
) -> Thm1Report:
    """
    Comprueba la cota de la oscilación junto con las piezas de su demostración.

    lhs es la seminorma estimada de osc_r f sobre el barrido; rhs usa
    M = sup − inf, el volumen de la envolvente convexa (o ``hull_volume``) y
    (2d+1)/r. El informe recoge también las estimaciones de g₁ = sup sobre B_r
    y g₂ = inf sobre B_r, y comprueba |osc_r f| ≤ |g₁| + |g₂|, cada
    |g_i| ≤ M·μ(Conv D)·((2d+1)/r)^α y la rama trivial δ ≥ r/(2d+1).
    """
    if r <= 0:
        raise InvalidParameterError(f"Radius r must be > 0, got {r}")
    mode = as_ball_mode(mode)
    scale = g.c if c is None else c
    d = g.dim
    logger.info(f"thm1 check: r={r} α={alpha} mode={mode.value} d={d}")

    info = convex_hull_volume(g, volume_override=hull_volume, hull_rtol=hull_rtol)
    if sweep is None:
        sweep = SweepGrid.default_for(g, tie_rtol=tie_rtol, hull_rtol=hull_rtol)
    shifted, M = _normalized(g)
    hull_measure = scale * info.volume
    rhs = theorem_rhs(M, hull_measure, d, r, alpha)
    split_limit = M * hull_measure * ((2 * d + 1) / r) ** alpha

    opts = dict(kernel=kernel, max_offsets=max_offsets, tie_rtol=tie_rtol)
    osc_r = oscillation(shifted, r, mode, **opts)
    g1 = dilate(shifted, r, mode, **opts)
    g2 = erode(shifted, r, mode, **opts)
    lhs_sweep = osc_integral_sweep(osc_r, BallMode.OPEN, sweep, alpha, scale, threads, **opts)
    g1_est = osc_integral_sweep(g1, BallMode.OPEN, sweep, alpha, scale, threads, **opts).estimate
    g2_est = osc_integral_sweep(g2, BallMode.OPEN, sweep, alpha, scale, threads, **opts).estimate
    lhs = lhs_sweep.estimate

    report = Thm1Report(
        check="thm1",
        inputs={"r": r, "alpha": alpha, "mode": mode.value, "c": scale, "d": d,
                "sweep_size": len(sweep), "hull_volume_override": hull_volume},
        r=r, alpha=alpha, mode=mode.value, M=M, hull_volume=info.volume,
        sweep=lhs_sweep,
    )
    report.set_measurement(lhs, rhs)
    for message in lhs_sweep.warnings:
        report.add_warning(message)
    if info.degenerate:
        report.add_warning(f"Degenerate convex hull (rank {info.rank}); μ(Conv D) = 0")

    trivial_ok, trivial_deltas = trivial_branch_check(
        lhs_sweep, r, M, g.measure(scale), d, alpha
    )
    split_ok = lhs <= (g1_est + g2_est) * (1.0 + SPLIT_RTOL)
    report.details.update(
        {
            "M": M,
            "hull_volume": info.volume,
            "hull_supported": info.supported,
            "argmax_delta": lhs_sweep.argmax_delta,
            "g1_seminorm": g1_est,
            "g2_seminorm": g2_est,
            "split_limit": split_limit,
            "split_ok": split_ok,
            "trivial_branch_ok": trivial_ok,
            "trivial_branch_deltas": len(trivial_deltas),
        }
    )

    report.require(lhs <= rhs * (1.0 + rtol), f"lhs {lhs:.6g} exceeds rhs {rhs:.6g}")
    report.require(split_ok, f"|osc_r f|={lhs:.6g} exceeds |g1|+|g2|={g1_est + g2_est:.6g}")
    for name, est in (("g1", g1_est), ("g2", g2_est)):
        report.require(
            est <= split_limit * (1.0 + rtol),
            f"|{name}|={est:.6g} exceeds M·μ(Conv D)·((2d+1)/r)^α={split_limit:.6g}",
        )
    report.require(trivial_ok, "trivial branch δ ≥ r/(2d+1) violated")
    logger.info(f"thm1 check: lhs={lhs:.6g} rhs={rhs:.6g} verdict={report.verdict}")
    return report


# ---------------------------------------------------------------------------
# Emparedado osc_δ g₁ ≤ h₁ − h₂
# ---------------------------------------------------------------------------


def sandwich_check(
    g: GridFunction,
    r: float,
    delta: float,
    mode: BallMode | str = BallMode.OPEN,
    kernel: Kernel = "auto",
    max_offsets: int = DEFAULT_MAX_OFFSETS,
    tie_rtol: float = DEFAULT_TIE_RTOL,
    hull_rtol: float = DEFAULT_HULL_RTOL,
) -> CheckReport:
    """
    osc_δ(g₁) ≤ h₁ − h₂ punto a punto sobre la máscara extendida a la
    envolvente, sin tolerancia.

    g₁ = sup sobre B_r (``mode``); h₁, h₂ = sup sobre las bolas abiertas de
    radio r + δ y r − δ.
    """
    if not 0 < delta < r:
        raise OutsideHypothesisError(f"sandwich requires 0 < δ < r, got δ={delta}, r={r}")
    mode = as_ball_mode(mode)
    opts = dict(kernel=kernel, max_offsets=max_offsets, tie_rtol=tie_rtol)
    extended = extend_to_hull(g, hull_rtol)
    g1 = dilate(extended, r, mode, **opts)
    lhs = oscillation(g1, delta, BallMode.OPEN, **opts)
    h1 = dilate(extended, r + delta, BallMode.OPEN, **opts)
    h2 = dilate(extended, r - delta, BallMode.OPEN, **opts)

    mask = extended.mask
    gap = (h1.values - h2.values)[mask] - lhs.values[mask]
    violations = int(np.count_nonzero(gap < 0))
    report = CheckReport(
        check="sandwich",
        inputs={"r": r, "delta": delta, "mode": mode.value, "d": g.dim},
    )
    report.set_measurement(float(np.max(-gap)), 0.0)
    report.details.update({"violations": violations, "cells": int(mask.sum())})
    report.require(violations == 0, f"{violations} cells with osc_δ g₁ > h₁ − h₂")
    logger.info(f"sandwich check: r={r} δ={delta} violations={violations}")
    return report


# ---------------------------------------------------------------------------
# Densidad de las medidas imagen
# ---------------------------------------------------------------------------


@dataclass
class DensityReport(CheckReport):
    """
    μ̂₁(I) ≤ C·μ̂₂(I) + ε_stat para una familia de intervalos abiertos I.

    ``table`` tiene una fila por intervalo (lo, hi, mu1, mu2, violation).
    """

    r: float = 0.0
    delta: float = 0.0
    C: float = 1.0
    intervals: List[Tuple[float, float]] = field(default_factory=list)
    table: Optional[pd.DataFrame] = field(default=None, repr=False)

    @property
    def max_violation(self) -> Optional[float]:
        return self.measured


def default_intervals(
    lo: float,
    hi: float,
    n_uniform: int = 50,
    n_random: int = 50,
    seed: int = 0,
) -> List[Tuple[float, float]]:
    """
    ``n_uniform`` intervalos abiertos que parten (lo, hi) más ``n_random``
    subintervalos aleatorios de un flujo Philox con semilla.
    """
    edges = np.linspace(lo, hi, n_uniform + 1)
    intervals = [(float(a), float(b)) for a, b in zip(edges[:-1], edges[1:])]
    rng = philox_generator(seed, DENSITY_STREAM)
    ends = np.sort(rng.uniform(lo, hi, size=(n_random, 2)), axis=1)
    intervals.extend((float(a), float(b)) for a, b in ends)
    return intervals


def pushforward_density_check(
    g: GridFunction,
    r: float,
    delta: float,
    intervals: Optional[Sequence[Tuple[float, float]]] = None,
    c: Optional[float] = None,
    n_uniform: int = 50,
    n_random: int = 50,
    seed: int = 0,
    stat_multiplier: float = 3.0,
    kernel: Kernel = "auto",
    max_offsets: int = DEFAULT_MAX_OFFSETS,
    tie_rtol: float = DEFAULT_TIE_RTOL,
    hull_rtol: float = DEFAULT_HULL_RTOL,
) -> DensityReport:
    """
    Compara las medidas imagen μ₁ = h₁#μ y μ₂ = h₂#μ sobre intervalos abiertos.

    ``g`` se extiende antes a su envolvente convexa (sin efecto si ya lo está).
    También se comprueba la consecuencia ∫h₁ − ∫h₂ ≤ (1 − 1/C)·M·μ(D) + ε_stat.

    Raises
    ------
    OutsideHypothesisError
        Si δ ≥ r/(2d+1).
    """
    d = g.dim
    _require_lemma_hypothesis(r, delta, d)
    scale = g.c if c is None else c
    C = lemma_constant(r, delta, d)
    opts = dict(kernel=kernel, max_offsets=max_offsets, tie_rtol=tie_rtol)

    extended, M = _normalized(extend_to_hull(g, hull_rtol))
    h1 = dilate(extended, r + delta, BallMode.OPEN, **opts)
    h2 = dilate(extended, r - delta, BallMode.OPEN, **opts)
    v1 = np.sort(h1.values[extended.mask])
    v2 = np.sort(h2.values[extended.mask])
    cell = scale * extended.spacing**d
    eps = _stat_allowance(extended, scale, stat_multiplier)

    if intervals is None:
        intervals = default_intervals(0.0, M, n_uniform, n_random, seed)
    rows = []
    for lo, hi in intervals:
        # intervalo abierto (lo, hi) sobre valores ordenados
        n1 = np.searchsorted(v1, hi, side="left") - np.searchsorted(v1, lo, side="right")
        n2 = np.searchsorted(v2, hi, side="left") - np.searchsorted(v2, lo, side="right")
        mu1, mu2 = cell * max(int(n1), 0), cell * max(int(n2), 0)
        rows.append((lo, hi, mu1, mu2, mu1 - C * mu2 - eps))
    table = pd.DataFrame(rows, columns=["lo", "hi", "mu1", "mu2", "violation"])

    measure = extended.measure(scale)
    spread = integrate(h1, scale) - integrate(h2, scale)
    spread_bound = (1.0 - 1.0 / C) * M * measure + eps

    report = DensityReport(
        check="density",
        inputs={"r": r, "delta": delta, "d": d, "c": scale, "intervals": len(intervals)},
        r=r, delta=delta, C=C, intervals=[tuple(iv) for iv in intervals], table=table,
    )
    max_violation = float(table["violation"].max()) if len(table) else -eps
    report.set_measurement(max_violation, 0.0)
    violations = int((table["violation"] > 0).sum())
    report.details.update(
        {
            "C": C,
            "epsilon_stat": eps,
            "violations": violations,
            "integral_spread": spread,
            "integral_spread_bound": spread_bound,
            "M": M,
            "measure": measure,
        }
    )
    report.require(violations == 0, f"{violations} intervals with μ̂₁(I) > C·μ̂₂(I) + ε_stat")
    report.require(
        spread <= spread_bound,
        f"∫h₁ − ∫h₂ = {spread:.6g} exceeds (1 − 1/C)·M·μ(D) + ε = {spread_bound:.6g}",
    )
    logger.info(f"density check: C={C:.6g} violations={violations}")
    return report


# ---------------------------------------------------------------------------
# Módulo de continuidad
# ---------------------------------------------------------------------------


def continuity_modulus_check(
    g: GridFunction,
    r: float,
    delta: float,
    c: Optional[float] = None,
    stat_multiplier: float = 3.0,
    kernel: Kernel = "auto",
    max_offsets: int = DEFAULT_MAX_OFFSETS,
    tie_rtol: float = DEFAULT_TIE_RTOL,
    hull_rtol: float = DEFAULT_HULL_RTOL,
) -> CheckReport:
    """
    G₁(r+δ) − G₁(r−δ) ≤ (2d+1)(δ/r)·M·μ(D) + ε_stat con G₁(ρ) = ∫ sup_{B_ρ} g dμ.

    La misma cota se comprueba para G₂(ρ) = ∫ inf_{B_ρ} g dμ (cambiando el
    signo) y el doble de la cota para I = G₁ − G₂.

    Raises
    ------
    OutsideHypothesisError
        Si δ ≥ r/(2d+1).
    """
    d = g.dim
    _require_lemma_hypothesis(r, delta, d)
    scale = g.c if c is None else c
    opts = dict(kernel=kernel, max_offsets=max_offsets, tie_rtol=tie_rtol)
    extended, M = _normalized(extend_to_hull(g, hull_rtol))

    def G1(rho: float) -> float:
        return integrate(dilate(extended, rho, BallMode.OPEN, **opts), scale)

    def G2(rho: float) -> float:
        return integrate(erode(extended, rho, BallMode.OPEN, **opts), scale)

    g1_hi, g1_lo = G1(r + delta), G1(r - delta)
    g2_hi, g2_lo = G2(r + delta), G2(r - delta)
    diff1 = g1_hi - g1_lo
    diff2 = g2_lo - g2_hi
    diff_i = (g1_hi - g2_hi) - (g1_lo - g2_lo)

    measure = extended.measure(scale)
    eps = _stat_allowance(extended, scale, stat_multiplier)
    bound = (2 * d + 1) * (delta / r) * M * measure + eps

    report = CheckReport(
        check="continuity",
        inputs={"r": r, "delta": delta, "d": d, "c": scale},
    )
    report.set_measurement(diff1, bound)
    report.details.update(
        {
            "M": M,
            "measure": measure,
            "epsilon_stat": eps,
            "G1_difference": diff1,
            "G2_difference": diff2,
            "I_difference": diff_i,
            "I_bound": 2.0 * bound,
        }
    )
    report.require(diff1 <= bound, f"G₁ difference {diff1:.6g} exceeds {bound:.6g}")
    report.require(diff2 <= bound, f"G₂ difference {diff2:.6g} exceeds {bound:.6g}")
    report.require(diff_i <= 2.0 * bound, f"I difference {diff_i:.6g} exceeds {2.0 * bound:.6g}")
    logger.info(f"continuity check: ΔG₁={diff1:.6g} bound={bound:.6g}")
    return report


# ---------------------------------------------------------------------------
# Bolas abiertas frente a cerradas
# ---------------------------------------------------------------------------


def _differing_fraction(g: GridFunction, r: float, opts: dict) -> Tuple[float, int]:
    osc_open = oscillation(g, r, BallMode.OPEN, **opts)
    osc_closed = oscillation(g, r, BallMode.CLOSED, **opts)
    differ = int(np.count_nonzero(osc_open.values[g.mask] != osc_closed.values[g.mask]))
    return differ / g.masked_count, differ


def open_closed_agreement(
    g: GridFunction,
    r: float,
    sweep: Optional[SweepGrid] = None,
    alpha: float = 1.0,
    c: Optional[float] = None,
    rtol: float = 0.02,
    refined: Optional[GridFunction] = None,
    halving_rtol: Optional[float] = None,
    threads: int = 1,
    kernel: Kernel = "auto",
    max_offsets: int = DEFAULT_MAX_OFFSETS,
    tie_rtol: float = DEFAULT_TIE_RTOL,
) -> CheckReport:
    """
    Compara las oscilaciones con bolas abiertas y cerradas.

    Informa de (a) la fracción de celdas enmascaradas donde osc_r y la
    oscilación con bola cerrada difieren y (b) la diferencia relativa de las
    estimaciones de la seminorma de ``g`` en ambos modos. Con ``refined`` (la
    misma función muestreada a h/2) la fracción no puede crecer al refinar; con
    ``halving_rtol`` además debe reducirse a la mitad, es decir, el cociente
    fino/grueso debe quedar en 0.5·(1 ± halving_rtol).
    """
    scale = g.c if c is None else c
    opts = dict(kernel=kernel, max_offsets=max_offsets, tie_rtol=tie_rtol)
    fraction, differ = _differing_fraction(g, r, opts)
    if sweep is None:
        sweep = SweepGrid.default_for(g, tie_rtol=tie_rtol)
    est_open = osc_integral_sweep(g, BallMode.OPEN, sweep, alpha, scale, threads, **opts).estimate
    est_closed = osc_integral_sweep(g, BallMode.CLOSED, sweep, alpha, scale, threads, **opts).estimate
    reference = max(abs(est_open), abs(est_closed))
    rel_diff = abs(est_open - est_closed) / reference if reference > 0 else 0.0

    report = CheckReport(
        check="open-closed",
        inputs={"r": r, "alpha": alpha, "c": scale, "sweep_size": len(sweep)},
    )
    report.set_measurement(rel_diff, rtol)
    report.details.update(
        {
            "differing_fraction": fraction,
            "differing_cells": differ,
            "seminorm_open": est_open,
            "seminorm_closed": est_closed,
        }
    )
    report.require(rel_diff <= rtol, f"seminorm estimates differ by {rel_diff:.3%}")

    if refined is not None:
        if not math.isclose(refined.spacing * 2.0, g.spacing, rel_tol=1e-12):
            report.add_warning(
                f"refined spacing {refined.spacing} is not h/2 = {g.spacing / 2}"
            )
        refined_fraction, refined_differ = _differing_fraction(refined, r, opts)
        ratio = refined_fraction / fraction if fraction > 0 else 0.0
        report.details.update(
            {
                "refined_differing_fraction": refined_fraction,
                "refined_differing_cells": refined_differ,
                "refinement_ratio": ratio,
            }
        )
        report.require(
            refined_fraction <= fraction,
            f"differing fraction grew from {fraction:.3g} to {refined_fraction:.3g} under refinement",
        )
        if halving_rtol is not None:
            report.require(
                abs(ratio - 0.5) <= 0.5 * halving_rtol,
                f"differing fraction ratio {ratio:.3g} under refinement is not 0.5 ± {0.5 * halving_rtol:.3g}",
            )
    logger.info(f"open/closed check: differing fraction={fraction:.3g} seminorm rel diff={rel_diff:.3g}")
    return report
