"""
contraction.py

Verificaciones puntuales del mapa de aproximación: contracción por pares
d(T_Δx, T_Δy) ≥ ((R−Δ)/R)·d(x, y), cota de la derivada de
f(t) = d(T_t x, T_t y) y contracción de diámetros de conjuntos finitos.
"""

from __future__ import annotations

import logging
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy.spatial.distance import pdist

from oscholder.approach.target import (
    DEFAULT_TIE_RTOL,
    TargetSet,
    approach_many,
    distance_to,
)
from oscholder.errors import InvalidParameterError, OutsideHypothesisError
from oscholder.quality.report import CheckReport

logger = logging.getLogger(__name__)

DEFAULT_STEPS = (1e-2, 1e-3, 1e-4)
INTEGRATED_FRACTIONS = (0.25, 0.5, 0.75)


def contraction_check(
    H: TargetSet,
    delta: float,
    pairs: np.ndarray,
    atol: float = 1e-9,
    tie_rtol: float = DEFAULT_TIE_RTOL,
) -> CheckReport:
    """
    d(T_Δx, T_Δy) ≥ ((R − Δ)/R)·d(x, y) − atol con R = min(d(x,H), d(y,H)).

    ``pairs`` es un array ``(n, 2, d)``. Los pares con R < Δ se omiten y se
    cuentan.
    """
    pairs = np.asarray(pairs, dtype=np.float64)
    if pairs.ndim != 3 or pairs.shape[1] != 2:
        raise InvalidParameterError(f"pairs must have shape (n, 2, d), got {pairs.shape}")
    x, y = pairs[:, 0, :], pairs[:, 1, :]
    R = np.minimum(distance_to(x, H), distance_to(y, H))
    keep = R >= delta
    skipped = int(np.count_nonzero(~keep))
    x, y, R = x[keep], y[keep], R[keep]

    report = CheckReport(
        check="contraction",
        inputs={"delta": delta, "pairs": int(len(pairs)), "sites": len(H), "atol": atol},
    )
    report.details["skipped"] = skipped
    if not len(R):
        report.add_warning("No pair satisfies R >= Δ; nothing checked")
        report.set_measurement(0.0, atol)
        return report

    tx, _ = approach_many(x, H, delta, tie_rtol)
    ty, _ = approach_many(y, H, delta, tie_rtol)
    before = np.linalg.norm(x - y, axis=1)
    after = np.linalg.norm(tx - ty, axis=1)
    factor = (R - delta) / R
    shortfall = factor * before - after
    violations = int(np.count_nonzero(shortfall > atol))

    nonzero = (before > 0) & (factor > 0)
    worst_ratio = float(np.min(after[nonzero] / (factor[nonzero] * before[nonzero]))) if nonzero.any() else float("inf")
    report.set_measurement(float(np.max(shortfall)), atol)
    report.details.update(
        {"evaluated": int(len(R)), "violations": violations, "worst_ratio": worst_ratio}
    )
    report.require(violations == 0, f"{violations} pairs violate the contraction bound")
    logger.info(f"contraction check: {len(R)} pairs, {violations} violations, {skipped} skipped")
    return report


def _pair_distance(x: np.ndarray, y: np.ndarray, H: TargetSet, t: float, tie_rtol: float) -> float:
    images, _ = approach_many(np.vstack([x, y]), H, t, tie_rtol)
    return float(np.linalg.norm(images[0] - images[1]))


def derivative_check(
    H: TargetSet,
    x: Sequence[float],
    y: Sequence[float],
    r: float,
    steps: Iterable[float] = DEFAULT_STEPS,
    curvature_factor: float = 10.0,
    atol: float = 1e-9,
    tie_rtol: float = DEFAULT_TIE_RTOL,
) -> CheckReport:
    """
    Cota de la derivada lateral de f(t) = |T_t x − T_t y|.

    Comprueba (f(s) − f(0))/s ≥ −f(0)/r − κ·s para cada paso s, con
    κ = curvature_factor·f(0)/r², y la forma integrada
    f(Δ)/f(0) ≥ (R − Δ)/R − atol en Δ ∈ {R/4, R/2, 3R/4}, R la menor distancia.

    Raises
    ------
    OutsideHypothesisError
        Si d(x,H) < r, d(y,H) < r o x = y.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    dx, dy = distance_to(np.vstack([x, y]), H)
    if dx < r or dy < r:
        raise OutsideHypothesisError(
            f"derivative check needs d(x,H), d(y,H) >= r={r}, got {dx:.6g}, {dy:.6g}"
        )
    if np.array_equal(x, y):
        raise OutsideHypothesisError("derivative check needs x != y")

    steps = sorted(float(s) for s in steps)
    f0 = float(np.linalg.norm(x - y))
    kappa = curvature_factor * f0 / r**2
    R = float(min(dx, dy))

    report = CheckReport(
        check="derivative",
        inputs={"r": r, "steps": steps, "curvature_factor": curvature_factor, "x": x, "y": y},
    )
    quotients = []
    shortfalls = []
    for s in steps:
        fs = _pair_distance(x, y, H, s, tie_rtol)
        quotient = (fs - f0) / s
        floor = -f0 / r - kappa * s
        quotients.append(quotient)
        shortfalls.append(floor - quotient)
        report.require(
            quotient >= floor,
            f"difference quotient {quotient:.6g} below {floor:.6g} at step {s:g}",
        )

    integrated = []
    for fraction in INTEGRATED_FRACTIONS:
        delta = fraction * R
        ratio = _pair_distance(x, y, H, delta, tie_rtol) / f0
        limit = (R - delta) / R
        integrated.append({"delta": delta, "ratio": ratio, "limit": limit})
        shortfalls.append(limit - atol - ratio)
        report.require(
            ratio >= limit - atol,
            f"f(Δ)/f(0) = {ratio:.6g} below (R−Δ)/R = {limit:.6g} at Δ={delta:.6g}",
        )

    samples_t = np.array([0.0] + steps)
    samples_f = np.array([f0] + [f0 + q * s for q, s in zip(quotients, steps)])
    slope = float(np.polyfit(samples_t, samples_f, 1)[0])
    report.set_measurement(max(shortfalls), 0.0)
    report.details.update(
        {
            "f0": f0,
            "kappa": kappa,
            "R": R,
            "quotients": quotients,
            "derivative_bound": -f0 / r,
            "fitted_slope": slope,
            "integrated": integrated,
        }
    )
    return report


def diameter_contraction_check(
    H: TargetSet,
    delta: float,
    point_sets: Iterable[np.ndarray],
    atol: float = 1e-9,
    tie_rtol: float = DEFAULT_TIE_RTOL,
) -> CheckReport:
    """
    diam(T_Δ U) ≥ ((R − Δ)/R)·diam(U) − atol para conjuntos finitos U con
    R = d(U, H) ≥ Δ; se omiten los conjuntos a distancia menor que Δ de H.
    """
    report = CheckReport(check="diameter", inputs={"delta": delta, "atol": atol})
    shortfalls = []
    skipped = 0
    for U in point_sets:
        U = np.atleast_2d(np.asarray(U, dtype=np.float64))
        if len(U) < 2:
            skipped += 1
            continue
        R = float(distance_to(U, H).min())
        if R < delta:
            skipped += 1
            continue
        images, _ = approach_many(U, H, delta, tie_rtol)
        before = float(pdist(U).max())
        after = float(pdist(images).max())
        shortfalls.append((R - delta) / R * before - after)

    report.details.update({"evaluated": len(shortfalls), "skipped": skipped})
    if not shortfalls:
        report.add_warning("No point set satisfies d(U, H) >= Δ; nothing checked")
        report.set_measurement(0.0, atol)
        return report
    violations = int(np.count_nonzero(np.array(shortfalls) > atol))
    report.set_measurement(max(shortfalls), atol)
    report.details["violations"] = violations
    report.require(violations == 0, f"{violations} sets violate the diameter bound")
    return report
