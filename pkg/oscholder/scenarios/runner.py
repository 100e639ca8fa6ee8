"""
runner.py

Ejecución de escenarios: construye la entrada, ejecuta las comprobaciones en
el orden declarado y escribe un JSON por comprobación, las tablas CSV, un
resumen con el veredicto global y un ``metadata.json`` con la información
no reproducible (fecha, hilos, versiones).

Los veredictos se comparan con la expectativa declarada de cada
comprobación (``pass``, ``fail`` o ``hypothesis-error``); el escenario pasa
cuando todas coinciden.
"""

from __future__ import annotations

import logging
import math
import platform
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable, Dict, List, Mapping, Optional, Tuple

import numpy as np
import pandas as pd
import scipy

import oscholder
from oscholder.approach.contraction import contraction_check, derivative_check, diameter_contraction_check
from oscholder.approach.decomposition import ak_classify, ak_labels, curly_labels, k_max, STAR_CODE
from oscholder.approach.sets import SetSpec
from oscholder.approach.target import TargetSet, distance_to
from oscholder.data.config import HarnessConfig
from oscholder.data.generators import generate_input
from oscholder.errors import OutsideHypothesisError, ScenarioSpecError
from oscholder.grid.grid_function import GridFunction
from oscholder.measure.checks import (
    annulus_ratio_exact,
    annulus_ratio_limit,
    coarea_check_radial,
    coarea_slice_shrink_check,
    lemma3_ratio_check,
    thm2_check,
)
from oscholder.measure.sampling import as_box, sample_in_set, uniform_points
from oscholder.morphology.operators import oscillation
from oscholder.morphology.stencil import BallMode, as_ball_mode
from oscholder.quality.report import (
    CheckReport,
    print_check_report,
    print_summary,
    save_report,
    write_csv,
    write_json,
)
from oscholder.scenarios.scenario_parser import CheckSpec, Scenario
from oscholder.seminorm.checks import (
    continuity_modulus_check,
    open_closed_agreement,
    pushforward_density_check,
    sandwich_check,
    thm1_check,
)
from oscholder.seminorm.sweep import SweepGrid, osc_integral_sweep
from oscholder.utils.streams import philox_generator

logger = logging.getLogger(__name__)

STREAM_PAIRS = 21
STREAM_CONFIGS = 22
STREAM_SETS = 23
STREAM_KMAX = 24
STREAM_TRAILS = 25

REFINABLE = ("lattice", "disconnected", "disconnected-2d")

CheckResult = Tuple[CheckReport, Optional[pd.DataFrame]]


@dataclass
class CheckOutcome:
    """Result of one check entry against its declared expectation."""

    id: str
    check: str
    expect: str
    status: str
    report: CheckReport
    table: Optional[pd.DataFrame] = field(default=None, repr=False)
    message: str = ""

    @property
    def matched(self) -> bool:
        return self.status == self.expect

    def to_dict(self) -> Dict[str, Any]:
        return {
            "id": self.id,
            "check": self.check,
            "expect": self.expect,
            "status": self.status,
            "matched": self.matched,
            "verdict": bool(self.report.verdict),
            "message": self.message,
        }


@dataclass
class ScenarioResult:
    """Outcomes of a scenario run."""

    name: str
    outcomes: List[CheckOutcome]
    output_dir: Optional[Path] = None

    @property
    def passed(self) -> bool:
        return all(o.matched for o in self.outcomes)

    def summary(self) -> Dict[str, Any]:
        return {
            "scenario": self.name,
            "verdict": self.passed,
            "checks": [o.to_dict() for o in self.outcomes],
        }


# ---------------------------------------------------------------------------
# Run context
# ---------------------------------------------------------------------------


class _Context:
    """Lazily built inputs shared by the checks of one scenario."""

    def __init__(self, scenario: Scenario, config: HarnessConfig, threads: int):
        self.scenario = scenario
        self.config = config
        self.threads = threads
        self._grid: Optional[GridFunction] = None
        self._subject: Optional[GridFunction] = None
        self._target: Optional[TargetSet] = None
        self._set: Optional[SetSpec] = None

    # configuration -------------------------------------------------------

    def tol(self, name: str) -> float:
        return _param(self.scenario.tolerances, name, "tolerances", default=getattr(self.config.tolerances, name))

    @property
    def morph(self) -> Dict[str, Any]:
        return self.config.morphology_kwargs()

    @property
    def tie_rtol(self) -> float:
        return self.config.approach.tie_rtol

    @property
    def sampling(self) -> Dict[str, Any]:
        return {
            "chunk_size": self.config.sampling.chunk_size,
            "max_retries": self.config.sampling.max_retries,
            "threads": self.threads,
            "tie_rtol": self.tie_rtol,
        }

    # inputs --------------------------------------------------------------

    def grid(self) -> GridFunction:
        if self._grid is None:
            self._grid = self._generate(self.scenario.input)
        return self._grid

    def _generate(self, spec: Dict[str, Any]) -> GridFunction:
        g = generate_input(spec, self.scenario.base_dir)
        c = _param(self.scenario.params, "c", "input", default=None)
        if c is None and "c" not in spec:
            c = self.config.measure.c
        return GridFunction(g.values, g.mask, g.spacing, g.origin, c) if c is not None else g

    def _to_subject(self, g: GridFunction) -> GridFunction:
        if self.scenario.subject == "input":
            return g
        params = self.scenario.params
        if "r" not in params:
            raise ScenarioSpecError("subject 'oscillation' needs params.r")
        r = _param(params, "r", "subject")
        mode = _param(params, "mode", "subject", as_ball_mode, BallMode.OPEN)
        return oscillation(g, r, mode, **self.morph)

    def subject(self) -> GridFunction:
        if self._subject is None:
            self._subject = self._to_subject(self.grid())
        return self._subject

    def refined_subject(self) -> GridFunction:
        spec = dict(self.scenario.input or {})
        if spec.get("generator") not in REFINABLE:
            raise ScenarioSpecError(
                f"Refinement is supported for generators {REFINABLE}, not '{spec.get('generator')}'"
            )
        spec["h"] = _param(spec, "h", "refine") / 2.0
        return self._to_subject(self._generate(spec))

    def target(self) -> TargetSet:
        if self._target is None:
            self._target = TargetSet.from_dict(self.scenario.target, self.scenario.base_dir)
        return self._target

    def set_A(self) -> SetSpec:
        if self._set is None:
            self._set = SetSpec.from_dict(self.scenario.set, self.scenario.base_dir)
        return self._set

    def sweep_for(self, g: GridFunction, params: Dict[str, Any], check: str) -> SweepGrid:
        tie_rtol = self.config.morphology.tie_rtol
        if params.get("sweep") is None:
            cfg = self.config.sweep
            return SweepGrid.default_for(
                g, cfg.delta_min_cells, cfg.ratio, cfg.delta_max, tie_rtol, self.tol("hull_rtol")
            )
        raw = _mapping(params, "sweep", check)
        if "deltas" in raw:
            return SweepGrid.from_values(_param(raw, "deltas", check, _floats))
        delta_min = _param(raw, "delta_min", check, default=self.config.sweep.delta_min_cells * g.spacing)
        delta_max = _param(raw, "delta_max", check, default=self.config.sweep.delta_max)
        if delta_max is None:
            default = SweepGrid.default_for(g, tie_rtol=tie_rtol, hull_rtol=self.tol("hull_rtol"))
            delta_max = default.delta_max
        grid = SweepGrid.geometric(delta_min, delta_max, _param(raw, "ratio", check, default=self.config.sweep.ratio))
        return grid.tie_free(g.spacing, tie_rtol)

    def sample_box(self, params: Dict[str, Any], check: str) -> Tuple[np.ndarray, np.ndarray]:
        if "box" in params:
            box = _mapping(params, "box", check)
            return as_box((_param(box, "lo", check, _floats), _param(box, "hi", check, _floats)))
        sites = self.target().sites
        lo, hi = sites.min(axis=0), sites.max(axis=0)
        margin = max(float(np.max(hi - lo)), 1.0)
        return as_box((lo - margin, hi + margin))


_REQUIRED = object()


def _param(
    params: Mapping[str, Any], key: str, check: str, cast: Callable[[Any], Any] = float,
    default: Any = _REQUIRED,
) -> Any:
    """
    ``params[key]`` convertido con ``cast``.

    Un parámetro ausente (o nulo) sin ``default`` y uno que ``cast`` rechaza
    son errores de especificación del escenario.
    """
    if key not in params or params[key] is None:
        if default is _REQUIRED:
            raise ScenarioSpecError(f"Check '{check}' needs parameter '{key}'")
        return default
    try:
        return cast(params[key])
    except (TypeError, ValueError) as e:
        raise ScenarioSpecError(
            f"Invalid parameters for check '{check}': '{key}'={params[key]!r} ({e})"
        ) from e


def _mapping(params: Mapping[str, Any], key: str, check: str) -> Mapping[str, Any]:
    value = params[key]
    if not isinstance(value, Mapping):
        raise ScenarioSpecError(
            f"Invalid parameters for check '{check}': '{key}' must be a mapping, got {value!r}"
        )
    return value


def _floats(values: Any) -> List[float]:
    return [float(v) for v in values]


def _pairs(values: Any) -> List[Tuple[float, float]]:
    return [(float(lo), float(hi)) for lo, hi in values]


# ---------------------------------------------------------------------------
# Grid-function checks
# ---------------------------------------------------------------------------


def _run_sweep(ctx: _Context, spec: CheckSpec, params: Dict[str, Any]) -> CheckResult:
    """
    Sweep of I(δ) on the scenario subject. Optional parameters:
    ``reference``/``rtol`` (seminorm value), ``argmax_reference``/
    ``argmax_factor`` and ``curve`` = {L, r, rtol, min_delta}, the expected
    curve min(1, δ/r)·L·c.
    """
    g = ctx.subject()
    alpha = _param(params, "alpha", spec.check, default=1.0)
    mode = _param(params, "sweep_mode", spec.check, as_ball_mode, BallMode.OPEN)
    sweep = osc_integral_sweep(
        g, mode, ctx.sweep_for(g, params, spec.check), alpha, g.c, ctx.threads, **ctx.morph
    )
    report = CheckReport(
        check=spec.check,
        inputs={"alpha": alpha, "mode": mode.value, "c": g.c, "subject": ctx.scenario.subject,
                "sweep_size": len(sweep.records)},
    )
    for message in sweep.warnings:
        report.add_warning(message)
    estimate = sweep.estimate
    report.measured = estimate
    report.details.update({"argmax_delta": sweep.argmax_delta, "monotone": sweep.is_monotone()})

    if "reference" in params:
        reference = _param(params, "reference", spec.check)
        rtol = _param(params, "rtol", spec.check, default=0.15)
        report.set_measurement(estimate, reference)
        report.details["relative_error"] = abs(estimate - reference) / abs(reference)
        report.require(
            abs(estimate - reference) <= rtol * abs(reference),
            f"estimate {estimate:.6g} is not within {rtol:.0%} of {reference:.6g}",
        )
    if "argmax_reference" in params:
        target = _param(params, "argmax_reference", spec.check)
        factor = _param(params, "argmax_factor", spec.check, default=2.0)
        report.require(
            target / factor <= sweep.argmax_delta <= target * factor,
            f"argmax δ={sweep.argmax_delta:.6g} is not within a factor {factor} of {target:.6g}",
        )
    if "curve" in params:
        curve = _mapping(params, "curve", spec.check)
        L, r = _param(curve, "L", spec.check), _param(curve, "r", spec.check)
        rtol = _param(curve, "rtol", spec.check, default=0.1)
        deltas = sweep.deltas
        keep = deltas >= _param(curve, "min_delta", spec.check, default=0.0)
        expected = L * g.c * np.minimum(1.0, deltas[keep] / r)
        errors = np.abs(sweep.integrals[keep] - expected) / expected
        worst = float(errors.max()) if len(errors) else 0.0
        report.details.update({"curve_max_relative_error": worst, "curve_points": int(keep.sum())})
        report.require(worst <= rtol, f"I(δ) deviates {worst:.2%} from min(1, δ/r)·L")
    return report, sweep.to_frame()


def _run_thm1(ctx: _Context, spec: CheckSpec, params: Dict[str, Any]) -> CheckResult:
    g = ctx.grid()
    sweep = ctx.sweep_for(g, params, spec.check) if "sweep" in params else None
    report = thm1_check(
        g,
        _param(params, "r", spec.check),
        _param(params, "alpha", spec.check, default=1.0),
        _param(params, "mode", spec.check, as_ball_mode, BallMode.OPEN),
        sweep,
        g.c,
        _param(params, "hull_volume", spec.check, default=None),
        ctx.tol("thm1_rtol"),
        ctx.threads,
        hull_rtol=ctx.tol("hull_rtol"),
        **ctx.morph,
    )
    return report, report.sweep.to_frame() if report.sweep is not None else None


def _run_sandwich(ctx: _Context, spec: CheckSpec, params: Dict[str, Any]) -> CheckResult:
    r = _param(params, "r", spec.check)
    delta = _param(params, "delta", spec.check, default=r / 4.0)
    mode = _param(params, "mode", spec.check, as_ball_mode, BallMode.OPEN)
    report = sandwich_check(ctx.grid(), r, delta, mode, hull_rtol=ctx.tol("hull_rtol"), **ctx.morph)
    return report, None


def _run_density(ctx: _Context, spec: CheckSpec, params: Dict[str, Any]) -> CheckResult:
    density = ctx.config.density
    g = ctx.grid()
    report = pushforward_density_check(
        g,
        _param(params, "r", spec.check),
        _param(params, "delta", spec.check),
        _param(params, "intervals", spec.check, _pairs, None),
        g.c,
        _param(params, "n_uniform", spec.check, int, density.n_uniform),
        _param(params, "n_random", spec.check, int, density.n_random),
        _param(params, "density_seed", spec.check, int, density.seed),
        ctx.tol("stat_multiplier"),
        hull_rtol=ctx.tol("hull_rtol"),
        **ctx.morph,
    )
    return report, report.table


def _run_continuity(ctx: _Context, spec: CheckSpec, params: Dict[str, Any]) -> CheckResult:
    g = ctx.grid()
    report = continuity_modulus_check(
        g,
        _param(params, "r", spec.check),
        _param(params, "delta", spec.check),
        g.c,
        ctx.tol("stat_multiplier"),
        hull_rtol=ctx.tol("hull_rtol"),
        **ctx.morph,
    )
    return report, None


def _run_open_closed(ctx: _Context, spec: CheckSpec, params: Dict[str, Any]) -> CheckResult:
    g = ctx.subject()
    refined = ctx.refined_subject() if params.get("refine") else None
    halving = _param(params, "halving_rtol", spec.check, default=None)
    report = open_closed_agreement(
        g,
        _param(params, "r", spec.check),
        ctx.sweep_for(g, params, spec.check),
        _param(params, "alpha", spec.check, default=1.0),
        g.c,
        _param(params, "rtol", spec.check, default=ctx.tol("open_closed_rtol")),
        refined,
        halving,
        ctx.threads,
        **ctx.morph,
    )
    return report, None


# ---------------------------------------------------------------------------
# Approach-map checks
# ---------------------------------------------------------------------------


def _run_contraction(ctx: _Context, spec: CheckSpec, params: Dict[str, Any]) -> CheckResult:
    H = ctx.target()
    n = _param(params, "n_pairs", spec.check, int, 100_000)
    box = ctx.sample_box(params, spec.check)
    pairs = uniform_points(philox_generator(ctx.scenario.seed, STREAM_PAIRS), box, 2 * n)
    report = contraction_check(
        H,
        _param(params, "delta", spec.check),
        pairs.reshape(n, 2, H.dim),
        ctx.tol("contraction_atol"),
        ctx.tie_rtol,
    )
    return report, None


def _far_points(ctx: _Context, params: Dict[str, Any], check: str, r: float, count: int) -> np.ndarray:
    """``count`` points of the sampling box at distance ≥ r from H."""
    H = ctx.target()
    box = ctx.sample_box(params, check)

    def far(points: np.ndarray) -> np.ndarray:
        return distance_to(points, H) >= r

    return sample_in_set(far, box, count, ctx.scenario.seed, STREAM_CONFIGS, ctx.config.sampling.chunk_size)


def _run_derivative(ctx: _Context, spec: CheckSpec, params: Dict[str, Any]) -> CheckResult:
    H = ctx.target()
    r = _param(params, "r", spec.check)
    n = _param(params, "n_configs", spec.check, int, 1000)
    steps = _param(params, "steps", spec.check, _floats, [1e-2, 1e-3, 1e-4])
    points = _far_points(ctx, params, spec.check, r, 2 * n)
    report = CheckReport(
        check=spec.check,
        inputs={"r": r, "n_configs": n, "steps": steps,
                "curvature_factor": ctx.config.approach.curvature_factor},
    )
    worst = -math.inf
    failures = []
    for i in range(n):
        sub = derivative_check(
            H, points[2 * i], points[2 * i + 1], r, steps,
            ctx.config.approach.curvature_factor, ctx.tol("contraction_atol"), ctx.tie_rtol,
        )
        worst = max(worst, sub.measured)
        if not sub.verdict:
            failures.append({"index": i, "errors": sub.errors})
    report.set_measurement(worst, 0.0)
    report.details.update({"violations": len(failures), "failures": failures[:10]})
    report.require(not failures, f"{len(failures)} of {n} configurations violate the derivative bound")
    return report, None


def _run_diameter(ctx: _Context, spec: CheckSpec, params: Dict[str, Any]) -> CheckResult:
    H = ctx.target()
    n_sets = _param(params, "n_sets", spec.check, int, 200)
    size = _param(params, "set_size", spec.check, int, 5)
    lo, hi = ctx.sample_box(params, spec.check)
    spread = _param(params, "spread", spec.check, default=0.05 * float(np.max(hi - lo)))
    rng = philox_generator(ctx.scenario.seed, STREAM_SETS)
    centres = lo + (hi - lo) * rng.random((n_sets, H.dim))
    offsets = rng.uniform(-spread, spread, size=(n_sets, size, H.dim))
    report = diameter_contraction_check(
        H,
        _param(params, "delta", spec.check),
        [c + o for c, o in zip(centres, offsets)],
        ctx.tol("contraction_atol"),
        ctx.tie_rtol,
    )
    return report, None


def kmax_agrees(r: float, delta: float) -> bool:
    """
    k_max(r, δ) es el mayor K con r − (2K+1)δ ≥ 0 y coincide con
    x = r/(2δ) − 1/2 redondeado hacia abajo. Si x está a 1e-9 relativo de un
    entero m solo se admiten m y m − 1, según el lado del redondeo.
    """
    K = k_max(r, delta)
    tol = 1e-12 * r
    largest = r - (2 * K + 1) * delta >= -tol and r - (2 * K + 3) * delta < -tol
    x = r / (2 * delta) - 0.5
    nearest = round(x)
    if abs(x - nearest) <= 1e-9 * max(1.0, x):
        floor_ok = K in (nearest, nearest - 1)
    else:
        floor_ok = K == math.floor(x)
    return largest and floor_ok


def _kmax_consistency(n: int, seed: int) -> Tuple[int, int]:
    """Compare k_max with the inequality and floor characterizations on random (r, δ)."""
    rng = philox_generator(seed, STREAM_KMAX)
    r = rng.uniform(0.1, 10.0, size=n)
    delta = r / rng.uniform(3.0, 200.0, size=n)
    mismatches = sum(int(not kmax_agrees(float(ri), float(di))) for ri, di in zip(r, delta))
    return n, mismatches


def _run_k_decomposition(ctx: _Context, spec: CheckSpec, params: Dict[str, Any]) -> CheckResult:
    """
    k_max against both characterizations, and class trails: a class-k point
    has its first k iterates in A and, when k < K, the next one outside.
    """
    H, A = ctx.target(), ctx.set_A()
    r = _param(params, "r", spec.check)
    delta = _param(params, "delta", spec.check)
    n_points = _param(params, "n_points", spec.check, int, 1000)
    n_kmax = _param(params, "n_kmax", spec.check, int, 10_000)
    n_pairs, k_mismatch = _kmax_consistency(n_kmax, ctx.scenario.seed)

    points = sample_in_set(A.contains, A.bounding_box(), n_points, ctx.scenario.seed, STREAM_TRAILS,
                           ctx.config.sampling.chunk_size)
    K = k_max(r, delta)
    labels, ties = ak_labels(points, A, H, r, delta, ctx.tie_rtol)
    trail_errors = 0
    label_errors = 0
    for point, vector_label in zip(points, labels):
        cls = ak_classify(point, A, H, r, delta, ctx.tie_rtol)
        expected = -1 if cls.k is None else cls.k
        label_errors += int(expected != vector_label)
        if cls.k is None:
            continue
        trail = np.array(cls.trail).reshape(-1, A.dim)
        inside = A.contains(trail) if len(trail) else np.zeros(0, dtype=bool)
        ok = bool(np.all(inside[:cls.k]))
        if cls.k < K and len(trail) > cls.k:
            ok = ok and not inside[cls.k]
        trail_errors += int(not ok)
    curly = curly_labels(points, A, H, r, delta, ctx.tie_rtol)
    classes, counts = np.unique(labels, return_counts=True)

    report = CheckReport(
        check=spec.check,
        inputs={"r": r, "delta": delta, "n_points": n_points, "n_kmax": n_pairs, "seed": ctx.scenario.seed},
    )
    report.set_measurement(float(k_mismatch + trail_errors + label_errors), 0.0)
    report.details.update({
        "K": K,
        "kmax_mismatches": k_mismatch,
        "trail_errors": trail_errors,
        "label_errors": label_errors,
        "ties": int(ties.sum()),
        "class_counts": {("inside-collar" if k < 0 else str(k)): int(c) for k, c in zip(classes, counts)},
        "star_count": int(np.count_nonzero(curly == STAR_CODE)),
    })
    report.require(k_mismatch == 0, f"k_max disagrees with its characterizations on {k_mismatch} pairs")
    report.require(trail_errors == 0, f"{trail_errors} class trails are inconsistent")
    report.require(label_errors == 0, f"{label_errors} vectorised labels differ from ak_classify")
    return report, None


# ---------------------------------------------------------------------------
# Measure checks
# ---------------------------------------------------------------------------


def _run_lemma3(ctx: _Context, spec: CheckSpec, params: Dict[str, Any]) -> CheckResult:
    report = lemma3_ratio_check(
        ctx.set_A(),
        ctx.target(),
        _param(params, "r", spec.check),
        _param(params, "delta", spec.check),
        _param(params, "n", spec.check, int, 1_000_000),
        ctx.scenario.seed,
        bool(params.get("per_class", False)),
        _param(params, "n_class", spec.check, int, 20_000),
        _param(params, "min_class_hits", spec.check, int, 200),
        ctx.tol("sigma"),
        ctx.config.sampling.r_samples,
        **ctx.sampling,
    )
    return report, report.table


def _run_thm2(ctx: _Context, spec: CheckSpec, params: Dict[str, Any]) -> CheckResult:
    R = _param(params, "R", spec.check, default=None)
    report = thm2_check(
        ctx.target(),
        ctx.set_A(),
        _param(params, "delta", spec.check),
        _param(params, "n", spec.check, int, 1_000_000),
        ctx.scenario.seed,
        R,
        ctx.tol("sigma"),
        ctx.config.sampling.r_samples,
        **ctx.sampling,
    )
    return report, None


def _run_coarea(ctx: _Context, spec: CheckSpec, params: Dict[str, Any]) -> CheckResult:
    report = coarea_check_radial(
        ctx.set_A(),
        ctx.target(),
        _param(params, "t_grid", spec.check, _floats, None),
        _param(params, "n_angles", spec.check, int, 4096),
        _param(params, "n", spec.check, int, 1_000_000),
        ctx.scenario.seed,
        _param(params, "rtol", spec.check, default=ctx.tol("coarea_rtol")),
        ctx.tol("sigma"),
        _param(params, "n_t", spec.check, int, 2001),
        _param(params, "reference", spec.check, default=None),
        ctx.config.sampling.chunk_size,
        ctx.threads,
    )
    return report, report.table


def _run_coarea_slices(ctx: _Context, spec: CheckSpec, params: Dict[str, Any]) -> CheckResult:
    R = _param(params, "R", spec.check, default=None)
    report = coarea_slice_shrink_check(
        ctx.set_A(),
        ctx.target(),
        _param(params, "delta", spec.check),
        _param(params, "t_grid", spec.check, _floats, None),
        _param(params, "n_angles", spec.check, int, 4096),
        ctx.scenario.seed,
        R,
        _param(params, "n_t", spec.check, int, 201),
        ctx.config.sampling.r_samples,
        ctx.tie_rtol,
    )
    return report, report.table


def _run_annulus_ratio(ctx: _Context, spec: CheckSpec, params: Dict[str, Any]) -> CheckResult:
    """
    Closed-form annulus ratios over an ε sequence: each ratio is at least the
    ε → 0 limit and the ratios decrease with ε. With ``n`` the ratios are
    also estimated by Monte Carlo for H = {0} and compared within sigma.
    """
    d = _param(params, "d", spec.check, int, 2)
    R = _param(params, "R", spec.check, default=1.0)
    delta = _param(params, "delta", spec.check, default=0.5)
    eps_values = sorted(_param(params, "eps", spec.check, _floats, [0.4, 0.2, 0.1, 0.05]), reverse=True)
    limit = annulus_ratio_limit(d, R, delta)
    exact = [annulus_ratio_exact(d, R, delta, e) for e in eps_values]

    report = CheckReport(
        check=spec.check,
        inputs={"d": d, "R": R, "delta": delta, "eps": eps_values},
    )
    report.set_measurement(min(exact), limit)
    report.slack = min(exact) - limit
    table = pd.DataFrame({"eps": eps_values, "exact": exact, "limit": limit})
    report.require(all(v >= limit for v in exact), "a closed-form ratio falls below the ε → 0 limit")
    report.require(
        all(b < a for a, b in zip(exact, exact[1:])),
        "closed-form ratios do not decrease as ε decreases",
    )

    n_mc = _param(params, "n", spec.check, int, None)
    if n_mc is not None:
        sigma = ctx.tol("sigma")
        H = TargetSet.from_points([[0.0] * d])
        mc, errs = [], []
        for e in eps_values:
            A = SetSpec.annulus([0.0] * d, R, R + e, inner_closed=False, outer_closed=False)
            sub = thm2_check(H, A, delta, n_mc, ctx.scenario.seed, R, sigma,
                             ctx.config.sampling.r_samples, **ctx.sampling)
            mc.append(sub.measured)
            errs.append(sub.sigma)
            report.require(
                abs(sub.measured - annulus_ratio_exact(d, R, delta, e)) <= sigma * sub.sigma,
                f"Monte Carlo ratio {sub.measured:.6g} at ε={e} is more than {sigma}σ from the closed form",
            )
            report.require(sub.verdict, f"image volume bound fails at ε={e}")
        table["monte_carlo"] = mc
        table["monte_carlo_sigma"] = errs
    report.details["ratios"] = exact
    report.details["limit"] = limit
    return report, table


_RUNNERS: Dict[str, Callable[[_Context, CheckSpec, Dict[str, Any]], CheckResult]] = {
    "sweep": _run_sweep,
    "seminorm": _run_sweep,
    "thm1": _run_thm1,
    "sandwich": _run_sandwich,
    "density": _run_density,
    "continuity": _run_continuity,
    "open-closed": _run_open_closed,
    "contraction": _run_contraction,
    "derivative": _run_derivative,
    "diameter": _run_diameter,
    "k-decomposition": _run_k_decomposition,
    "lemma3": _run_lemma3,
    "thm2": _run_thm2,
    "coarea": _run_coarea,
    "coarea-slices": _run_coarea_slices,
    "annulus-ratio": _run_annulus_ratio,
}


# ---------------------------------------------------------------------------
# Orchestration
# ---------------------------------------------------------------------------


def _run_check(ctx: _Context, spec: CheckSpec) -> CheckOutcome:
    params = ctx.scenario.check_params(spec)
    logger.info(f"--- Check '{spec.id}' ({spec.check}), expecting {spec.expect} ---")
    try:
        report, table = _RUNNERS[spec.check](ctx, spec, params)
    except OutsideHypothesisError as e:
        report = CheckReport(check=spec.check, inputs=params, verdict=False, errors=[str(e)])
        report.details["status"] = "hypothesis-error"
        outcome = CheckOutcome(spec.id, spec.check, spec.expect, "hypothesis-error", report, None, str(e))
        if not outcome.matched:
            logger.error(f"[{spec.id}] {e}")
        else:
            logger.info(f"[{spec.id}] expected hypothesis error: {e}")
        return outcome

    status = "pass" if report.verdict else "fail"
    message = "; ".join(report.errors)
    outcome = CheckOutcome(spec.id, spec.check, spec.expect, status, report, table, message)
    if not outcome.matched:
        logger.error(f"[{spec.id}] status {status} but expected {spec.expect}")
    logger.info(f"Check '{spec.id}' finished: {status}")
    return outcome


def _metadata(scenario: Scenario, threads: int, config_path: Optional[Path]) -> Dict[str, Any]:
    return {
        "scenario": scenario.name,
        "source_file": scenario.source_file,
        "config_file": None if config_path is None else str(config_path),
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "threads": threads,
        "versions": {
            "python": platform.python_version(),
            "oscholder": oscholder.__version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "pandas": pd.__version__,
        },
    }


def write_outputs(
    result: ScenarioResult,
    scenario: Scenario,
    output_dir: Path,
    threads: int,
    config_path: Optional[Path] = None,
) -> Path:
    """Write per-check JSON and CSV files, ``summary.json`` and ``metadata.json``."""
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    for outcome in result.outcomes:
        save_report(outcome.report, output_dir, outcome.id)
        if outcome.table is not None:
            write_csv(outcome.table, output_dir / f"{outcome.id}.csv")
    write_json(result.summary(), output_dir / "summary.json")
    write_json(_metadata(scenario, threads, config_path), output_dir / "metadata.json")
    result.output_dir = output_dir
    logger.info(f"Reports written to {output_dir}")
    return output_dir


def run_scenario(
    scenario: Scenario,
    config: Optional[HarnessConfig] = None,
    output_dir: Optional[str | Path] = None,
    threads: int = 1,
    config_path: Optional[Path] = None,
    verbose: bool = False,
) -> ScenarioResult:
    """
    Execute the checks of ``scenario`` in declared order.

    Parameters
    ----------
    scenario : Scenario
        Parsed scenario.
    config : HarnessConfig, optional
        Harness configuration; defaults everywhere when omitted.
    output_dir : str | Path, optional
        Report directory; falls back to ``scenario.output_dir``. Nothing is
        written when both are None.
    threads : int
        Worker threads for sweeps and Monte Carlo chunks.
    verbose : bool
        Print the boxed per-check reports and the summary.

    Returns
    -------
    ScenarioResult

    Raises
    ------
    ScenarioSpecError
        Invalid scenario parameters.
    """
    config = config or HarnessConfig()
    logger.info(f"=== Running scenario '{scenario.name}' ({len(scenario.checks)} checks) ===")
    ctx = _Context(scenario, config, threads)
    outcomes = [_run_check(ctx, spec) for spec in scenario.checks]
    result = ScenarioResult(scenario.name, outcomes)

    if output_dir is None and scenario.output_dir is not None:
        output_dir = Path(scenario.output_dir)
        if scenario.base_dir is not None and not output_dir.is_absolute():
            output_dir = scenario.base_dir / output_dir
    if output_dir is not None:
        write_outputs(result, scenario, Path(output_dir), threads, config_path)

    if verbose:
        for outcome in outcomes:
            print_check_report(outcome.report)
        print_summary(o.report for o in outcomes)
    logger.info(f"=== Scenario '{scenario.name}' {'PASSED' if result.passed else 'FAILED'} ===")
    return result
