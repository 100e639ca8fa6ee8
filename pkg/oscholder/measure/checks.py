"""
checks.py

Verificaciones de medida sobre conjuntos continuos:

* ``thm2_check``: Leb(T_Δ A) ≥ ((R − Δ)/R)^{d−1}·Leb(A) por Monte Carlo.
* ``annulus_ratio_exact`` / ``annulus_ratio_limit``: el ejemplo de
  optimalidad con anillos y su límite ε → 0.
* ``coarea_check_radial`` y ``coarea_slice_shrink_check``: descomposición de
  Leb(A) en cortes de nivel de la distancia a un único punto (d = 2).
* ``lemma3_ratio_check``: Leb(𝒯A) ≥ (1 − 2dδ/(r − δ))·Leb(A), globalmente y
  por clases 𝒜_k.

Todos los veredictos estadísticos usan una holgura de ``sigma`` errores
estándar combinados y publican el z-score.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Sequence

import numpy as np
import pandas as pd
from scipy.integrate import trapezoid

from oscholder.approach.decomposition import (
    INSIDE_COLLAR_CODE,
    STAR_CODE,
    ak_labels,
    curly_labels,
    preimage_candidates,
    tdelta_image_mask,
    tee_mask,
)
from oscholder.approach.sets import SetSpec
from oscholder.approach.target import DEFAULT_TIE_RTOL, TargetSet, distance_to, project_many
from oscholder.errors import (
    InvalidParameterError,
    OnTargetSetError,
    OutsideHypothesisError,
    UnsupportedDimensionError,
)
from oscholder.measure.sampling import (
    DEFAULT_CHUNK_SIZE,
    DEFAULT_MAX_RETRIES,
    VolumeEstimate,
    as_box,
    box_volume,
    grow_box,
    mc_volume,
    ratio_stderr,
    sample_in_set,
    uniform_points,
)
from oscholder.quality.report import CheckReport
from oscholder.utils.streams import philox_generator

logger = logging.getLogger(__name__)

# flujos Philox; cada estimación de una verificación usa el suyo
STREAM_A = 1
STREAM_IMAGE = 2
STREAM_DISTANCE = 3
STREAM_ANGLES = 4
STREAM_CLASS_A = 5
STREAM_CLASS_IMAGE = 6

DEFAULT_R_SAMPLES = 10_000
DEFAULT_SIGMA = 3.0
DEFAULT_COAREA_RTOL = 0.01
BISECTION_STEPS = 48


# ---------------------------------------------------------------------------
# Formas cerradas
# ---------------------------------------------------------------------------


def _power_gap(a: float, eps: float, d: int) -> float:
    """(a + ε)^d − a^d sin cancelación para ε pequeño."""
    if a == 0:
        return eps**d
    return a**d * math.expm1(d * math.log1p(eps / a))


def annulus_ratio_exact(d: int, R: float, delta: float, eps: float) -> float:
    """
    Leb(T_Δ A)/Leb(A) para el anillo A = {R < |x| < R + ε} y H = {0}:
    ((R − Δ + ε)^d − (R − Δ)^d) / ((R + ε)^d − R^d).

    Raises
    ------
    InvalidParameterError
        Salvo que d ≥ 1, 0 ≤ Δ ≤ R, R > 0 y ε > 0.
    """
    if d < 1:
        raise InvalidParameterError(f"Dimension must be >= 1, got {d}")
    if not (R > 0 and 0 <= delta <= R):
        raise InvalidParameterError(f"Need 0 <= Δ <= R and R > 0, got R={R}, Δ={delta}")
    if not eps > 0:
        raise InvalidParameterError(f"ε must be > 0, got {eps}")
    if delta == 0:
        return 1.0
    return _power_gap(R - delta, eps, d) / _power_gap(R, eps, d)


def annulus_ratio_limit(d: int, R: float, delta: float) -> float:
    """Límite ε → 0 de ``annulus_ratio_exact``: ((R − Δ)/R)^{d−1}."""
    if d < 1:
        raise InvalidParameterError(f"Dimension must be >= 1, got {d}")
    if not (R > 0 and 0 <= delta <= R):
        raise InvalidParameterError(f"Need 0 <= Δ <= R and R > 0, got R={R}, Δ={delta}")
    return ((R - delta) / R) ** (d - 1)


def _radial_closed_form(H: TargetSet, A: SetSpec, delta: float) -> Optional[float]:
    """Cociente exacto de volúmenes cuando H es un sitio y A un anillo a su alrededor."""
    if len(H) != 1 or A.shape != "annulus":
        return None
    p = A.params
    if not np.allclose(p["center"], H.sites[0], rtol=0.0, atol=1e-12 * H.scale):
        return None
    a, b = p["inner"], p["outer"]
    if a < delta:
        return None
    return annulus_ratio_exact(A.dim, a, delta, b - a) if delta > 0 else 1.0


# ---------------------------------------------------------------------------
# Ínfimo de la distancia
# ---------------------------------------------------------------------------


def measured_distance_infimum(
    A: SetSpec,
    H: TargetSet,
    n: int = DEFAULT_R_SAMPLES,
    seed: int = 0,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
    tie_rtol: float = DEFAULT_TIE_RTOL,
) -> float:
    """
    Estima R = inf_{x ∈ A} d(x, H) con ``n`` muestras de A.

    Cada muestra se lleva hacia la frontera de A por bisección del segmento
    hasta su sitio más cercano, conservando el último punto dentro de A; así la
    estimación se concentra en la frontera que mira a H. Todos los puntos
    evaluados están en A, luego el resultado nunca queda por debajo del ínfimo.
    """
    samples = sample_in_set(A.contains, A.bounding_box(), n, seed, STREAM_DISTANCE, chunk_size)
    site, distance, _ = project_many(samples, H, tie_rtol)
    targets = H.sites[site]
    if np.any(A.contains(targets)):
        return 0.0
    lo = np.zeros(len(samples))
    hi = np.ones(len(samples))
    direction = targets - samples
    for _ in range(BISECTION_STEPS):
        mid = 0.5 * (lo + hi)
        inside = A.contains(samples + mid[:, None] * direction)
        lo = np.where(inside, mid, lo)
        hi = np.where(inside, hi, mid)
    boundary = samples + lo[:, None] * direction
    R = float(min(distance.min(), distance_to(boundary, H).min()))
    logger.debug(f"Measured distance infimum R={R:.9g} from {n} samples")
    return R


def _z_score(value: float, bound: float, sigma: float) -> float:
    if sigma > 0:
        return (value - bound) / sigma
    if value == bound:
        return 0.0
    return math.copysign(math.inf, value - bound)


# ---------------------------------------------------------------------------
# Volumen de la imagen
# ---------------------------------------------------------------------------


@dataclass
class Thm2Report(CheckReport):
    """
    Leb(T_Δ A) ≥ ((R − Δ)/R)^{d−1}·Leb(A).

    ``measured`` es el cociente Monte Carlo, ``bound`` la cota inferior y
    ``sigma`` el error estándar combinado del cociente; ``slack`` es
    ``measured − bound`` (positivo cuando la cota se cumple).
    """

    delta: float = 0.0
    R: float = 0.0
    volume_A: Optional[VolumeEstimate] = field(default=None, repr=False)
    volume_image: Optional[VolumeEstimate] = field(default=None, repr=False)
    z_score: float = 0.0
    closed_form: Optional[float] = None

    @property
    def ratio(self) -> Optional[float]:
        return self.measured


def _set_lower_bound(report: CheckReport, value: float, bound: float, sigma: float) -> None:
    report.set_measurement(value, bound, sigma)
    report.slack = float(value - bound)


def thm2_check(
    H: TargetSet,
    A: SetSpec,
    delta: float,
    n: int = 1_000_000,
    seed: int = 0,
    R: Optional[float] = None,
    sigma: float = DEFAULT_SIGMA,
    r_samples: int = DEFAULT_R_SAMPLES,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
    max_retries: int = DEFAULT_MAX_RETRIES,
    threads: int = 1,
    tie_rtol: float = DEFAULT_TIE_RTOL,
) -> Thm2Report:
    """
    Verificación Monte Carlo de la cota del volumen de la imagen por T_Δ.

    Parameters
    ----------
    H : TargetSet
        Sitios objetivo.
    A : SetSpec
        Conjunto acotado a distancia ≥ R de H.
    delta : float
        Paso Δ ≥ 0.
    R : float, optional
        Cota de distancia fijada; si no, se mide con ``r_samples`` muestras.

    Raises
    ------
    OutsideHypothesisError
        Si R < Δ o R = 0.
    """
    if delta < 0:
        raise InvalidParameterError(f"Δ must be >= 0, got {delta}")
    if A.dim != H.dim:
        raise InvalidParameterError(f"A is {A.dim}-D but H is {H.dim}-D")
    logger.info(f"Starting thm2 check: Δ={delta}, n={n}, seed={seed}")
    pinned = R is not None
    if R is None:
        R = measured_distance_infimum(A, H, r_samples, seed, chunk_size, tie_rtol)
    if R <= 0 or R < delta:
        raise OutsideHypothesisError(
            f"Theorem hypothesis needs d(H, A) >= R >= Δ with R > 0; got R={R:.6g}, Δ={delta:.6g}"
        )

    d = A.dim
    box_A = as_box(A.bounding_box())
    vol_A = mc_volume(A.contains, box_A, n, seed, STREAM_A, chunk_size, max_retries, threads)
    if delta == 0:
        vol_img = vol_A
    else:
        def image(points: np.ndarray) -> np.ndarray:
            return tdelta_image_mask(points, H, delta, A, tie_rtol)

        vol_img = mc_volume(
            image, grow_box(box_A, delta), n, seed, STREAM_IMAGE, chunk_size, max_retries, threads
        )

    bound = annulus_ratio_limit(d, R, delta)
    report = Thm2Report(
        check="thm2",
        inputs={"delta": delta, "n": n, "seed": seed, "R_pinned": pinned, "sigma": sigma,
                "H": H.to_dict(), "A": A.to_dict()},
        delta=delta,
        R=R,
        volume_A=vol_A,
        volume_image=vol_img,
    )
    if vol_A.estimate == 0:
        report.add_error("A has no Monte Carlo hits; the ratio is undefined")
        return report

    if delta == 0:
        ratio, err = 1.0, 0.0
    else:
        ratio, err = ratio_stderr(vol_img, vol_A)
    _set_lower_bound(report, ratio, bound, err)
    report.z_score = _z_score(ratio, bound, err)
    report.closed_form = _radial_closed_form(H, A, delta)
    report.details.update({
        "R": R,
        "volume_A": vol_A.to_dict(),
        "volume_image": vol_img.to_dict(),
        "z_score": report.z_score,
        "closed_form": report.closed_form,
    })
    report.require(
        ratio >= bound - sigma * err,
        f"ratio {ratio:.6g} below bound {bound:.6g} by {report.z_score:.2f}σ",
    )
    if report.closed_form is not None and err > 0:
        z_exact = (ratio - report.closed_form) / err
        report.details["z_closed_form"] = z_exact
        if abs(z_exact) > sigma:
            report.add_warning(
                f"ratio {ratio:.6g} is {z_exact:.2f}σ away from the closed form {report.closed_form:.6g}"
            )
    logger.info(f"thm2: ratio={ratio:.6g} ± {err:.2g}, bound={bound:.6g}, verdict={report.verdict}")
    return report


# ---------------------------------------------------------------------------
# Descomposición por coárea alrededor de un sitio
# ---------------------------------------------------------------------------


@dataclass
class CoareaReport(CheckReport):
    """Integral de cortes frente a volumen; ``table`` tiene una fila por nivel t."""

    table: Optional[pd.DataFrame] = field(default=None, repr=False)


@dataclass
class Lemma3Report(CheckReport):
    """
    Leb(𝒯A) frente a (1 − 2dδ/(r − δ))·Leb(A); ``table`` guarda los volúmenes
    por clase cuando se comprueban las clases.
    """

    factor: float = 1.0
    table: Optional[pd.DataFrame] = field(default=None, repr=False)


def _single_site(site: Sequence[float] | TargetSet) -> np.ndarray:
    if isinstance(site, TargetSet):
        if len(site) != 1:
            raise InvalidParameterError(f"Radial checks need a single-site target set, got {len(site)} sites")
        p = site.sites[0]
    else:
        p = np.asarray(site, dtype=np.float64).reshape(-1)
    if p.size != 2:
        raise UnsupportedDimensionError(f"Radial coarea checks are implemented for d=2, got d={p.size}")
    return p


def _default_levels(A: SetSpec, p: np.ndarray, n_t: int) -> np.ndarray:
    lo, hi = as_box(A.bounding_box())
    corners = np.array([[x, y] for x in (lo[0], hi[0]) for y in (lo[1], hi[1])])
    t_max = float(np.linalg.norm(corners - p, axis=1).max())
    return np.linspace(0.0, t_max, n_t)


def _circle_fractions(
    contains, p: np.ndarray, levels: np.ndarray, n_angles: int, seed: int, block: int = 64
) -> np.ndarray:
    """
    Fracción de ángulos estratificados con jitter θ_j = 2π(j + u_j)/n cuyo punto
    a radio t está en el conjunto, para cada nivel t.
    """
    fractions = np.empty(len(levels))
    base = np.arange(n_angles)
    for chunk, start in enumerate(range(0, len(levels), block)):
        ts = levels[start:start + block]
        rng = philox_generator(seed, STREAM_ANGLES, chunk)
        theta = 2.0 * np.pi * (base + rng.random((len(ts), n_angles))) / n_angles
        pts = np.stack([np.cos(theta), np.sin(theta)], axis=-1) * ts[:, None, None] + p
        hits = np.asarray(contains(pts.reshape(-1, 2)), dtype=bool).reshape(len(ts), n_angles)
        fractions[start:start + block] = hits.mean(axis=1)
    return fractions


def _trapezoid_weights(t: np.ndarray) -> np.ndarray:
    w = np.zeros_like(t)
    gaps = np.diff(t)
    w[:-1] += gaps / 2
    w[1:] += gaps / 2
    return w


def coarea_check_radial(
    A: SetSpec,
    site: Sequence[float] | TargetSet,
    t_grid: Optional[Sequence[float]] = None,
    n_angles: int = 4096,
    n: int = 1_000_000,
    seed: int = 0,
    rtol: float = DEFAULT_COAREA_RTOL,
    sigma: float = DEFAULT_SIGMA,
    n_t: int = 2001,
    reference: Optional[float] = None,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
    threads: int = 1,
) -> CoareaReport:
    """
    Leb(A) = ∫₀^∞ H¹({x ∈ A : |x − p| = t}) dt para un único sitio p en d = 2.

    La longitud de cada corte es 2πt por la fracción de aciertos de los ángulos
    con jitter; los cortes se integran con la regla del trapecio y se comparan
    con ``mc_volume(A)`` (o con ``reference`` si hay forma cerrada). Pasa cuando
    |lhs − rhs| ≤ max(rtol·rhs, sigma·error estándar combinado).
    """
    p = _single_site(site)
    if A.dim != 2:
        raise UnsupportedDimensionError(f"Radial coarea checks are implemented for d=2, got d={A.dim}")
    logger.info(f"Starting coarea check: n_angles={n_angles}, n={n}, seed={seed}")
    levels = (_default_levels(A, p, n_t) if t_grid is None
              else np.asarray(t_grid, dtype=np.float64))
    if levels.ndim != 1 or len(levels) < 2 or np.any(np.diff(levels) <= 0) or levels[0] < 0:
        raise InvalidParameterError("t grid must be increasing, nonnegative and have at least two levels")

    frac = _circle_fractions(A.contains, p, levels, n_angles, seed)
    lengths = 2.0 * np.pi * levels * frac
    lhs = float(trapezoid(lengths, levels))
    slice_err = 2.0 * np.pi * levels * np.sqrt(frac * (1.0 - frac) / n_angles)
    lhs_err = float(np.sqrt(np.sum((_trapezoid_weights(levels) * slice_err) ** 2)))

    report = CoareaReport(
        check="coarea",
        inputs={"site": p, "n_angles": n_angles, "n": n, "seed": seed, "rtol": rtol,
                "sigma": sigma, "levels": len(levels), "A": A.to_dict()},
    )
    if reference is None:
        vol = mc_volume(A.contains, A.bounding_box(), n, seed, STREAM_A, chunk_size, threads=threads)
        rhs, rhs_err = vol.estimate, vol.stderr
        report.details["volume"] = vol.to_dict()
    else:
        rhs, rhs_err = float(reference), 0.0
    combined = math.hypot(lhs_err, rhs_err)
    gap = abs(lhs - rhs)
    allowance = max(rtol * abs(rhs), sigma * combined)
    report.set_measurement(gap, allowance, combined)
    report.table = pd.DataFrame({"t": levels, "hit_fraction": frac, "length": lengths})
    report.details.update({"lhs": lhs, "lhs_stderr": lhs_err, "rhs": rhs, "rhs_stderr": rhs_err})
    report.require(
        gap <= allowance,
        f"slice integral {lhs:.6g} differs from volume {rhs:.6g} by {gap:.3g} > {allowance:.3g}",
    )
    logger.info(f"coarea: lhs={lhs:.6g}, rhs={rhs:.6g}, verdict={report.verdict}")
    return report


def coarea_slice_shrink_check(
    A: SetSpec,
    site: Sequence[float] | TargetSet,
    delta: float,
    t_grid: Optional[Sequence[float]] = None,
    n_angles: int = 4096,
    seed: int = 0,
    R: Optional[float] = None,
    n_t: int = 201,
    r_samples: int = DEFAULT_R_SAMPLES,
    tie_rtol: float = DEFAULT_TIE_RTOL,
) -> CoareaReport:
    """
    Forma por cortes de la cota de la imagen para un sitio en d = 2:
    H¹({T_Δ A, d = t}) ≥ ((R − Δ)/R)·H¹({A, d = t + Δ}) para todo nivel t > 0.

    Ambos cortes se muestrean en los mismos ángulos, así que cada nivel puede
    perder como mucho dos ángulos de frontera por redondeo; esa es la holgura
    por corte.
    """
    p = _single_site(site)
    if delta <= 0:
        raise InvalidParameterError(f"Δ must be > 0, got {delta}")
    H = TargetSet.from_points([p])
    if R is None:
        R = measured_distance_infimum(A, H, r_samples, seed, tie_rtol=tie_rtol)
    if R <= 0 or R < delta:
        raise OutsideHypothesisError(
            f"Slice bound needs d(H, A) >= R >= Δ with R > 0; got R={R:.6g}, Δ={delta:.6g}"
        )
    factor = (R - delta) / R
    if t_grid is None:
        t_top = float(_default_levels(A, p, 2)[-1]) - delta
        # el nivel R − Δ es frontera de órbita; se empieza justo por encima
        t_bottom = max(R - delta, 0.0) + 1e-6 * R
        levels = np.linspace(t_bottom, max(t_top, t_bottom * (1 + 1e-9)), n_t)
    else:
        levels = np.asarray(t_grid, dtype=np.float64)
    if np.any(levels <= 0):
        raise InvalidParameterError("Slice levels must be > 0")
    logger.info(f"Starting coarea slice check: Δ={delta}, R={R:.6g}, {len(levels)} levels")

    def image(points: np.ndarray) -> np.ndarray:
        return tdelta_image_mask(points, H, delta, A, tie_rtol)

    frac_img = _circle_fractions(image, p, levels, n_angles, seed)
    frac_A = _circle_fractions(A.contains, p, levels + delta, n_angles, seed)
    len_img = 2.0 * np.pi * levels * frac_img
    len_A = 2.0 * np.pi * (levels + delta) * frac_A
    allowance = 2.0 * np.pi * levels * 2.0 / n_angles
    shortfall = factor * len_A - len_img
    violation = shortfall > allowance

    report = CoareaReport(
        check="coarea-slices",
        inputs={"site": p, "delta": delta, "n_angles": n_angles, "seed": seed, "R": R,
                "A": A.to_dict()},
    )
    report.set_measurement(float(shortfall.max()), float(allowance.max()))
    report.table = pd.DataFrame({
        "t": levels, "image_length": len_img, "source_length": len_A,
        "bound": factor * len_A, "violation": violation,
    })
    report.details.update({"factor": factor, "violations": int(violation.sum())})
    report.require(not violation.any(), f"{int(violation.sum())} slice(s) shrink below the bound")
    return report


# ---------------------------------------------------------------------------
# Volumen de la descomposición en el collar
# ---------------------------------------------------------------------------


def lemma3_factor(r: float, delta: float, d: int) -> float:
    """1 − 2dδ/(r − δ)."""
    return 1.0 - 2.0 * d * delta / (r - delta)


def _require_collar(
    A: SetSpec, H: TargetSet, r: float, delta: float, r_samples: int, seed: int, chunk_size: int
) -> float:
    samples = sample_in_set(A.contains, A.bounding_box(), r_samples, seed, STREAM_DISTANCE, chunk_size)
    farthest = float(distance_to(samples, H).max())
    if farthest >= r + delta:
        raise OutsideHypothesisError(
            f"A is not inside the r+δ collar: a sample lies at distance {farthest:.6g} >= {r + delta:.6g}"
        )
    return farthest


def _class_table(
    A: SetSpec,
    H: TargetSet,
    r: float,
    delta: float,
    n: int,
    seed: int,
    factor: float,
    sigma: float,
    min_hits: int,
    tie_rtol: float,
) -> pd.DataFrame:
    """Volúmenes por clase Leb(𝒜_k) y Leb(T𝒜_k), con una muestra de caja cada uno."""
    box_A = as_box(A.bounding_box())
    box_T = grow_box(box_A, 2.0 * delta)
    vol_A, vol_T = box_volume(box_A), box_volume(box_T)

    pts = uniform_points(philox_generator(seed, STREAM_CLASS_A), box_A, n)
    inside = pts[A.contains(pts)]
    labels_A = curly_labels(inside, A, H, r, delta, tie_rtol)

    pts = uniform_points(philox_generator(seed, STREAM_CLASS_IMAGE), box_T, n)
    try:
        pre, valid = preimage_candidates(pts, H, 2.0 * delta, tie_rtol)
    except OnTargetSetError as e:
        keep = ~e.mask
        pts = pts[keep]
        pre, valid = preimage_candidates(pts, H, 2.0 * delta, tie_rtol)
    rows = np.nonzero(valid)[0]
    rows = rows[A.contains(pre[rows])]
    labels_T = curly_labels(pre[rows], A, H, r, delta, tie_rtol)
    n_T = len(pts)

    classes = sorted(set(labels_A[labels_A >= 0].tolist()))
    records = []
    for k in classes:
        hits_A = int(np.count_nonzero(labels_A == k))
        hits_T = int(np.count_nonzero(labels_T == k))
        est_A = VolumeEstimate(vol_A * hits_A / n, vol_A * math.sqrt(hits_A / n * (1 - hits_A / n) / n),
                               n, hits_A, seed, box_A, vol_A, STREAM_CLASS_A)
        est_T = VolumeEstimate(vol_T * hits_T / n_T,
                               vol_T * math.sqrt(hits_T / n_T * (1 - hits_T / n_T) / n_T),
                               n_T, hits_T, seed, box_T, vol_T, STREAM_CLASS_IMAGE)
        ratio, err = ratio_stderr(est_T, est_A)
        checked = hits_A >= min_hits
        records.append({
            "k": k,
            "hits_A": hits_A,
            "hits_image": hits_T,
            "leb_A": est_A.estimate,
            "leb_image": est_T.estimate,
            "ratio": ratio,
            "sigma": err,
            "checked": checked,
            "violation": bool(checked and ratio < factor - sigma * err),
        })
    star = int(np.count_nonzero(labels_A == STAR_CODE))
    logger.debug(f"lemma3 classes: {[r_['k'] for r_ in records]}, star hits={star}")
    return pd.DataFrame.from_records(
        records,
        columns=["k", "hits_A", "hits_image", "leb_A", "leb_image", "ratio", "sigma", "checked", "violation"],
    )


def lemma3_ratio_check(
    A: SetSpec,
    H: TargetSet,
    r: float,
    delta: float,
    n: int = 1_000_000,
    seed: int = 0,
    per_class: bool = False,
    n_class: int = 20_000,
    min_class_hits: int = 200,
    sigma: float = DEFAULT_SIGMA,
    r_samples: int = DEFAULT_R_SAMPLES,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
    max_retries: int = DEFAULT_MAX_RETRIES,
    threads: int = 1,
    tie_rtol: float = DEFAULT_TIE_RTOL,
) -> Lemma3Report:
    """
    Leb(𝒯A) ≥ (1 − 2dδ/(r − δ))·Leb(A) para A dentro del collar r + δ de H.

    𝒯A = (A ∩ H^{(r−δ)}) ∪ T A con T el mapa de paso 2δ. Con ``per_class`` se
    comprueba el mismo factor en cada clase 𝒜_k con al menos
    ``min_class_hits`` muestras, y ``table`` guarda los volúmenes por clase.
    Siempre se informa de los recuentos por A_k de ``ak_labels``.

    Raises
    ------
    OutsideHypothesisError
        Si δ ≥ r/(2d+1) o A sale del collar.
    """
    d = A.dim
    limit = r / (2 * d + 1)
    if not 0 < delta < limit:
        raise OutsideHypothesisError(
            f"outside lemma hypothesis: need 0 < δ < r/(2d+1) = {limit:.6g}, got δ={delta:.6g}"
        )
    logger.info(f"Starting lemma3 check: r={r}, δ={delta}, n={n}, seed={seed}")
    farthest = _require_collar(A, H, r, delta, r_samples, seed, chunk_size)
    factor = lemma3_factor(r, delta, d)

    box_A = as_box(A.bounding_box())
    vol_A = mc_volume(A.contains, box_A, n, seed, STREAM_A, chunk_size, max_retries, threads)

    def tee(points: np.ndarray) -> np.ndarray:
        return tee_mask(points, A, H, r, delta, tie_rtol)

    vol_T = mc_volume(tee, grow_box(box_A, 2.0 * delta), n, seed, STREAM_IMAGE,
                      chunk_size, max_retries, threads)

    report = Lemma3Report(
        check="lemma3",
        factor=factor,
        inputs={"r": r, "delta": delta, "n": n, "seed": seed, "sigma": sigma,
                "per_class": per_class, "H": H.to_dict(), "A": A.to_dict()},
    )
    if vol_A.estimate == 0:
        report.add_error("A has no Monte Carlo hits; the ratio is undefined")
        return report
    ratio, err = ratio_stderr(vol_T, vol_A)
    _set_lower_bound(report, ratio, factor, err)
    report.details.update({
        "factor": factor,
        "farthest_sample_distance": farthest,
        "volume_A": vol_A.to_dict(),
        "volume_tee": vol_T.to_dict(),
        "z_score": _z_score(ratio, factor, err),
    })
    report.require(ratio >= factor - sigma * err,
                   f"ratio {ratio:.6g} below factor {factor:.6g} beyond {sigma}σ")

    class_pts = sample_in_set(A.contains, box_A, min(n_class, n), seed, STREAM_CLASS_A, chunk_size)
    labels, ties = ak_labels(class_pts, A, H, r, delta, tie_rtol)
    counts: Dict[str, Any] = {
        ("inside-collar" if k == INSIDE_COLLAR_CODE else str(k)): int(c)
        for k, c in zip(*np.unique(labels, return_counts=True))
    }
    report.details["ak_counts"] = counts
    if ties.any():
        report.add_warning(f"{int(ties.sum())} classified sample(s) had projection ties")

    if per_class:
        table = _class_table(A, H, r, delta, n_class, seed, factor, sigma, min_class_hits, tie_rtol)
        report.table = table
        bad = table[table["violation"]]
        report.details["classes_checked"] = int(table["checked"].sum())
        report.require(bad.empty, f"class(es) {bad['k'].tolist()} fall below the factor")
    logger.info(f"lemma3: ratio={ratio:.6g} ± {err:.2g}, factor={factor:.6g}, verdict={report.verdict}")
    return report
