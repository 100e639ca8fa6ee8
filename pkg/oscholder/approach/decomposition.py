"""
decomposition.py

Oráculo de pertenencia a imágenes T_Δ(A), el mapa de paso 2δ y la
descomposición de un conjunto según cuántos pasos permanecen en él
(clases A_k, uniones 𝒜_k, resto 𝒜* y el conjunto 𝒯A).

Pertenencia a la imagen
-----------------------
``x ∈ T_Δ(A)`` si y solo si la preimagen candidata ``y = x + Δ·(x − p)/|x − p|``,
con ``p`` el sitio más cercano a ``x``, tiene a ``p`` como sitio más cercano
estricto, está en A y cumple d(y, H) > Δ. Un candidato construido desde otro
sitio q nunca pasa: si q fuera el sitio más cercano estricto de y_q, todos los
demás sitios estarían más lejos de x que q, y q sería el único sitio más
cercano a x. Los puntos con proyección empatada nunca son imágenes (un
conjunto nulo).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import List, Literal, Optional, Tuple, Union

import numpy as np

from oscholder.approach.sets import SetSpec
from oscholder.approach.target import (
    DEFAULT_TIE_RTOL,
    TargetSet,
    approach_many,
    project_many,
)
from oscholder.errors import InvalidParameterError, OnTargetSetError, OutsideHypothesisError

logger = logging.getLogger(__name__)

K_RTOL = 1e-12
INSIDE_COLLAR = "inside-collar"
STAR = "star"
# ak_labels codifica con -1 los puntos dentro del collar
INSIDE_COLLAR_CODE = -1
STAR_CODE = -2

Label = Union[int, Literal["star", "inside-collar"]]


def k_max(r: float, delta: float) -> int:
    """
    K = max{k ∈ ℕ : r − (2k+1)δ ≥ 0} = ⌊r/(2δ) − ½⌋.

    Ambas caracterizaciones se evalúan con tolerancia relativa 1e-12 sobre r
    y se contrastan entre sí, de modo que r = 3δ da 1 pese al redondeo de r/(2δ).

    Raises
    ------
    OutsideHypothesisError
        Salvo que 0 < δ ≤ r/3.
    """
    if not (r > 0 and 0 < delta <= r / 3.0 * (1.0 + K_RTOL)):
        raise OutsideHypothesisError(f"k_max needs 0 < δ <= r/3, got r={r}, δ={delta}")
    tol = K_RTOL * r
    K = max(int(math.floor(r / (2.0 * delta) - 0.5)), 0)
    while r - (2 * K + 3) * delta >= -tol:
        K += 1
    while K > 0 and r - (2 * K + 1) * delta < -tol:
        K -= 1

    floor_form = int(math.floor(r / (2.0 * delta) - 0.5 + tol / (2.0 * delta)))
    if floor_form != K:
        logger.warning(f"k_max characterizations disagree at r={r}, δ={delta}: {K} vs {floor_form}")
    return K


def _require_step_hypothesis(r: float, delta: float, d: int) -> None:
    limit = r / (2 * d + 1)
    if not 0 < delta < limit:
        raise OutsideHypothesisError(
            f"outside lemma hypothesis: need 0 < δ < r/(2d+1) = {limit:.6g}, got δ={delta:.6g}"
        )


def _on_target_tolerance(H: TargetSet) -> float:
    return DEFAULT_TIE_RTOL * H.scale


# ---------------------------------------------------------------------------
# Pertenencia a T_Δ(A)
# ---------------------------------------------------------------------------


def preimage_candidates(
    points: np.ndarray,
    H: TargetSet,
    delta: float,
    tie_rtol: float = DEFAULT_TIE_RTOL,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Inversa de T_Δ con comprobación de consistencia.

    Devuelve ``(y, valid)``: ``valid[i]`` es True cuando T_Δ lleva ``y[i]`` a
    ``points[i]`` con proyección sin empate y d(y, H) > Δ.

    Raises
    ------
    OnTargetSetError
        Si algún punto está sobre H (con tolerancia); ``mask`` los marca.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    site, distance, tie = project_many(pts, H, tie_rtol)
    on_target = distance <= _on_target_tolerance(H)
    if on_target.any():
        raise OnTargetSetError(
            f"{int(on_target.sum())} point(s) lie on the target set", mask=on_target
        )
    p = H.sites[site]
    y = pts + (delta / distance)[:, None] * (pts - p)
    y_site, y_distance, y_tie = project_many(y, H, tie_rtol)
    valid = ~tie & ~y_tie & (y_site == site) & (y_distance > delta)
    return y, valid


def tdelta_image_mask(
    points: np.ndarray,
    H: TargetSet,
    delta: float,
    A: SetSpec,
    tie_rtol: float = DEFAULT_TIE_RTOL,
) -> np.ndarray:
    """Versión vectorizada de ``tdelta_image_membership``."""
    if delta <= 0:
        raise InvalidParameterError(f"Δ must be > 0, got {delta}")
    y, valid = preimage_candidates(points, H, delta, tie_rtol)
    inside = np.zeros(len(y), dtype=bool)
    rows = np.nonzero(valid)[0]
    if len(rows):
        inside[rows] = A.contains(y[rows])
    return inside


def tdelta_image_membership(
    x: np.ndarray,
    H: TargetSet,
    delta: float,
    A: SetSpec,
    tie_rtol: float = DEFAULT_TIE_RTOL,
) -> bool:
    """
    True si y solo si ``x`` ∈ T_Δ(A).

    Raises
    ------
    OnTargetSetError
        Si ``x`` está sobre H; quien llama vuelve a muestrear.
    """
    return bool(tdelta_image_mask(np.asarray(x, dtype=np.float64)[None, :], H, delta, A, tie_rtol)[0])


# ---------------------------------------------------------------------------
# Clases del paso 2δ
# ---------------------------------------------------------------------------


@dataclass
class AkClass:
    """
    Clase de un punto bajo el mapa de paso 2δ.

    ``label`` es k (número de iterados iniciales que permanecen en A),
    ``"inside-collar"`` si d(x, H) < r − δ, o ``"star"``.
    """

    label: Label
    trail: List[np.ndarray] = field(default_factory=list)
    tie: bool = False
    distance: float = 0.0

    @property
    def k(self) -> Optional[int]:
        return self.label if isinstance(self.label, int) else None


def step_map(
    points: np.ndarray, H: TargetSet, delta: float, tie_rtol: float = DEFAULT_TIE_RTOL
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    El mapa T = T_{2δ}, definido donde d(x, H) ≥ 2δ.

    Devuelve ``(images, defined, tie)``.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    _, distance, _ = project_many(pts, H, tie_rtol)
    images, tie = approach_many(pts, H, 2.0 * delta, tie_rtol)
    return images, distance >= 2.0 * delta, tie


def ak_classify(
    x: np.ndarray,
    A: SetSpec,
    H: TargetSet,
    r: float,
    delta: float,
    tie_rtol: float = DEFAULT_TIE_RTOL,
) -> AkClass:
    """
    Clasifica ``x`` ∈ A según cuántos pasos 2δ hacia H permanecen en A.

    Los puntos con d(x, H) < r − δ están dentro del collar. Si no, T se itera
    hasta K = k_max(r, δ) veces; la etiqueta es el número de iterados iniciales
    en A. Un iterado donde T no está definido cuenta como salida de A.
    """
    x = np.asarray(x, dtype=np.float64)
    _require_step_hypothesis(r, delta, x.size)
    if not A.contains(x):
        raise InvalidParameterError(f"ak_classify needs x in A, got {x.tolist()}")
    site = project_many(x[None, :], H, tie_rtol)
    distance, tie = float(site[1][0]), bool(site[2][0])
    if distance < r - delta:
        return AkClass(INSIDE_COLLAR, [], tie, distance)

    K = k_max(r, delta)
    trail: List[np.ndarray] = []
    label = 0
    current = x[None, :]
    for step in range(1, K + 1):
        images, defined, step_tie = step_map(current, H, delta, tie_rtol)
        tie = tie or bool(step_tie[0])
        if not defined[0]:
            break
        current = images
        trail.append(images[0].copy())
        if not A.contains(images)[0]:
            break
        label = step
    if tie:
        logger.debug(f"ak_classify: projection tie along the trail of {x.tolist()}")
    return AkClass(label, trail, tie, distance)


def ak_labels(
    points: np.ndarray,
    A: SetSpec,
    H: TargetSet,
    r: float,
    delta: float,
    tie_rtol: float = DEFAULT_TIE_RTOL,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Versión vectorizada de ``ak_classify`` para puntos de A.

    Devuelve ``(labels, tie)`` con los puntos dentro del collar codificados como -1.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    _require_step_hypothesis(r, delta, pts.shape[1])
    _, distance, tie = project_many(pts, H, tie_rtol)
    labels = np.full(len(pts), INSIDE_COLLAR_CODE, dtype=np.int64)
    active = distance >= r - delta
    labels[active] = 0
    K = k_max(r, delta)
    current = pts.copy()
    for step in range(1, K + 1):
        rows = np.nonzero(active)[0]
        if not len(rows):
            break
        images, defined, step_tie = step_map(current[rows], H, delta, tie_rtol)
        tie[rows] |= step_tie
        stays = defined & A.contains(images)
        current[rows] = images
        labels[rows[stays]] = step
        active[rows[~stays]] = False
    return labels, tie


def _backward_steps(distance: float, r: float, delta: float) -> int:
    """Único j ≥ 0 con distance + 2jδ ∈ [r − δ, r + δ)."""
    if distance >= r - delta:
        return 0
    j = int(math.ceil((r - delta - distance) / (2.0 * delta)))
    if distance + 2 * j * delta >= r + delta:
        j -= 1
    while distance + 2 * j * delta < r - delta:
        j += 1
    return j


def curly_classify(
    z: np.ndarray,
    A: SetSpec,
    H: TargetSet,
    r: float,
    delta: float,
    tie_rtol: float = DEFAULT_TIE_RTOL,
) -> AkClass:
    """
    Sitúa z ∈ A en 𝒜_k = A_k ∪ T A_k ∪ … ∪ T^k A_k (más T^{K+1}A_K ∩ A para
    k = K) o en el resto 𝒜*.

    z se recorre hacia atrás por la única cadena de preimágenes 2δ hasta la
    banda r − δ ≤ d < r + δ; la clase k del punto de partida debe cumplir
    k ≥ j (j pasos recorridos), o j = K + 1 con k = K.
    """
    z = np.asarray(z, dtype=np.float64)
    _require_step_hypothesis(r, delta, z.size)
    if not A.contains(z):
        raise InvalidParameterError(f"curly_classify needs z in A, got {z.tolist()}")
    _, dist_arr, tie_arr = project_many(z[None, :], H, tie_rtol)
    distance, tie = float(dist_arr[0]), bool(tie_arr[0])
    K = k_max(r, delta)
    j = _backward_steps(distance, r, delta)
    if j > K + 1:
        return AkClass(STAR, [], tie, distance)

    trail = [z.copy()]
    current = z[None, :]
    for _ in range(j):
        try:
            previous, valid = preimage_candidates(current, H, 2.0 * delta, tie_rtol)
        except OnTargetSetError:
            return AkClass(STAR, trail, tie, distance)
        if not valid[0] or not A.contains(previous)[0]:
            return AkClass(STAR, trail, tie, distance)
        current = previous
        trail.append(previous[0].copy())

    start = ak_classify(current[0], A, H, r, delta, tie_rtol)
    tie = tie or start.tie
    k = start.k
    if k is None:
        return AkClass(STAR, trail, tie, distance)
    if k >= j or (j == K + 1 and k == K):
        return AkClass(k, trail, tie, distance)
    return AkClass(STAR, trail, tie, distance)


def curly_labels(
    points: np.ndarray,
    A: SetSpec,
    H: TargetSet,
    r: float,
    delta: float,
    tie_rtol: float = DEFAULT_TIE_RTOL,
) -> np.ndarray:
    """Versión vectorizada de ``curly_classify``; 𝒜* se codifica como -2."""
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    labels = np.empty(len(pts), dtype=np.int64)
    for i, z in enumerate(pts):
        label = curly_classify(z, A, H, r, delta, tie_rtol).label
        labels[i] = STAR_CODE if label == STAR else label
    return labels


# ---------------------------------------------------------------------------
# 𝒯A = (A ∩ collar) ∪ T A
# ---------------------------------------------------------------------------


def tee_mask(
    points: np.ndarray,
    A: SetSpec,
    H: TargetSet,
    r: float,
    delta: float,
    tie_rtol: float = DEFAULT_TIE_RTOL,
) -> np.ndarray:
    """Versión vectorizada de ``tee_membership``."""
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    _require_step_hypothesis(r, delta, pts.shape[1])
    _, distance, _ = project_many(pts, H, tie_rtol)
    collar = A.contains(pts) & (distance < r - delta)
    rest = np.nonzero(~collar)[0]
    result = collar.copy()
    if len(rest):
        try:
            result[rest] = tdelta_image_mask(pts[rest], H, 2.0 * delta, A, tie_rtol)
        except OnTargetSetError as e:
            offending = np.zeros(len(pts), dtype=bool)
            offending[rest[e.mask]] = True
            raise OnTargetSetError(str(e), mask=offending)
    return result


def tee_membership(
    x: np.ndarray,
    A: SetSpec,
    H: TargetSet,
    r: float,
    delta: float,
    tie_rtol: float = DEFAULT_TIE_RTOL,
) -> bool:
    """
    True si y solo si x ∈ (A ∩ H^{(r−δ)}) ∪ T A, con T el mapa de paso 2δ.

    Raises
    ------
    OnTargetSetError
        Si x está sobre H fuera de la rama del collar.
    """
    return bool(tee_mask(np.asarray(x, dtype=np.float64)[None, :], A, H, r, delta, tie_rtol)[0])
