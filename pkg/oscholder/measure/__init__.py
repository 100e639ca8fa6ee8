"""
Módulo measure: estimación Monte Carlo de volúmenes y verificaciones de
medida (imagen de T_Δ, anillos, coárea y descomposición en el collar).
"""

from oscholder.measure.checks import (
    CoareaReport,
    Lemma3Report,
    Thm2Report,
    annulus_ratio_exact,
    annulus_ratio_limit,
    coarea_check_radial,
    coarea_slice_shrink_check,
    lemma3_factor,
    lemma3_ratio_check,
    measured_distance_infimum,
    thm2_check,
)
from oscholder.measure.sampling import VolumeEstimate, mc_volume, sample_in_set

__all__ = [
    "CoareaReport",
    "Lemma3Report",
    "Thm2Report",
    "VolumeEstimate",
    "annulus_ratio_exact",
    "annulus_ratio_limit",
    "coarea_check_radial",
    "coarea_slice_shrink_check",
    "lemma3_factor",
    "lemma3_ratio_check",
    "measured_distance_infimum",
    "mc_volume",
    "sample_in_set",
    "thm2_check",
]
