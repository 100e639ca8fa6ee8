"""
Módulo seminorm: barridos de integrales de oscilación, estimador de la
seminorma de Hölder generalizada y verificaciones de la cadena de prueba.
"""

from oscholder.seminorm.checks import (
    DensityReport,
    Thm1Report,
    continuity_modulus_check,
    default_intervals,
    lemma_constant,
    open_closed_agreement,
    pushforward_density_check,
    sandwich_check,
    theorem_rhs,
    thm1_check,
    trivial_branch_check,
)
from oscholder.seminorm.sweep import (
    SweepGrid,
    SweepRecord,
    SweepReport,
    gen_holder_seminorm,
    osc_integral_sweep,
    save_sweep_csv,
)

__all__ = [
    "DensityReport",
    "SweepGrid",
    "SweepRecord",
    "SweepReport",
    "Thm1Report",
    "continuity_modulus_check",
    "default_intervals",
    "gen_holder_seminorm",
    "lemma_constant",
    "open_closed_agreement",
    "osc_integral_sweep",
    "pushforward_density_check",
    "sandwich_check",
    "save_sweep_csv",
    "theorem_rhs",
    "thm1_check",
    "trivial_branch_check",
]
