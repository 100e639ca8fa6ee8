"""
Módulo approach: proyección al conjunto objetivo, mapa de aproximación T_Δ,
oráculos de pertenencia a imágenes y descomposición por pasos 2δ.
"""

from oscholder.approach.contraction import (
    contraction_check,
    derivative_check,
    diameter_contraction_check,
)
from oscholder.approach.decomposition import (
    AkClass,
    ak_classify,
    ak_labels,
    curly_classify,
    curly_labels,
    k_max,
    tdelta_image_mask,
    tdelta_image_membership,
    tee_mask,
    tee_membership,
)
from oscholder.approach.sets import SetSpec
from oscholder.approach.target import (
    ProjectionResult,
    TargetSet,
    approach,
    approach_many,
    distance_to,
    project,
    project_many,
)

__all__ = [
    "AkClass",
    "ProjectionResult",
    "SetSpec",
    "TargetSet",
    "ak_classify",
    "ak_labels",
    "approach",
    "approach_many",
    "contraction_check",
    "curly_classify",
    "curly_labels",
    "derivative_check",
    "diameter_contraction_check",
    "distance_to",
    "k_max",
    "project",
    "project_many",
    "tdelta_image_mask",
    "tdelta_image_membership",
    "tee_mask",
    "tee_membership",
]
