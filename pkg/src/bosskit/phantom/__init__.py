"""Procedural ground-truth phantoms: articulated multi-layer test subjects."""

from .bones import (
    BONE_JOINTS,
    LIMB_SEGMENTS_BY_DROPOUT,
    N_BONE_SEGMENTS,
    ORGAN_NAMES,
    bone_lbs_twin,
    build_bone_organ_model,
)
from .config import DROPPABLE_SECTIONS, FACTOR_NAMES, PhantomFamilyConfig, PhantomSpec
from .generate import (
    PhantomFamily,
    PhantomTruth,
    bone_scales_for_shape,
    generate_cohort,
    generate_phantom,
    get_family,
    true_factor_directions,
)
from .skin import SECTIONS_BY_DROPOUT, SKIN_SECTIONS, build_skin_model

__all__ = [
    "BONE_JOINTS",
    "DROPPABLE_SECTIONS",
    "FACTOR_NAMES",
    "LIMB_SEGMENTS_BY_DROPOUT",
    "N_BONE_SEGMENTS",
    "ORGAN_NAMES",
    "PhantomFamily",
    "PhantomFamilyConfig",
    "PhantomSpec",
    "PhantomTruth",
    "SECTIONS_BY_DROPOUT",
    "SKIN_SECTIONS",
    "bone_lbs_twin",
    "bone_scales_for_shape",
    "build_bone_organ_model",
    "build_skin_model",
    "generate_cohort",
    "generate_phantom",
    "get_family",
    "true_factor_directions",
]
