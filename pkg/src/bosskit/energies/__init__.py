"""Differentiable energy terms, priors and the staged minimizer."""

from .correspondence import (
    GATE_ANGLE,
    GATE_DISTANCE,
    GATE_OK,
    CorrespondenceSet,
    build_correspondences,
    correspondences_from_points,
    correspondences_to_target,
)
from .gmm import PosePriorGMM, e_pose_prior_gmm, train_pose_prior
from .minimize import (
    DEFAULT_F_TOL,
    DEFAULT_G_TOL,
    DEFAULT_MAX_ITER,
    MinimizeResult,
    Stage,
    VariableBlock,
    minimize,
)
from .robust import RobustLossConfig, geman_mcclure
from .terms import (
    PenetrationSet,
    SurfaceJointMapping,
    build_penetration_set,
    check_closed_for_weight,
    corr_residual_energy,
    e_data,
    e_edge_direction,
    e_height,
    e_landmark,
    e_orthogonal,
    e_parent_difference,
    e_penetration,
    e_shape_prior,
    e_skin_vicinity_landmarks,
    e_smooth,
    e_supine_pose,
    e_symmetry,
    e_translation_prior,
    e_vertex_l2,
    e_weight,
    project_rotations,
    volume_liters,
)
from .weights import EnergyWeights

__all__ = [
    "CorrespondenceSet",
    "DEFAULT_F_TOL",
    "DEFAULT_G_TOL",
    "DEFAULT_MAX_ITER",
    "EnergyWeights",
    "GATE_ANGLE",
    "GATE_DISTANCE",
    "GATE_OK",
    "MinimizeResult",
    "PenetrationSet",
    "PosePriorGMM",
    "RobustLossConfig",
    "Stage",
    "SurfaceJointMapping",
    "VariableBlock",
    "build_correspondences",
    "build_penetration_set",
    "check_closed_for_weight",
    "corr_residual_energy",
    "correspondences_from_points",
    "correspondences_to_target",
    "e_data",
    "e_edge_direction",
    "e_height",
    "e_landmark",
    "e_orthogonal",
    "e_parent_difference",
    "e_penetration",
    "e_pose_prior_gmm",
    "e_shape_prior",
    "e_skin_vicinity_landmarks",
    "e_smooth",
    "e_supine_pose",
    "e_symmetry",
    "e_translation_prior",
    "e_vertex_l2",
    "e_weight",
    "geman_mcclure",
    "minimize",
    "project_rotations",
    "train_pose_prior",
    "volume_liters",
]
