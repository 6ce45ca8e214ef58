"""Articulated model kernel: rotations, kinematic trees, skinning, regressors."""

from .archive import load_model_archive, save_model_archive
from .regressors import (
    fit_joint_regressor,
    fit_surface_joint_mapping,
    init_bone_joint_regressor,
)
from .rotations import axis_angle_to_matrix, axis_angle_to_matrix_np, canonicalize_axis_angle
from .segments import (
    ScaledSegmentModel,
    pose_scaled_segment_model,
    pose_scaled_segment_vertices,
    scaled_rest_joints,
    scaled_segment_joints,
)
from .skinning import (
    SkinnedModel,
    linear_blend_skin,
    model_joints,
    morph,
    morph_vertices,
    pose_feature,
    regress_joints,
    shaped_vertices,
)
from .tree import KinematicTree, Pose, fk_numpy, forward_kinematics

__all__ = [
    "KinematicTree",
    "Pose",
    "ScaledSegmentModel",
    "SkinnedModel",
    "axis_angle_to_matrix",
    "axis_angle_to_matrix_np",
    "canonicalize_axis_angle",
    "fit_joint_regressor",
    "fit_surface_joint_mapping",
    "fk_numpy",
    "forward_kinematics",
    "init_bone_joint_regressor",
    "linear_blend_skin",
    "load_model_archive",
    "model_joints",
    "morph",
    "morph_vertices",
    "pose_feature",
    "pose_scaled_segment_model",
    "pose_scaled_segment_vertices",
    "regress_joints",
    "save_model_archive",
    "scaled_rest_joints",
    "scaled_segment_joints",
    "shaped_vertices",
]
