"""Linear blend skinning and the morphable skinned model."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import torch

from ..errors import DimensionMismatchError
from ..mesh import Mesh
from .rotations import axis_angle_to_matrix
from .tree import KinematicTree, forward_kinematics

_ROW_SUM_TOL = 1e-8


def _as_t(x) -> torch.Tensor:
    return torch.as_tensor(x, dtype=torch.float64)


def linear_blend_skin(vertices, weights, G, q, rest_joints) -> torch.Tensor:
    """Pose vertices by blending per-joint rigid transforms.

    Each joint's transform maps x to G_k (x - t_k) + q_k; output vertex i is
    the blend-weighted sum over joints (homogeneous form).
    """
    vertices = _as_t(vertices)
    weights = _as_t(weights)
    G = _as_t(G)
    q = _as_t(q)
    rest_joints = _as_t(rest_joints)
    offset = q - torch.einsum("kij,kj->ki", G, rest_joints)  # per-joint translation
    blend_rot = torch.einsum("nk,kij->nij", weights, G)
    blend_off = weights @ offset
    return torch.einsum("nij,nj->ni", blend_rot, vertices) + blend_off


def pose_feature(theta) -> torch.Tensor:
    """Pose-dependent blend-shape drivers: flattened (R_k - I) for non-root joints.

    Vanishes at the rest pose so the morph reduces to the shaped template.
    """
    theta = _as_t(theta).reshape(-1, 3)
    R = axis_angle_to_matrix(theta[1:])
    eye = torch.eye(3, dtype=torch.float64)
    return (R - eye).reshape(-1)


def validate_row_stochastic(mat: np.ndarray, what: str):
    if (mat < -_ROW_SUM_TOL).any():
        raise ValueError(f"{what} has negative entries")
    rows = mat.sum(axis=1)
    if np.abs(rows - 1.0).max() > _ROW_SUM_TOL:
        raise ValueError(f"{what} rows must sum to 1 (max dev {np.abs(rows - 1).max():.2e})")


@dataclass
class SkinnedModel:
    """Morphable skinned surface model.

    template holds the rest-pose mesh; shape_basis (3N x B) and
    pose_basis (3N x P) are vertex-offset bases; blend_weights (N x K) and
    joint_regressor (K x N) are row-stochastic.
    """

    template: Mesh
    tree: KinematicTree
    blend_weights: np.ndarray
    joint_regressor: np.ndarray
    shape_basis: np.ndarray
    pose_basis: np.ndarray
    landmark_joints: dict[str, int] = field(default_factory=dict)
    section_joints: dict[int, tuple[int, ...]] = field(default_factory=dict)
    section_of_landmark: dict[str, int] = field(default_factory=dict)
    name: str = ""

    def __post_init__(self):
        n = self.template.n_vertices
        k = self.tree.n_joints
        self.blend_weights = np.asarray(self.blend_weights, dtype=np.float64).reshape(n, k)
        self.joint_regressor = np.asarray(self.joint_regressor, dtype=np.float64).reshape(k, n)
        validate_row_stochastic(self.blend_weights, "blend_weights")
        validate_row_stochastic(self.joint_regressor, "joint_regressor")
        self.shape_basis = np.asarray(self.shape_basis, dtype=np.float64).reshape(3 * n, -1)
        self.pose_basis = np.asarray(self.pose_basis, dtype=np.float64).reshape(3 * n, -1)
        expected_p = 9 * (k - 1)
        if self.pose_basis.shape[1] not in (0, expected_p):
            raise DimensionMismatchError(
                f"pose basis has {self.pose_basis.shape[1]} columns, expected 0 or {expected_p}"
            )

    @property
    def n_vertices(self) -> int:
        return self.template.n_vertices

    @property
    def n_shape_coeffs(self) -> int:
        return self.shape_basis.shape[1]

    def zero_shape(self) -> np.ndarray:
        return np.zeros(self.n_shape_coeffs)


def shaped_vertices(model: SkinnedModel, beta) -> torch.Tensor:
    """Rest-pose vertices for shape coefficients (no pose correctives)."""
    beta = _as_t(beta).reshape(-1)
    if beta.shape[0] != model.n_shape_coeffs:
        raise DimensionMismatchError(
            f"beta has {beta.shape[0]} coefficients, model expects {model.n_shape_coeffs}"
        )
    base = _as_t(model.template.vertices).reshape(-1)
    return (base + _as_t(model.shape_basis) @ beta).reshape(-1, 3)


def regress_joints(joint_regressor, vertices) -> torch.Tensor:
    """Joint locations as the row-stochastic regression of mesh vertices."""
    return _as_t(joint_regressor) @ _as_t(vertices)


def morph_vertices(model: SkinnedModel, beta, theta, trans=None) -> torch.Tensor:
    """Differentiable morph: shape offsets, pose correctives, regressed joints, LBS."""
    theta = _as_t(theta).reshape(-1, 3)
    if theta.shape[0] != model.tree.n_joints:
        raise DimensionMismatchError(
            f"theta has {theta.shape[0]} joints, model expects {model.tree.n_joints}"
        )
    rest = shaped_vertices(model, beta)
    joints = regress_joints(model.joint_regressor, rest)
    posed_rest = rest
    if model.pose_basis.shape[1]:
        posed_rest = rest + (_as_t(model.pose_basis) @ pose_feature(theta)).reshape(-1, 3)
    G, q = forward_kinematics(model.tree, theta, trans, rest_joints=joints)
    return linear_blend_skin(posed_rest, model.blend_weights, G, q, joints)


def morph(model: SkinnedModel, beta, theta, trans=None) -> Mesh:
    """Morphed mesh for the given shape, pose and translation."""
    verts = morph_vertices(model, beta, theta, trans)
    return model.template.with_vertices(verts.detach().numpy())


def model_joints(model: SkinnedModel, beta, theta, trans=None) -> torch.Tensor:
    """Posed joint locations for the given parameters."""
    rest = shaped_vertices(model, beta)
    joints = regress_joints(model.joint_regressor, rest)
    _, q = forward_kinematics(model.tree, theta, trans, rest_joints=joints)
    return q
