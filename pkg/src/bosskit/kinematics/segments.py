"""Scaled-segment skeleton model: per-segment scale/rotation/translation."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import torch

from ..errors import NonPositiveScaleError
from ..mesh import Mesh
from .skinning import _as_t, validate_row_stochastic
from .tree import KinematicTree, forward_kinematics


@dataclass
class ScaledSegmentModel:
    """Simplistic deformable skeleton: one scale/pose/translation per segment.

    The template must carry per-vertex segment labels; ``blend_weights``
    are one-hot per segment except for composite segments, where the
    weight is split evenly between parent and child joints. Free-floating
    segments (sternum-like) are flagged so registration can let them
    translate without penalty escalation.
    """

    template: Mesh
    tree: KinematicTree
    blend_weights: np.ndarray
    scales: np.ndarray | None = None  # (K, 3)
    poses: np.ndarray | None = None  # (K, 3)
    translations: np.ndarray | None = None  # (K, 3)
    free_segments: tuple[int, ...] = ()
    landmark_joints: dict[str, int] = field(default_factory=dict)
    segment_names: dict[int, str] = field(default_factory=dict)
    name: str = ""

    def __post_init__(self):
        if self.template.segment_labels is None:
            raise ValueError("scaled-segment template needs per-vertex segment labels")
        k = self.tree.n_joints
        n = self.template.n_vertices
        self.blend_weights = np.asarray(self.blend_weights, dtype=np.float64).reshape(n, k)
        validate_row_stochastic(self.blend_weights, "blend_weights")
        self.scales = np.ones((k, 3)) if self.scales is None else np.asarray(self.scales, dtype=np.float64).reshape(k, 3)
        self.poses = np.zeros((k, 3)) if self.poses is None else np.asarray(self.poses, dtype=np.float64).reshape(k, 3)
        self.translations = (
            np.zeros((k, 3)) if self.translations is None else np.asarray(self.translations, dtype=np.float64).reshape(k, 3)
        )
        if (self.scales <= 0).any():
            raise NonPositiveScaleError("segment scales must be strictly positive")

    @property
    def n_joints(self) -> int:
        return self.tree.n_joints


def scaled_rest_joints(tree: KinematicTree, scales) -> torch.Tensor:
    """Rest joints after scaling each kinematic offset by the parent's scale."""
    scales = _as_t(scales).reshape(-1, 3)
    rest = _as_t(tree.rest_joints)
    out: list[torch.Tensor] = []
    for k in range(tree.n_joints):
        p = int(tree.parents[k])
        if p < 0:
            out.append(rest[k])
        else:
            out.append(out[p] + scales[p] * (rest[k] - rest[p]))
    return torch.stack(out)


def pose_scaled_segment_vertices(
    model: ScaledSegmentModel,
    scales=None,
    poses=None,
    translations=None,
) -> torch.Tensor:
    """Differentiable posing of the scaled-segment template.

    Per joint k a vertex maps to G_k (s_k * (v - t_k)) + q_k + tb_k: scaling
    about the segment's own rest joint, forward kinematics over the scaled
    joint chain, then the segment's free translation; blend weights mix
    composite segments.
    """
    scales = _as_t(model.scales if scales is None else scales).reshape(-1, 3)
    poses = _as_t(model.poses if poses is None else poses).reshape(-1, 3)
    translations = _as_t(model.translations if translations is None else translations).reshape(-1, 3)
    if torch.any(scales <= 0):
        raise NonPositiveScaleError("segment scales must be strictly positive")

    tree = model.tree
    rest = _as_t(tree.rest_joints)
    t_scaled = scaled_rest_joints(tree, scales)
    G, q = forward_kinematics(tree, poses, rest_joints=t_scaled)

    v = _as_t(model.template.vertices)
    local = scales[None, :, :] * (v[:, None, :] - rest[None, :, :])  # (N, K, 3)
    posed = torch.einsum("kij,nkj->nki", G, local) + (q + translations)[None, :, :]
    w = _as_t(model.blend_weights)
    return torch.einsum("nk,nki->ni", w, posed)


def pose_scaled_segment_model(model: ScaledSegmentModel, scales=None, poses=None, translations=None) -> Mesh:
    verts = pose_scaled_segment_vertices(model, scales, poses, translations)
    return model.template.with_vertices(verts.detach().numpy())


def scaled_segment_joints(model: ScaledSegmentModel, scales=None, poses=None, translations=None) -> torch.Tensor:
    """Posed joint locations including the per-segment free translations."""
    scales = _as_t(model.scales if scales is None else scales).reshape(-1, 3)
    poses = _as_t(model.poses if poses is None else poses).reshape(-1, 3)
    translations = _as_t(model.translations if translations is None else translations).reshape(-1, 3)
    t_scaled = scaled_rest_joints(model.tree, scales)
    _, q = forward_kinematics(model.tree, poses, rest_joints=t_scaled)
    return q + translations
