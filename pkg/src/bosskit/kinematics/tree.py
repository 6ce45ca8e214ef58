"""Kinematic trees, poses, and forward kinematics."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import torch

from .rotations import axis_angle_to_matrix, canonicalize_axis_angle


@dataclass
class KinematicTree:
    """Joint hierarchy with rest joint locations.

    Joints must be topologically ordered: parents[k] < k, root has -1.
    ``section_of_vertex`` optionally maps model vertices to body sections
    for missing-data gating.
    """

    parents: np.ndarray  # (K,) int64
    rest_joints: np.ndarray  # (K, 3)
    names: tuple[str, ...] = ()
    section_of_vertex: np.ndarray | None = None

    def __post_init__(self):
        self.parents = np.asarray(self.parents, dtype=np.int64).reshape(-1)
        self.rest_joints = np.asarray(self.rest_joints, dtype=np.float64).reshape(-1, 3)
        if len(self.parents) != len(self.rest_joints):
            raise ValueError("parents and rest_joints length mismatch")
        roots = np.nonzero(self.parents < 0)[0]
        if len(roots) != 1 or roots[0] != 0:
            raise ValueError("tree needs exactly one root at index 0")
        if (self.parents[1:] >= np.arange(1, len(self.parents))).any():
            raise ValueError("joints must be topologically ordered (parents[k] < k)")
        if not np.isfinite(self.rest_joints).all():
            raise ValueError("rest joints must be finite")
        if not self.names:
            self.names = tuple(f"joint_{k}" for k in range(len(self.parents)))
        self.names = tuple(self.names)

    @property
    def n_joints(self) -> int:
        return len(self.parents)

    def index_of(self, name: str) -> int:
        return self.names.index(name)

    def children_of(self, k: int) -> list[int]:
        return [int(c) for c in np.nonzero(self.parents == k)[0]]


@dataclass
class Pose:
    """Axis-angle joint rotations (radians) plus a global translation (mm)."""

    theta: np.ndarray  # (K, 3)
    trans: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=np.float64).reshape(-1, 3)
        self.trans = np.asarray(self.trans, dtype=np.float64).reshape(3)

    @classmethod
    def identity(cls, n_joints: int) -> "Pose":
        return cls(np.zeros((n_joints, 3)))

    def canonicalized(self) -> "Pose":
        return Pose(canonicalize_axis_angle(self.theta), self.trans.copy())


def forward_kinematics(
    tree: KinematicTree,
    theta,
    trans=None,
    rest_joints=None,
) -> tuple[torch.Tensor, torch.Tensor]:
    """Per-joint global rotations G_k and posed joint locations q_k.

    Composition follows the model convention G_k = R_k G_p(k) with the
    recursion q_k = G_k (t_k - t_p(k)) + q_p(k); the root joint lands at
    t_root + trans. ``rest_joints`` overrides the tree's rest joints (used
    when joints are regressed from a morphed template). Differentiable in
    theta, trans and rest_joints.
    """
    theta = torch.as_tensor(theta, dtype=torch.float64).reshape(-1, 3)
    if theta.shape[0] != tree.n_joints:
        raise ValueError(f"pose has {theta.shape[0]} joints, tree has {tree.n_joints}")
    if trans is None:
        trans = torch.zeros(3, dtype=torch.float64)
    trans = torch.as_tensor(trans, dtype=torch.float64).reshape(3)
    if rest_joints is None:
        rest_joints = torch.as_tensor(tree.rest_joints)
    rest_joints = torch.as_tensor(rest_joints, dtype=torch.float64).reshape(-1, 3)

    R = axis_angle_to_matrix(theta)
    G: list[torch.Tensor] = []
    q: list[torch.Tensor] = []
    for k in range(tree.n_joints):
        p = int(tree.parents[k])
        if p < 0:
            G.append(R[k])
            q.append(rest_joints[k] + trans)
        else:
            Gk = R[k] @ G[p]
            G.append(Gk)
            q.append(Gk @ (rest_joints[k] - rest_joints[p]) + q[p])
    return torch.stack(G), torch.stack(q)


def fk_numpy(tree: KinematicTree, pose: Pose) -> tuple[np.ndarray, np.ndarray]:
    G, q = forward_kinematics(tree, pose.theta, pose.trans)
    return G.numpy(), q.numpy()
