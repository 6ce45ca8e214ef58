"""Differentiable energy terms for registration, unposing and evaluation.

Every term is a pure torch expression of its live inputs (vertices, pose
or shape parameters) given frozen auxiliary data (correspondences,
penetration sets, edge lists), so gradients match central finite
differences by construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch

from ..errors import OpenMeshError, UntrainedMappingError
from ..mesh import Mesh, SurfaceIndex, is_closed, point_in_mesh, winding_numbers
from .correspondence import CorrespondenceSet
from .robust import RobustLossConfig, geman_mcclure

_EPS = 1e-12


def _as_t(x) -> torch.Tensor:
    return torch.as_tensor(x, dtype=torch.float64)


def _smooth_abs(x: torch.Tensor) -> torch.Tensor:
    # |x| with a 1e-6-scale rounding at zero; keeps line searches finite
    return torch.sqrt(x * x + _EPS)


def corr_residual_energy(vertices, corr: CorrespondenceSet, robust: RobustLossConfig) -> torch.Tensor:
    """Sum of gated robust squared point distances for one correspondence set."""
    v = _as_t(vertices)
    if len(corr.indices) == 0:
        return v.sum() * 0.0
    pts = (torch.as_tensor(corr.coeffs)[:, :, None] * v[torch.as_tensor(corr.indices)]).sum(dim=1)
    d2 = ((pts - torch.as_tensor(corr.target_points)) ** 2).sum(dim=1)
    return (torch.as_tensor(corr.weights) * geman_mcclure(d2, robust.sigma_mm)).sum()


def e_data(
    vertices,
    corr_forward: CorrespondenceSet | list[CorrespondenceSet],
    corr_reverse: CorrespondenceSet | list[CorrespondenceSet],
    robust: RobustLossConfig,
    lam_forward: float = 1.0,
    lam_reverse: float = 1.0,
) -> torch.Tensor:
    """Bidirectional gated robust data term over frozen correspondences."""
    fwd = corr_forward if isinstance(corr_forward, list) else [corr_forward]
    rev = corr_reverse if isinstance(corr_reverse, list) else [corr_reverse]
    total = _as_t(vertices).sum() * 0.0
    for c in fwd:
        total = total + lam_forward * corr_residual_energy(vertices, c, robust)
    for c in rev:
        total = total + lam_reverse * corr_residual_energy(vertices, c, robust)
    return total


def e_landmark(model_points, scan_points) -> torch.Tensor:
    """L1 landmark misalignment, summed over shared landmark names.

    Callers pair the points by name beforehand; absent landmarks simply do
    not appear, which is how missing sections are detected.
    """
    mp = _as_t(model_points).reshape(-1, 3)
    sp = _as_t(scan_points).reshape(-1, 3)
    if mp.shape != sp.shape:
        raise ValueError("landmark sets must be paired by name before scoring")
    if mp.numel() == 0:
        return torch.zeros((), dtype=torch.float64)
    return _smooth_abs(mp - sp).sum()


def e_shape_prior(beta) -> torch.Tensor:
    """L2 magnitude of the shape coefficients (pull toward the mean shape)."""
    b = _as_t(beta).reshape(-1)
    return torch.sqrt((b * b).sum() + _EPS)


def e_translation_prior(translations) -> torch.Tensor:
    """Sum of per-segment translation magnitudes."""
    t = _as_t(translations).reshape(-1, 3)
    return torch.sqrt((t * t).sum(dim=1) + _EPS).sum()


def e_parent_difference(values, parents, joint_ids=None) -> torch.Tensor:
    """Sum of ||x_j - x_parent(j)|| over selected non-root joints.

    Serves both the vertebral pose prior and the scale-toward-parent prior
    of the segment model.
    """
    x = _as_t(values).reshape(-1, 3)
    parents = np.asarray(parents)
    if joint_ids is None:
        joint_ids = np.nonzero(parents >= 0)[0]
    ids = np.asarray([j for j in joint_ids if parents[j] >= 0], dtype=np.int64)
    if len(ids) == 0:
        return torch.zeros((), dtype=torch.float64)
    diff = x[torch.as_tensor(ids)] - x[torch.as_tensor(parents[ids])]
    return torch.sqrt((diff * diff).sum(dim=1) + _EPS).sum()


def e_supine_pose(theta, joint_ids, stiffness: float = 10.0, axis: int = 0,
                  sign: float = 1.0) -> torch.Tensor:
    """One-sided exponential penalty on forward flexion of torso joints.

    Penalizes only positive (off-table) flexion along the sagittal plane:
    sum(exp(k * max(0, flexion)) - 1).
    """
    t = _as_t(theta).reshape(-1, 3)
    ids = torch.as_tensor(np.asarray(joint_ids, dtype=np.int64))
    flex = sign * t[ids, axis]
    return torch.expm1(stiffness * torch.clamp(flex, min=0.0)).sum()


def volume_liters(vertices, faces) -> torch.Tensor:
    """Signed divergence-theorem volume in liters (differentiable)."""
    v = _as_t(vertices)
    f = torch.as_tensor(np.asarray(faces, dtype=np.int64))
    v0, v1, v2 = v[f[:, 0]], v[f[:, 1]], v[f[:, 2]]
    return torch.einsum("ij,ij->i", v0, torch.cross(v1, v2, dim=1)).sum() / 6.0 / 1.0e6


def e_weight(rest_vertices, faces, measured_kg: float, _closed_checked: bool = True) -> torch.Tensor:
    """Squared error between volume-predicted and measured body weight.

    Weight is predicted from the rest-pose volume V (liters) through
    (V + 4.937) / 1.015.
    """
    vol = torch.abs(volume_liters(rest_vertices, faces))
    predicted = (vol + 4.937) / 1.015
    return (predicted - measured_kg) ** 2


def check_closed_for_weight(mesh: Mesh):
    if not is_closed(mesh):
        raise OpenMeshError("weight prior needs a closed rest-pose surface")


def e_height(rest_vertices, measured_mm: float, up_axis: int = 2) -> torch.Tensor:
    """Squared error between the vertical extent and the measured height."""
    v = _as_t(rest_vertices)
    extent = v[:, up_axis].max() - v[:, up_axis].min()
    return (extent - measured_mm) ** 2


def e_smooth(field, vertices, edges, edge_weights) -> torch.Tensor:
    """Disagreement of neighboring affine actions, edge-weighted.

    Both endpoint transforms act on the edge midpoint in homogeneous form;
    equal transforms give exactly zero.
    """
    a = _as_t(field).reshape(-1, 3, 4)
    v = _as_t(vertices)
    e = torch.as_tensor(np.asarray(edges, dtype=np.int64)).reshape(-1, 2)
    w = _as_t(edge_weights).reshape(-1)
    if e.numel() == 0:
        return a.sum() * 0.0
    mid = 0.5 * (v[e[:, 0]] + v[e[:, 1]])
    da = a[e[:, 0]] - a[e[:, 1]]  # (E, 3, 4)
    diff = torch.einsum("eij,ej->ei", da[:, :, :3], mid) + da[:, :, 3]
    return (w * (diff * diff).sum(dim=1)).sum()


def project_rotations(linear: torch.Tensor) -> torch.Tensor:
    """Closest rotations to a batch of 3x3 matrices (SVD, det-corrected)."""
    u, _, vt = torch.linalg.svd(linear)
    det = torch.linalg.det(u @ vt)
    fix = torch.ones_like(linear[:, :, 0])
    fix[:, 2] = det
    return (u * fix[:, None, :]) @ vt


def e_orthogonal(field) -> torch.Tensor:
    """Frobenius distance of each linear part to its rotation projection.

    The projection is detached: the residual A - R(A) is normal to SO(3)
    at R(A), so the detached gradient equals the true derivative while
    avoiding unstable SVD backprop near repeated singular values.
    """
    a = _as_t(field).reshape(-1, 3, 4)[:, :, :3]
    with torch.no_grad():
        r = project_rotations(a.detach())
    return ((a - r) ** 2).sum()


@dataclass
class PenetrationSet:
    """Frozen inside-vertex snapshot: vertex ids and nearest boundary points."""

    vertex_ids: np.ndarray  # (P,)
    boundary_points: np.ndarray  # (P, 3)

    def __post_init__(self):
        self.vertex_ids = np.asarray(self.vertex_ids, dtype=np.int64).reshape(-1)
        self.boundary_points = np.asarray(self.boundary_points, dtype=np.float64).reshape(-1, 3)


def build_penetration_set(points: np.ndarray, regions: list[Mesh]) -> PenetrationSet:
    """Vertices currently inside any forbidden region, with boundary targets."""
    points = np.asarray(points, dtype=np.float64)
    ids: list[np.ndarray] = []
    targets: list[np.ndarray] = []
    for region in regions:
        if not is_closed(region):
            raise OpenMeshError(f"forbidden region '{region.name}' must be closed")
        inside = winding_numbers(points, region) > 0.5
        if inside.any():
            idx = np.nonzero(inside)[0]
            closest, _, _ = SurfaceIndex(region).nearest(points[idx])
            ids.append(idx)
            targets.append(closest)
    if not ids:
        return PenetrationSet(np.zeros(0, np.int64), np.zeros((0, 3)))
    return PenetrationSet(np.concatenate(ids), np.vstack(targets))


def e_penetration(vertices, pset: PenetrationSet) -> torch.Tensor:
    """Squared distance to the nearest boundary for trapped vertices."""
    v = _as_t(vertices)
    if len(pset.vertex_ids) == 0:
        return v.sum() * 0.0
    diff = v[torch.as_tensor(pset.vertex_ids)] - torch.as_tensor(pset.boundary_points)
    return (diff * diff).sum()


@dataclass
class SurfaceJointMapping:
    """Learned row-stochastic map from registered surface vertices to joints."""

    matrix: np.ndarray  # (J, N_surface)
    joint_ids: np.ndarray  # (J,) joints predicted, in skeleton joint indexing

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=np.float64)
        self.joint_ids = np.asarray(self.joint_ids, dtype=np.int64).reshape(-1)

    def predict(self, surface_vertices: np.ndarray) -> np.ndarray:
        return self.matrix @ np.asarray(surface_vertices, dtype=np.float64)


def e_skin_vicinity_landmarks(
    surface_vertices: np.ndarray,
    mapping: SurfaceJointMapping | None,
    skeleton_joints,
) -> torch.Tensor:
    """Squared distance between surface-mapped joints and skeleton joints.

    The surface side is a fixed registration; the skeleton joints are the
    live, differentiable quantity.
    """
    if mapping is None:
        raise UntrainedMappingError("surface-to-joint mapping has not been trained")
    predicted = torch.as_tensor(mapping.predict(surface_vertices))
    joints = _as_t(skeleton_joints).reshape(-1, 3)
    diff = joints[torch.as_tensor(mapping.joint_ids)] - predicted
    return (diff * diff).sum()


def e_vertex_l2(vertices, targets, mask=None) -> torch.Tensor:
    """Plain squared vertex-to-vertex distance, optionally masked."""
    v = _as_t(vertices)
    t = _as_t(targets)
    d2 = ((v - t) ** 2).sum(dim=1)
    if mask is not None:
        d2 = d2 * torch.as_tensor(np.asarray(mask, dtype=np.float64))
    return d2.sum()


def e_edge_direction(vertices, template_vertices, edges) -> torch.Tensor:
    """Squared mismatch of normalized edge directions against the template.

    Pins orientation during pose normalization: translations (and uniform
    scalings) of the template are free, rotations are not.
    """
    v = _as_t(vertices)
    t = _as_t(template_vertices)
    e = torch.as_tensor(np.asarray(edges, dtype=np.int64)).reshape(-1, 2)
    dv = v[e[:, 0]] - v[e[:, 1]]
    dt = t[e[:, 0]] - t[e[:, 1]]
    dv = dv / torch.sqrt((dv * dv).sum(dim=1, keepdim=True) + _EPS)
    dt = dt / torch.sqrt((dt * dt).sum(dim=1, keepdim=True) + _EPS)
    return ((dv - dt) ** 2).sum()


def e_symmetry(vertices, permutation, plane_point, plane_normal) -> torch.Tensor:
    """Squared residual between vertices and their mirrored counterparts."""
    v = _as_t(vertices)
    perm = torch.as_tensor(np.asarray(permutation, dtype=np.int64))
    point = _as_t(plane_point)
    normal = _as_t(plane_normal)
    d = (v - point) @ normal
    reflected = v - 2.0 * d[:, None] * normal[None, :]
    return ((v - reflected[perm]) ** 2).sum()
