"""Gated closest-point correspondences for ICP-style data terms.

Correspondence sets are frozen snapshots: each entry ties a linear
combination of live source vertices (a vertex itself, or barycentric
coordinates on a source face) to a fixed target point, with a 0/1 gate
weight. Energies stay differentiable in the source vertices while the
matching itself is refreshed by the outer registration loop.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..mesh import Mesh, SurfaceIndex, compute_vertex_normals

GATE_OK = 0
GATE_DISTANCE = 1
GATE_ANGLE = 2


@dataclass
class CorrespondenceSet:
    """Frozen matches: sum(coeffs * V[indices]) should meet target_points."""

    indices: np.ndarray  # (S, 3) int64 into the live vertex array
    coeffs: np.ndarray  # (S, 3) float64 combination weights
    target_points: np.ndarray  # (S, 3)
    weights: np.ndarray  # (S,) 0/1 gate
    gate_reasons: np.ndarray  # (S,) GATE_* codes
    direction: str = "model_to_scan"

    def __post_init__(self):
        self.indices = np.asarray(self.indices, dtype=np.int64).reshape(-1, 3)
        self.coeffs = np.asarray(self.coeffs, dtype=np.float64).reshape(-1, 3)
        self.target_points = np.asarray(self.target_points, dtype=np.float64).reshape(-1, 3)
        self.weights = np.asarray(self.weights, dtype=np.float64).reshape(-1)
        self.gate_reasons = np.asarray(self.gate_reasons, dtype=np.uint8).reshape(-1)

    @property
    def n_active(self) -> int:
        return int(self.weights.sum())


def _gate(dist, cos_angle, max_dist, min_cos):
    reasons = np.full(len(dist), GATE_OK, dtype=np.uint8)
    reasons[dist > max_dist] = GATE_DISTANCE
    ok_dist = reasons == GATE_OK
    bad_angle = ok_dist & (cos_angle < min_cos)
    reasons[bad_angle] = GATE_ANGLE
    return (reasons == GATE_OK).astype(np.float64), reasons


def correspondences_to_target(
    source_positions: np.ndarray,
    source_normals: np.ndarray,
    target_index: SurfaceIndex,
    max_angle_deg: float = 30.0,
    max_dist_mm: float = 30.0,
    source_ids: np.ndarray | None = None,
) -> CorrespondenceSet:
    """Each selected source vertex matched to its closest target surface point.

    The angle gate compares the source vertex normal against the matched
    target face normal; the source side stays differentiable.
    """
    pos = np.asarray(source_positions, dtype=np.float64)
    if source_ids is None:
        source_ids = np.arange(len(pos))
    source_ids = np.asarray(source_ids, dtype=np.int64)
    closest, faces, dist = target_index.nearest(pos[source_ids])
    cos = np.einsum(
        "ij,ij->i", np.asarray(source_normals)[source_ids], target_index.face_normals[faces]
    )
    weights, reasons = _gate(dist, cos, max_dist_mm, np.cos(np.deg2rad(max_angle_deg)))
    idx = np.stack([source_ids] * 3, axis=1)
    coeffs = np.zeros((len(source_ids), 3))
    coeffs[:, 0] = 1.0
    return CorrespondenceSet(idx, coeffs, closest, weights, reasons, "model_to_scan")


def correspondences_from_points(
    points: np.ndarray,
    point_normals: np.ndarray,
    source_vertices: np.ndarray,
    source_faces: np.ndarray,
    max_angle_deg: float = 30.0,
    max_dist_mm: float = 30.0,
    face_mask: np.ndarray | None = None,
) -> CorrespondenceSet:
    """Fixed scan points matched to closest points on the live source surface.

    The matched surface point is stored as barycentric coordinates of the
    source face so the energy differentiates through the source vertices.
    ``face_mask`` restricts matching to a face subset (observed sections).
    """
    verts = np.asarray(source_vertices, dtype=np.float64)
    faces = np.asarray(source_faces, dtype=np.int64)
    if face_mask is not None:
        faces_used = faces[np.asarray(face_mask, dtype=bool)]
    else:
        faces_used = faces
    surf = SurfaceIndex(Mesh(verts, faces_used))
    closest, fids, dist = surf.nearest(points)
    bary = surf.barycentric(fids, closest)
    cos = np.einsum("ij,ij->i", np.asarray(point_normals), surf.face_normals[fids])
    weights, reasons = _gate(dist, cos, max_dist_mm, np.cos(np.deg2rad(max_angle_deg)))
    return CorrespondenceSet(
        faces_used[fids], bary, np.asarray(points, dtype=np.float64), weights, reasons,
        "scan_to_model",
    )


def build_correspondences(
    source: Mesh,
    target: Mesh,
    max_angle_deg: float = 30.0,
    max_dist_mm: float = 30.0,
) -> tuple[CorrespondenceSet, CorrespondenceSet]:
    """Both correspondence directions between two static meshes.

    Returns (source vertices -> target surface, target vertices -> source
    surface); for live registration use the lower-level builders with the
    current deformed vertex array.
    """
    fwd = correspondences_to_target(
        source.vertices,
        compute_vertex_normals(source),
        SurfaceIndex(target),
        max_angle_deg,
        max_dist_mm,
    )
    rev = correspondences_from_points(
        target.vertices,
        compute_vertex_normals(target),
        source.vertices,
        source.faces,
        max_angle_deg,
        max_dist_mm,
    )
    return fwd, rev
