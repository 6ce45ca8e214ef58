"""Geometry kernel: mesh representation, I/O and spatial queries."""

from .core import (
    COT_WEIGHT_MAX,
    EdgeWeights,
    Mesh,
    boundary_edge_count,
    compute_vertex_normals,
    cotangent_weights,
    edge_face_incidence,
    face_normals_areas,
    is_closed,
    merge_meshes,
    mesh_volume,
    normalize_winding,
    vertex_components,
)
from .io import (
    LandmarkEntry,
    LandmarkSet,
    landmark_sidecar_path,
    load_landmarks,
    load_mesh,
    save_landmarks,
    save_mesh,
)
from .query import (
    MirrorMap,
    SurfaceIndex,
    closest_point_on_triangles,
    mirror_map,
    nearest_on_surface,
    point_in_mesh,
    winding_numbers,
)

__all__ = [
    "COT_WEIGHT_MAX",
    "EdgeWeights",
    "LandmarkEntry",
    "LandmarkSet",
    "Mesh",
    "MirrorMap",
    "SurfaceIndex",
    "boundary_edge_count",
    "closest_point_on_triangles",
    "compute_vertex_normals",
    "cotangent_weights",
    "edge_face_incidence",
    "face_normals_areas",
    "is_closed",
    "landmark_sidecar_path",
    "load_landmarks",
    "load_mesh",
    "merge_meshes",
    "mesh_volume",
    "mirror_map",
    "nearest_on_surface",
    "normalize_winding",
    "point_in_mesh",
    "save_landmarks",
    "save_mesh",
    "vertex_components",
    "winding_numbers",
]
