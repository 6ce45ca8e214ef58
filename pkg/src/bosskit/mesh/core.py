"""Triangle-mesh kernel: representation, normals, edges, cotangent weights, volume.

All coordinates are millimeters; volumes are reported in liters.
Meshes are treated as immutable values after construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

from ..errors import DegenerateTriangleError, OpenMeshError

MM3_PER_LITER = 1.0e6

# Cotangent weights are clamped to [0, cot(1 deg)] to keep sliver triangles
# from blowing up the smoothness term.
COT_WEIGHT_MAX = 1.0 / np.tan(np.deg2rad(1.0))
DEGENERATE_AREA_MM2 = 1e-9


@dataclass
class Mesh:
    """Indexed triangle surface with optional per-vertex segment labels.

    Parameters
    ----------
    vertices : (N, 3) float array, millimeters
    faces : (M, 3) int array of vertex indices
    segment_labels : (N,) int array or None
        Per-vertex segment id (bones/organs); None for unlabeled meshes.
    name : str
    """

    vertices: np.ndarray
    faces: np.ndarray
    segment_labels: np.ndarray | None = None
    name: str = ""

    def __post_init__(self):
        v = np.ascontiguousarray(np.asarray(self.vertices, dtype=np.float64))
        f = np.ascontiguousarray(np.asarray(self.faces, dtype=np.int64))
        if v.ndim != 2 or v.shape[1] != 3:
            raise ValueError(f"vertices must be (N, 3), got {v.shape}")
        if f.size == 0:
            f = f.reshape(0, 3)
        if f.ndim != 2 or f.shape[1] != 3:
            raise ValueError(f"faces must be (M, 3), got {f.shape}")
        if f.size:
            if f.min() < 0 or f.max() >= len(v):
                raise ValueError("face index out of range")
            degen = (f[:, 0] == f[:, 1]) | (f[:, 1] == f[:, 2]) | (f[:, 0] == f[:, 2])
            if degen.any():
                raise ValueError(f"{int(degen.sum())} faces repeat a vertex index")
        self.vertices = v
        self.faces = f
        if self.segment_labels is not None:
            lab = np.ascontiguousarray(np.asarray(self.segment_labels, dtype=np.int64))
            if lab.shape != (len(v),):
                raise ValueError("segment_labels must be one id per vertex")
            self.segment_labels = lab

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    def with_vertices(self, vertices: np.ndarray) -> "Mesh":
        """Same topology and labels, new vertex positions."""
        return replace(self, vertices=np.asarray(vertices, dtype=np.float64))

    def transformed(self, rotation: np.ndarray | None = None, translation=(0.0, 0.0, 0.0)) -> "Mesh":
        v = self.vertices
        if rotation is not None:
            v = v @ np.asarray(rotation, dtype=np.float64).T
        return self.with_vertices(v + np.asarray(translation, dtype=np.float64))

    def submesh(self, vertex_mask: np.ndarray) -> tuple["Mesh", np.ndarray]:
        """Restrict to the masked vertices; keeps faces fully inside the mask.

        Returns the submesh and the original index of each kept vertex.
        """
        vertex_mask = np.asarray(vertex_mask, dtype=bool)
        keep = np.nonzero(vertex_mask)[0]
        remap = -np.ones(self.n_vertices, dtype=np.int64)
        remap[keep] = np.arange(len(keep))
        face_keep = vertex_mask[self.faces].all(axis=1)
        labels = None if self.segment_labels is None else self.segment_labels[keep]
        sub = Mesh(self.vertices[keep], remap[self.faces[face_keep]], labels, self.name)
        return sub, keep


@dataclass
class EdgeWeights:
    """Weighted undirected edge list; each edge appears once as (i, j), i < j."""

    edges: np.ndarray  # (E, 2) int64
    weights: np.ndarray  # (E,) float64
    kind: str = "uniform"  # cotangent | virtual_inter | virtual_intra | uniform

    def __post_init__(self):
        e = np.ascontiguousarray(np.asarray(self.edges, dtype=np.int64)).reshape(-1, 2)
        w = np.ascontiguousarray(np.asarray(self.weights, dtype=np.float64)).reshape(-1)
        if len(e) != len(w):
            raise ValueError("edges and weights length mismatch")
        if not np.isfinite(w).all():
            raise ValueError("edge weights must be finite")
        self.edges = e
        self.weights = w


def merge_meshes(parts: list[Mesh], name: str = "") -> Mesh:
    """Concatenate meshes into one, offsetting face indices.

    Segment labels are kept when every part carries them.
    """
    verts, faces, labels = [], [], []
    offset = 0
    with_labels = all(p.segment_labels is not None for p in parts)
    for p in parts:
        verts.append(p.vertices)
        faces.append(p.faces + offset)
        if with_labels:
            labels.append(p.segment_labels)
        offset += p.n_vertices
    return Mesh(
        np.vstack(verts),
        np.vstack(faces) if faces else np.zeros((0, 3), np.int64),
        np.concatenate(labels) if with_labels else None,
        name,
    )


def face_normals_areas(mesh: Mesh) -> tuple[np.ndarray, np.ndarray]:
    """Unit face normals and face areas; zero-area faces get a zero normal."""
    v = mesh.vertices
    f = mesh.faces
    cross = np.cross(v[f[:, 1]] - v[f[:, 0]], v[f[:, 2]] - v[f[:, 0]])
    norm2 = np.linalg.norm(cross, axis=1)
    areas = 0.5 * norm2
    normals = np.zeros_like(cross)
    ok = norm2 > 0
    normals[ok] = cross[ok] / norm2[ok, None]
    return normals, areas


def compute_vertex_normals(mesh: Mesh) -> np.ndarray:
    """Area-weighted average of incident face normals, normalized.

    Vertices whose incident triangles all have zero area keep a zero
    normal, flagging them for downstream gating.
    """
    normals, areas = face_normals_areas(mesh)
    acc = np.zeros((mesh.n_vertices, 3))
    weighted = normals * areas[:, None]
    for c in range(3):
        np.add.at(acc, mesh.faces[:, c], weighted)
    norms = np.linalg.norm(acc, axis=1)
    out = np.zeros_like(acc)
    ok = norms > 1e-300
    out[ok] = acc[ok] / norms[ok, None]
    return out


def edge_face_incidence(faces: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Unique undirected edges and the per-face-edge mapping.

    Returns (edges (E, 2) with i < j, edge_of (M, 3) giving the edge id of
    the face edge opposite each corner).
    """
    f = faces
    # edge opposite corner c connects the other two corners
    raw = np.stack(
        [f[:, [1, 2]], f[:, [2, 0]], f[:, [0, 1]]], axis=1
    ).reshape(-1, 2)
    raw = np.sort(raw, axis=1)
    edges, inverse = np.unique(raw, axis=0, return_inverse=True)
    return edges, inverse.reshape(len(f), 3)


def boundary_edge_count(mesh: Mesh) -> int:
    """Number of edges not shared by exactly two faces."""
    if mesh.n_faces == 0:
        return 0
    edges, edge_of = edge_face_incidence(mesh.faces)
    counts = np.bincount(edge_of.reshape(-1), minlength=len(edges))
    return int((counts != 2).sum())


def is_closed(mesh: Mesh) -> bool:
    return mesh.n_faces > 0 and boundary_edge_count(mesh) == 0


def mesh_volume(mesh: Mesh, signed: bool = False) -> float:
    """Divergence-theorem volume of a closed mesh, in liters.

    Returns the absolute volume by default; ``signed=True`` exposes the
    orientation (negative for inward-facing winding).
    """
    if not is_closed(mesh):
        raise OpenMeshError(f"mesh '{mesh.name}' has boundary edges; volume undefined")
    v = mesh.vertices
    f = mesh.faces
    vol_mm3 = np.einsum("ij,ij->i", v[f[:, 0]], np.cross(v[f[:, 1]], v[f[:, 2]])).sum() / 6.0
    vol = vol_mm3 / MM3_PER_LITER
    return float(vol if signed else abs(vol))


def vertex_components(mesh: Mesh) -> np.ndarray:
    """Connected-component id per vertex (isolated vertices get their own)."""
    n = mesh.n_vertices
    if mesh.n_faces == 0:
        return np.arange(n)
    e, _ = edge_face_incidence(mesh.faces)
    adj = sparse.coo_matrix(
        (np.ones(len(e)), (e[:, 0], e[:, 1])), shape=(n, n)
    )
    _, labels = csgraph.connected_components(adj, directed=False)
    return labels


def normalize_winding(mesh: Mesh) -> Mesh:
    """Flip face orientation per closed component so signed volume is positive."""
    if not is_closed(mesh):
        raise OpenMeshError("winding normalization needs a closed mesh")
    comp = vertex_components(mesh)
    v, f = mesh.vertices, mesh.faces.copy()
    face_comp = comp[f[:, 0]]
    signed = np.einsum("ij,ij->i", v[f[:, 0]], np.cross(v[f[:, 1]], v[f[:, 2]]))
    for c in np.unique(face_comp):
        sel = face_comp == c
        if signed[sel].sum() < 0:
            f[sel] = f[sel][:, [0, 2, 1]]
    return Mesh(v, f, mesh.segment_labels, mesh.name)


def cotangent_weights(mesh: Mesh) -> EdgeWeights:
    """Half-cotangent edge weights over the 1 or 2 incident triangles.

    c_ij = 1/2 * sum(cot(angle opposite edge ij)), clamped to
    [0, cot(1 deg)]. Raises on triangles below the degenerate-area floor.
    """
    v = mesh.vertices
    f = mesh.faces
    edges, edge_of = edge_face_incidence(f)
    p0, p1, p2 = v[f[:, 0]], v[f[:, 1]], v[f[:, 2]]
    cross = np.cross(p1 - p0, p2 - p0)
    area2 = np.linalg.norm(cross, axis=1)  # twice the area
    if (area2 < 2.0 * DEGENERATE_AREA_MM2).any():
        bad = int(np.argmin(area2))
        raise DegenerateTriangleError(
            f"face {bad} area {0.5 * area2[bad]:.3e} mm^2 below {DEGENERATE_AREA_MM2} mm^2"
        )
    # cot at corner c = dot(adjacent edges) / (2 * area)
    cots = np.empty_like(area2, shape=(len(f), 3))
    corners = (p0, p1, p2)
    for c in range(3):
        a = corners[(c + 1) % 3] - corners[c]
        b = corners[(c + 2) % 3] - corners[c]
        cots[:, c] = np.einsum("ij,ij->i", a, b) / area2
    weights = np.zeros(len(edges))
    np.add.at(weights, edge_of.reshape(-1), 0.5 * cots.reshape(-1))
    return EdgeWeights(edges, np.clip(weights, 0.0, COT_WEIGHT_MAX), kind="cotangent")
