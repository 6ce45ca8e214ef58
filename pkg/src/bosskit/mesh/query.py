"""Spatial queries: exact closest point on a triangle soup, inside tests, mirror maps."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from ..errors import AsymmetricMeshError, OpenMeshError
from .core import Mesh, face_normals_areas, is_closed

_PAIR_CHUNK = 2_000_000  # bound memory of the flattened candidate sweep


def closest_point_on_triangles(p: np.ndarray, a: np.ndarray, b: np.ndarray, c: np.ndarray) -> np.ndarray:
    """Closest point to p on each triangle (a, b, c); all arrays (K, 3).

    Vectorized region classification (vertex / edge / interior) following
    the standard barycentric case analysis.
    """
    ab = b - a
    ac = c - a
    ap = p - a
    d1 = np.einsum("ij,ij->i", ab, ap)
    d2 = np.einsum("ij,ij->i", ac, ap)
    bp = p - b
    d3 = np.einsum("ij,ij->i", ab, bp)
    d4 = np.einsum("ij,ij->i", ac, bp)
    cp = p - c
    d5 = np.einsum("ij,ij->i", ab, cp)
    d6 = np.einsum("ij,ij->i", ac, cp)

    out = np.empty_like(p)
    done = np.zeros(len(p), dtype=bool)

    def settle(mask, value):
        todo = mask & ~done
        out[todo] = value[todo] if value.ndim == 2 else value
        done[todo] = True

    settle((d1 <= 0) & (d2 <= 0), a)  # vertex a
    settle((d3 >= 0) & (d4 <= d3), b)  # vertex b
    settle((d6 >= 0) & (d5 <= d6), c)  # vertex c

    vc = d1 * d4 - d3 * d2
    with np.errstate(divide="ignore", invalid="ignore"):
        v_ab = np.where(d1 - d3 != 0, d1 / (d1 - d3), 0.0)
    settle((vc <= 0) & (d1 >= 0) & (d3 <= 0), a + v_ab[:, None] * ab)  # edge ab

    vb = d5 * d2 - d1 * d6
    with np.errstate(divide="ignore", invalid="ignore"):
        w_ac = np.where(d2 - d6 != 0, d2 / (d2 - d6), 0.0)
    settle((vb <= 0) & (d2 >= 0) & (d6 <= 0), a + w_ac[:, None] * ac)  # edge ac

    va = d3 * d6 - d5 * d4
    with np.errstate(divide="ignore", invalid="ignore"):
        w_bc = np.where((d4 - d3) + (d5 - d6) != 0, (d4 - d3) / ((d4 - d3) + (d5 - d6)), 0.0)
    settle((va <= 0) & (d4 - d3 >= 0) & (d5 - d6 >= 0), b + w_bc[:, None] * (c - b))  # edge bc

    denom = va + vb + vc
    with np.errstate(divide="ignore", invalid="ignore"):
        v = np.where(denom != 0, vb / denom, 0.0)
        w = np.where(denom != 0, vc / denom, 0.0)
    settle(np.ones(len(p), dtype=bool), a + v[:, None] * ab + w[:, None] * ac)  # interior
    return out


class SurfaceIndex:
    """Exact closest-point queries against a fixed triangle soup.

    A kd-tree over triangle centroids prunes candidates; correctness comes
    from the bound dist(q, tri) >= dist(q, centroid) - tri_radius.
    Ties are broken deterministically by lowest face id.
    """

    def __init__(self, mesh: Mesh):
        if mesh.n_faces == 0:
            raise ValueError("SurfaceIndex needs a non-empty mesh")
        self.mesh = mesh
        v, f = mesh.vertices, mesh.faces
        self._tri = (v[f[:, 0]], v[f[:, 1]], v[f[:, 2]])
        self._centroids = (self._tri[0] + self._tri[1] + self._tri[2]) / 3.0
        radii = np.max(
            [np.linalg.norm(t - self._centroids, axis=1) for t in self._tri], axis=0
        )
        self._max_radius = float(radii.max())
        self._tree = cKDTree(self._centroids)
        self.face_normals, _ = face_normals_areas(mesh)

    def nearest(self, points: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Closest surface points for queries (Q, 3).

        Returns (closest (Q, 3), face_id (Q,), distance (Q,)).
        """
        points = np.atleast_2d(np.asarray(points, dtype=np.float64))
        n_faces = len(self._centroids)
        k = min(8, n_faces)
        _, prelim = self._tree.query(points, k=k)
        prelim = prelim.reshape(len(points), k)

        # upper bound from exact distances to the k centroid-nearest faces
        qi = np.repeat(np.arange(len(points)), k)
        fi = prelim.reshape(-1)
        cand = closest_point_on_triangles(
            points[qi], self._tri[0][fi], self._tri[1][fi], self._tri[2][fi]
        )
        d = np.linalg.norm(cand - points[qi], axis=1).reshape(len(points), k)
        ub = d.min(axis=1)

        groups = self._tree.query_ball_point(points, ub + self._max_radius + 1e-9)
        counts = np.fromiter((len(g) for g in groups), dtype=np.int64, count=len(groups))
        qidx = np.repeat(np.arange(len(points)), counts)
        fidx = np.concatenate([np.asarray(g, dtype=np.int64) for g in groups]) if counts.sum() else np.zeros(0, np.int64)

        best_d = np.full(len(points), np.inf)
        best_f = np.zeros(len(points), dtype=np.int64)
        best_p = np.zeros((len(points), 3))
        for s in range(0, len(qidx), _PAIR_CHUNK):
            q = qidx[s : s + _PAIR_CHUNK]
            fsel = fidx[s : s + _PAIR_CHUNK]
            cp = closest_point_on_triangles(
                points[q], self._tri[0][fsel], self._tri[1][fsel], self._tri[2][fsel]
            )
            dist = np.linalg.norm(cp - points[q], axis=1)
            # lowest distance wins; equal distance -> lowest face id
            order = np.lexsort((fsel, dist, q))
            qs = q[order]
            first = np.ones(len(qs), dtype=bool)
            first[1:] = qs[1:] != qs[:-1]
            sel = order[first]
            better = (dist[sel] < best_d[q[sel]]) | (
                (dist[sel] == best_d[q[sel]]) & (fsel[sel] < best_f[q[sel]])
            )
            upd = q[sel][better]
            best_d[upd] = dist[sel][better]
            best_f[upd] = fsel[sel][better]
            best_p[upd] = cp[sel][better]
        return best_p, best_f, best_d

    def barycentric(self, face_ids: np.ndarray, points: np.ndarray) -> np.ndarray:
        """Barycentric coordinates of points known to lie on the given faces."""
        a = self._tri[0][face_ids]
        ab = self._tri[1][face_ids] - a
        ac = self._tri[2][face_ids] - a
        ap = points - a
        d00 = np.einsum("ij,ij->i", ab, ab)
        d01 = np.einsum("ij,ij->i", ab, ac)
        d11 = np.einsum("ij,ij->i", ac, ac)
        d20 = np.einsum("ij,ij->i", ap, ab)
        d21 = np.einsum("ij,ij->i", ap, ac)
        denom = d00 * d11 - d01 * d01
        safe = np.abs(denom) > 1e-300
        v = np.where(safe, (d11 * d20 - d01 * d21) / np.where(safe, denom, 1.0), 0.0)
        w = np.where(safe, (d00 * d21 - d01 * d20) / np.where(safe, denom, 1.0), 0.0)
        v = np.clip(v, 0.0, 1.0)
        w = np.clip(w, 0.0, 1.0 - v)
        bary = np.stack([1.0 - v - w, v, w], axis=1)
        return bary


def nearest_on_surface(query, target: Mesh | SurfaceIndex):
    """Exact closest point on the target surface for one query point.

    Returns (closest_point (3,), face_id, distance). For repeated queries
    build a SurfaceIndex once and call ``nearest`` with a batch.
    """
    index = target if isinstance(target, SurfaceIndex) else SurfaceIndex(target)
    p, f, d = index.nearest(np.asarray(query, dtype=np.float64).reshape(1, 3))
    return p[0], int(f[0]), float(d[0])


def winding_numbers(points: np.ndarray, mesh: Mesh, chunk: int = 4_000_000) -> np.ndarray:
    """Generalized winding number of each query point (van Oosterom-Strackee)."""
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    v, f = mesh.vertices, mesh.faces
    out = np.zeros(len(points))
    faces_per_chunk = max(1, chunk // max(1, len(points)))
    for s in range(0, len(f), faces_per_chunk):
        fs = f[s : s + faces_per_chunk]
        a = v[fs[:, 0]][None] - points[:, None]
        b = v[fs[:, 1]][None] - points[:, None]
        c = v[fs[:, 2]][None] - points[:, None]
        la = np.linalg.norm(a, axis=2)
        lb = np.linalg.norm(b, axis=2)
        lc = np.linalg.norm(c, axis=2)
        det = np.einsum("qfi,qfi->qf", a, np.cross(b, c))
        denom = (
            la * lb * lc
            + np.einsum("qfi,qfi->qf", a, b) * lc
            + np.einsum("qfi,qfi->qf", b, c) * la
            + np.einsum("qfi,qfi->qf", c, a) * lb
        )
        out += 2.0 * np.arctan2(det, denom).sum(axis=1)
    return out / (4.0 * np.pi)


def point_in_mesh(query, target: Mesh, index: SurfaceIndex | None = None):
    """Inside test via winding number plus distance to the nearest boundary.

    Accepts one point or a batch; returns (inside, distance) with matching
    shape. The target must be closed.
    """
    if not is_closed(target):
        raise OpenMeshError(f"inside test needs a closed mesh, got '{target.name}'")
    q = np.asarray(query, dtype=np.float64)
    single = q.ndim == 1
    q = np.atleast_2d(q)
    inside = winding_numbers(q, target) > 0.5
    if index is None:
        index = SurfaceIndex(target)
    _, _, dist = index.nearest(q)
    if single:
        return bool(inside[0]), float(dist[0])
    return inside, dist


@dataclass
class MirrorMap:
    """Vertex involution pairing a mesh with its sagittal reflection."""

    permutation: np.ndarray  # (N,) int64
    plane_point: np.ndarray  # (3,)
    plane_normal: np.ndarray  # (3,) unit
    residuals: np.ndarray  # (N,) pairing residual, mm

    def reflect_points(self, points: np.ndarray) -> np.ndarray:
        d = (points - self.plane_point) @ self.plane_normal
        return points - 2.0 * d[:, None] * self.plane_normal

    def apply(self, points: np.ndarray) -> np.ndarray:
        """Reflection composed with the pairing permutation."""
        return self.reflect_points(points)[self.permutation]


def mirror_map(
    mesh: Mesh,
    plane_point=(0.0, 0.0, 0.0),
    plane_normal=(1.0, 0.0, 0.0),
    max_mean_residual: float = 10.0,
) -> MirrorMap:
    """Pair each vertex with its nearest reflected counterpart.

    The pairing is made an involution by greedy mutual matching in order of
    residual; on-plane vertices may pair with themselves. Raises
    AsymmetricMeshError when the mean residual exceeds the threshold.
    """
    point = np.asarray(plane_point, dtype=np.float64)
    normal = np.asarray(plane_normal, dtype=np.float64)
    normal = normal / np.linalg.norm(normal)
    v = mesh.vertices
    refl = v - 2.0 * ((v - point) @ normal)[:, None] * normal

    tree = cKDTree(v)
    dist, nn = tree.query(refl, k=1)
    perm = -np.ones(mesh.n_vertices, dtype=np.int64)
    residual = np.zeros(mesh.n_vertices)
    for i in np.argsort(dist, kind="stable"):
        if perm[i] >= 0:
            continue
        j = int(nn[i])
        if perm[j] >= 0:
            # fall back to self pairing; residual is twice the plane offset
            perm[i] = i
            residual[i] = abs(2.0 * (v[i] - point) @ normal)
            continue
        perm[i] = j
        perm[j] = i
        r = float(np.linalg.norm(refl[i] - v[j]))
        residual[i] = r
        residual[j] = r
    mean = float(residual.mean()) if len(residual) else 0.0
    if mean > max_mean_residual:
        raise AsymmetricMeshError(
            f"mean mirror residual {mean:.2f} mm exceeds {max_mean_residual} mm"
        )
    return MirrorMap(perm, point, normal, residual)
