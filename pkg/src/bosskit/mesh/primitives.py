"""Procedural watertight primitives: boxes, icospheres, capsules, swept tubes."""

from __future__ import annotations

import numpy as np

from .core import Mesh, normalize_winding

_ICO_T = (1.0 + np.sqrt(5.0)) / 2.0

_ICO_VERTS = np.array(
    [
        [-1, _ICO_T, 0], [1, _ICO_T, 0], [-1, -_ICO_T, 0], [1, -_ICO_T, 0],
        [0, -1, _ICO_T], [0, 1, _ICO_T], [0, -1, -_ICO_T], [0, 1, -_ICO_T],
        [_ICO_T, 0, -1], [_ICO_T, 0, 1], [-_ICO_T, 0, -1], [-_ICO_T, 0, 1],
    ],
    dtype=np.float64,
)

_ICO_FACES = np.array(
    [
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ],
    dtype=np.int64,
)


def icosphere(radius: float = 1.0, subdivisions: int = 2, center=(0.0, 0.0, 0.0)) -> Mesh:
    verts = _ICO_VERTS / np.linalg.norm(_ICO_VERTS[0])
    faces = _ICO_FACES
    for _ in range(subdivisions):
        midpoint = {}
        verts = list(verts)

        def midof(i, j):
            key = (min(i, j), max(i, j))
            if key not in midpoint:
                m = verts[i] + verts[j]
                verts.append(m / np.linalg.norm(m))
                midpoint[key] = len(verts) - 1
            return midpoint[key]

        out = []
        for a, b, c in faces:
            ab, bc, ca = midof(a, b), midof(b, c), midof(c, a)
            out += [[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]
        verts = np.asarray(verts)
        faces = np.asarray(out, dtype=np.int64)
    return Mesh(np.asarray(verts) * radius + np.asarray(center, dtype=np.float64), faces)


def ellipsoid(radii, center=(0.0, 0.0, 0.0), subdivisions: int = 2) -> Mesh:
    sph = icosphere(1.0, subdivisions)
    return sph.with_vertices(sph.vertices * np.asarray(radii, dtype=np.float64) + np.asarray(center))


def box(size=(1.0, 1.0, 1.0), center=(0.0, 0.0, 0.0)) -> Mesh:
    sx, sy, sz = (np.asarray(size, dtype=np.float64) / 2.0)
    c = np.asarray(center, dtype=np.float64)
    verts = np.array(
        [
            [-sx, -sy, -sz], [sx, -sy, -sz], [sx, sy, -sz], [-sx, sy, -sz],
            [-sx, -sy, sz], [sx, -sy, sz], [sx, sy, sz], [-sx, sy, sz],
        ]
    ) + c
    faces = np.array(
        [
            [0, 2, 1], [0, 3, 2],  # bottom
            [4, 5, 6], [4, 6, 7],  # top
            [0, 1, 5], [0, 5, 4],
            [1, 2, 6], [1, 6, 5],
            [2, 3, 7], [2, 7, 6],
            [3, 0, 4], [3, 4, 7],
        ],
        dtype=np.int64,
    )
    return Mesh(verts, faces)


def plane_grid(nx: int, ny: int, size_x: float, size_y: float, z: float = 0.0) -> Mesh:
    """Open triangulated rectangle in the z=const plane (test fixture)."""
    xs = np.linspace(-size_x / 2, size_x / 2, nx)
    ys = np.linspace(-size_y / 2, size_y / 2, ny)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    verts = np.stack([gx.ravel(), gy.ravel(), np.full(gx.size, z)], axis=1)
    faces = []
    for i in range(nx - 1):
        for j in range(ny - 1):
            a = i * ny + j
            b = (i + 1) * ny + j
            faces += [[a, b, a + 1], [b, b + 1, a + 1]]
    return Mesh(verts, np.asarray(faces, dtype=np.int64))


def _orthonormal_frame(axis: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    axis = axis / np.linalg.norm(axis)
    helper = np.array([0.0, 0.0, 1.0]) if abs(axis[2]) < 0.9 else np.array([1.0, 0.0, 0.0])
    e1 = np.cross(axis, helper)
    e1 /= np.linalg.norm(e1)
    return e1, np.cross(axis, e1)


def _rows_to_mesh(rows: list[tuple[np.ndarray, float]], e1, e2, axis, n_side: int) -> Mesh:
    """Stitch circular rows plus two pole vertices into a closed tube."""
    angles = np.linspace(0.0, 2.0 * np.pi, n_side, endpoint=False)
    circle = np.outer(np.cos(angles), e1) + np.outer(np.sin(angles), e2)
    # rows[0] and rows[-1] are poles encoded with radius 0
    ring_rows = rows[1:-1]
    flat = [np.atleast_2d(rows[0][0])]
    for center, radius in ring_rows:
        flat.append(center + radius * circle)
    flat.append(np.atleast_2d(rows[-1][0]))
    v = np.vstack(flat)

    faces = []
    first_ring = 1
    for s in range(n_side):
        faces.append([0, first_ring + s, first_ring + (s + 1) % n_side])
    for r in range(len(ring_rows) - 1):
        base0 = first_ring + r * n_side
        base1 = base0 + n_side
        for s in range(n_side):
            s1 = (s + 1) % n_side
            faces.append([base0 + s, base1 + s, base1 + s1])
            faces.append([base0 + s, base1 + s1, base0 + s1])
    top_pole = len(v) - 1
    last = first_ring + (len(ring_rows) - 1) * n_side
    for s in range(n_side):
        faces.append([top_pole, last + (s + 1) % n_side, last + s])
    return normalize_winding(Mesh(v, np.asarray(faces, dtype=np.int64)))


def capsule(
    p0,
    p1,
    radius0: float,
    radius1: float | None = None,
    n_side: int = 12,
    n_rings: int = 6,
    cap_rings: int = 3,
    radius_profile=None,
) -> Mesh:
    """Closed capsule from p0 to p1 with optionally varying radius.

    ``radius_profile(t)`` (t in [0, 1] along the cylindrical part) scales
    the linearly interpolated radius, letting callers bulge or taper.
    """
    p0 = np.asarray(p0, dtype=np.float64)
    p1 = np.asarray(p1, dtype=np.float64)
    if radius1 is None:
        radius1 = radius0
    axis = p1 - p0
    length = np.linalg.norm(axis)
    u = axis / length
    e1, e2 = _orthonormal_frame(u)

    rows: list[tuple[np.ndarray, float]] = [(p0 - u * radius0, 0.0)]
    for a in np.linspace(-np.pi / 2, 0.0, cap_rings + 1)[1:]:
        rows.append((p0 + u * (radius0 * np.sin(a)), radius0 * np.cos(a)))
    for t in np.linspace(0.0, 1.0, n_rings + 1)[1:-1]:
        r = (1.0 - t) * radius0 + t * radius1
        if radius_profile is not None:
            r = r * float(radius_profile(t))
        rows.append((p0 + axis * t, r))
    for a in np.linspace(0.0, np.pi / 2, cap_rings + 1)[:-1]:
        rows.append((p1 + u * (radius1 * np.sin(a)), radius1 * np.cos(a)))
    rows.append((p1 + u * radius1, 0.0))
    return _rows_to_mesh(rows, e1, e2, u, n_side)


def swept_tube(path: np.ndarray, radii, n_side: int = 8) -> Mesh:
    """Closed tube swept along a polyline with per-point radii (ribs)."""
    path = np.asarray(path, dtype=np.float64)
    radii = np.broadcast_to(np.asarray(radii, dtype=np.float64), (len(path),))
    tangents = np.gradient(path, axis=0)
    tangents /= np.linalg.norm(tangents, axis=1)[:, None]

    # parallel-transport frames to avoid twisting
    e1, _ = _orthonormal_frame(tangents[0])
    angles = np.linspace(0.0, 2.0 * np.pi, n_side, endpoint=False)
    verts = [path[0] - tangents[0] * radii[0]]
    for i, (c, t) in enumerate(zip(path, tangents)):
        if i > 0:
            prev = tangents[i - 1]
            axis = np.cross(prev, t)
            s = np.linalg.norm(axis)
            if s > 1e-12:
                axis = axis / s
                ang = np.arcsin(min(1.0, s))
                e1 = (
                    e1 * np.cos(ang)
                    + np.cross(axis, e1) * np.sin(ang)
                    + axis * np.dot(axis, e1) * (1 - np.cos(ang))
                )
        e1 = e1 - np.dot(e1, t) * t
        e1 /= np.linalg.norm(e1)
        e2 = np.cross(t, e1)
        circle = np.outer(np.cos(angles), e1) + np.outer(np.sin(angles), e2)
        verts.append(c + radii[i] * circle)
    verts.append(path[-1] + tangents[-1] * radii[-1])

    v = np.vstack([np.atleast_2d(x) for x in verts])
    faces = []
    for s in range(n_side):
        faces.append([0, 1 + s, 1 + (s + 1) % n_side])
    for r in range(len(path) - 1):
        base0 = 1 + r * n_side
        base1 = base0 + n_side
        for s in range(n_side):
            s1 = (s + 1) % n_side
            faces.append([base0 + s, base1 + s, base1 + s1])
            faces.append([base0 + s, base1 + s1, base0 + s1])
    top = len(v) - 1
    last = 1 + (len(path) - 1) * n_side
    for s in range(n_side):
        faces.append([top, last + (s + 1) % n_side, last + s])
    return normalize_winding(Mesh(v, np.asarray(faces, dtype=np.int64)))
