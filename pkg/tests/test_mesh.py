import json

import numpy as np
import pytest

from bosskit.errors import (
    AsymmetricMeshError,
    DegenerateTriangleError,
    OpenMeshError,
    ParseError,
)
from bosskit.mesh import (
    EdgeWeights,
    Mesh,
    SurfaceIndex,
    compute_vertex_normals,
    cotangent_weights,
    is_closed,
    load_landmarks,
    load_mesh,
    merge_meshes,
    mesh_volume,
    mirror_map,
    nearest_on_surface,
    normalize_winding,
    point_in_mesh,
    save_landmarks,
    save_mesh,
    winding_numbers,
)
from bosskit.mesh.io import LandmarkEntry, LandmarkSet
from bosskit.mesh.primitives import box, capsule, icosphere, plane_grid


from oracles import brute_force_closest, ray_parity_inside


# ---------------------------------------------------------------------------
# normals

def test_flat_plane_normals():
    m = plane_grid(5, 5, 10.0, 10.0)
    n = compute_vertex_normals(m)
    assert np.allclose(np.abs(n[:, 2]), 1.0)
    assert np.allclose(n[:, :2], 0.0)


def test_cube_corner_normal_is_average_of_axes():
    # fan each face about its center so every corner sees equal area per face
    base = box((2.0, 2.0, 2.0))
    quads = [
        (0, 1, 2, 3, (0, 0, -1)), (4, 7, 6, 5, (0, 0, 1)),
        (0, 4, 5, 1, (0, -1, 0)), (2, 6, 7, 3, (0, 1, 0)),
        (1, 5, 6, 2, (1, 0, 0)), (3, 7, 4, 0, (-1, 0, 0)),
    ]
    verts = list(base.vertices)
    faces = []
    for a, b, c, d, n in quads:
        center = (base.vertices[a] + base.vertices[b] + base.vertices[c] + base.vertices[d]) / 4
        e = len(verts)
        verts.append(center)
        faces += [[a, b, e], [b, c, e], [c, d, e], [d, a, e]]
    m = normalize_winding(Mesh(np.asarray(verts), np.asarray(faces)))
    n = compute_vertex_normals(m)
    for i in range(8):
        expect = np.sign(m.vertices[i]) / np.sqrt(3.0)
        assert np.allclose(n[i], expect, atol=1e-12)


def test_icosphere_normals_radial_within_5_degrees():
    m = icosphere(100.0, 3)
    n = compute_vertex_normals(m)
    radial = m.vertices / np.linalg.norm(m.vertices, axis=1, keepdims=True)
    ang = np.degrees(np.arccos(np.clip(np.einsum("ij,ij->i", n, radial), -1, 1)))
    assert ang.max() < 5.0


# ---------------------------------------------------------------------------
# volume

def test_cube_volume_exact():
    # 100 mm edges enclose exactly one liter
    assert mesh_volume(box((100.0, 100.0, 100.0))) == pytest.approx(1.0, abs=1e-12)


def test_tetrahedron_volume_analytic():
    verts = np.array([[0, 0, 0], [100, 0, 0], [0, 100, 0], [0, 0, 100]], dtype=float)
    faces = np.array([[0, 2, 1], [0, 1, 3], [0, 3, 2], [1, 2, 3]])
    m = normalize_winding(Mesh(verts, faces))
    assert mesh_volume(m) == pytest.approx(1e6 / 6.0 / 1e6, rel=1e-12)


def test_icosphere_volume_within_one_percent():
    m = icosphere(100.0, 4)
    assert mesh_volume(m) == pytest.approx(4.0 / 3.0 * np.pi, rel=0.01)


def test_open_mesh_volume_raises():
    with pytest.raises(OpenMeshError):
        mesh_volume(plane_grid(3, 3, 1.0, 1.0))


def test_volume_rigid_invariance_and_scaling():
    rng = np.random.default_rng(0)
    m = icosphere(50.0, 2)
    v0 = mesh_volume(m)
    # random rotation via QR
    q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    if np.linalg.det(q) < 0:
        q[:, 0] *= -1
    mt = m.transformed(q, rng.normal(size=3) * 100)
    assert abs(mesh_volume(mt) - v0) / v0 < 1e-9
    ms = m.with_vertices(m.vertices * 2.0)
    assert mesh_volume(ms) == pytest.approx(8.0 * v0, rel=1e-12)


def test_normalize_winding_flips_inverted_component():
    m = box((10, 10, 10))
    flipped = Mesh(m.vertices, m.faces[:, [0, 2, 1]])
    fixed = normalize_winding(flipped)
    assert mesh_volume(fixed, signed=True) > 0


# ---------------------------------------------------------------------------
# cotangent weights

def _square_mesh():
    verts = np.array([[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0]], dtype=float)
    faces = np.array([[0, 1, 2], [0, 2, 3]])
    return Mesh(verts, faces)


def test_cotangent_square_diagonal_and_boundary():
    # angles opposite the diagonal are the right angles (cot 90 = 0); the 45
    # degree angles sit opposite the boundary legs (cot 45 / 2 = 0.5)
    w = cotangent_weights(_square_mesh())
    lookup = {tuple(e): c for e, c in zip(w.edges, w.weights)}
    assert lookup[(0, 2)] == pytest.approx(0.0, abs=1e-12)
    assert lookup[(0, 1)] == pytest.approx(0.5)
    assert w.kind == "cotangent"


def test_cotangent_interior_edge_with_45_degree_opposite_angles():
    # apex height chosen so the angle opposite the shared edge is 45 degrees
    h = 1.0 / np.tan(np.pi / 8.0) / 1.0
    verts = np.array([[0, 0, 0], [2, 0, 0], [1, h, 0], [1, -h, 0]], dtype=float)
    faces = np.array([[0, 1, 2], [0, 3, 1]])
    w = cotangent_weights(Mesh(verts, faces))
    lookup = {tuple(e): c for e, c in zip(w.edges, w.weights)}
    assert lookup[(0, 1)] == pytest.approx(1.0)  # (cot45 + cot45) / 2


def test_cotangent_equilateral_single_triangle():
    s = np.sqrt(3.0) / 2.0
    m = Mesh(np.array([[0, 0, 0], [1, 0, 0], [0.5, s, 0]]), np.array([[0, 1, 2]]))
    w = cotangent_weights(m)
    assert np.allclose(w.weights, 0.5 / np.tan(np.pi / 3.0))


def test_cotangent_rigid_invariance():
    rng = np.random.default_rng(3)
    m = icosphere(40.0, 2)
    w0 = cotangent_weights(m)
    q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    w1 = cotangent_weights(m.transformed(q, (5.0, -2.0, 8.0)))
    assert np.array_equal(w0.edges, w1.edges)
    assert np.max(np.abs(w0.weights - w1.weights)) < 1e-10


def test_cotangent_degenerate_triangle_raises():
    m = Mesh(np.array([[0, 0, 0], [1, 0, 0], [2e-10, 1e-10, 0]]), np.array([[0, 1, 2]]))
    with pytest.raises(DegenerateTriangleError):
        cotangent_weights(m)


# ---------------------------------------------------------------------------
# nearest on surface

def test_nearest_at_vertex_and_above_plane():
    m = plane_grid(5, 5, 10.0, 10.0)
    p, f, d = nearest_on_surface(m.vertices[7], m)
    assert d == pytest.approx(0.0, abs=1e-12)
    assert np.allclose(p, m.vertices[7])
    p, f, d = nearest_on_surface((0.0, 0.0, 5.0), m)
    assert d == pytest.approx(5.0)
    assert np.allclose(p, (0.0, 0.0, 0.0), atol=1e-12)


@pytest.mark.parametrize("seed", [0, 1])
def test_nearest_matches_brute_force(seed):
    rng = np.random.default_rng(seed)
    m = icosphere(30.0, 2)  # 320 faces, within the <=500-face property bound
    index = SurfaceIndex(m)
    queries = rng.normal(scale=60.0, size=(100, 3))
    _, _, dists = index.nearest(queries)
    for q, d in zip(queries, dists):
        d_ref, _ = brute_force_closest(q, m)
        assert abs(d - d_ref) < 1e-9


def test_nearest_deterministic_tie_break():
    m = _square_mesh()
    # directly above the shared diagonal: equidistant from both faces
    _, face, _ = nearest_on_surface((0.5, 0.5, 1.0), m)
    assert face == 0


# ---------------------------------------------------------------------------
# point in mesh

def test_point_in_cube_center_and_outside():
    m = box((100.0, 100.0, 100.0))
    inside, dist = point_in_mesh((0.0, 0.0, 0.0), m)
    assert inside and dist == pytest.approx(50.0)
    inside, dist = point_in_mesh((120.0, 0.0, 0.0), m)
    assert not inside


def test_winding_agrees_with_ray_parity():
    rng = np.random.default_rng(7)
    m = icosphere(20.0, 1)
    pts = rng.normal(scale=22.0, size=(200, 3))
    # keep clear of the surface where both predicates are ill-conditioned
    _, _, d = SurfaceIndex(m).nearest(pts)
    pts = pts[d > 0.5]
    inside, _ = point_in_mesh(pts, m)
    for p, flag in zip(pts, inside):
        assert flag == ray_parity_inside(p, m, np.array([0.123, 0.456, 0.789]))


def test_point_in_mesh_requires_closed():
    with pytest.raises(OpenMeshError):
        point_in_mesh((0, 0, 0), plane_grid(3, 3, 1.0, 1.0))


# ---------------------------------------------------------------------------
# mirror map

def test_mirror_map_symmetric_mesh_involution():
    m = icosphere(50.0, 2)
    mm = mirror_map(m)
    assert np.array_equal(mm.permutation[mm.permutation], np.arange(m.n_vertices))
    moved = mm.apply(m.vertices)
    assert np.max(np.linalg.norm(moved - m.vertices, axis=1)) < 1e-9


def test_mirror_map_offset_residual():
    m = box((100.0, 80.0, 60.0))
    v = m.vertices.copy()
    v[v[:, 0] > 0] += (2.0, 0.0, 0.0)
    mm = mirror_map(Mesh(v, m.faces))
    assert np.mean(mm.residuals) == pytest.approx(2.0, abs=1e-9)


def test_mirror_map_asymmetric_raises():
    m = box((100.0, 80.0, 60.0))
    v = m.vertices.copy()
    v[v[:, 0] > 0, 0] += 80.0
    with pytest.raises(AsymmetricMeshError):
        mirror_map(Mesh(v, m.faces), max_mean_residual=10.0)


# ---------------------------------------------------------------------------
# I/O

@pytest.mark.parametrize("fmt,binary", [("obj", False), ("ply", False), ("ply", True)])
def test_save_load_round_trip(tmp_path, fmt, binary):
    rng = np.random.default_rng(11)
    m = icosphere(12.0, 1)
    m = Mesh(m.vertices + rng.normal(size=m.vertices.shape), m.faces,
             segment_labels=(np.arange(m.n_vertices) % 5) if fmt == "ply" else None,
             name="roundtrip")
    path = tmp_path / f"mesh.{fmt}"
    save_mesh(m, path, binary=binary)
    out = load_mesh(path)
    assert np.array_equal(out.vertices, m.vertices)  # bitwise
    assert np.array_equal(out.faces, m.faces)
    if fmt == "ply":
        assert np.array_equal(out.segment_labels, m.segment_labels)


def test_obj_with_comments_and_blank_lines(tmp_path):
    path = tmp_path / "commented.obj"
    path.write_text("# header\n\nv 0 0 0\nv 1 0 0\n\n# mid comment\nv 0 1 0\nf 1 2 3\n")
    m = load_mesh(path)
    assert m.n_vertices == 3 and m.n_faces == 1


def test_truncated_ply_raises_parse_error(tmp_path):
    m = box((1, 1, 1))
    path = tmp_path / "full.ply"
    save_mesh(m, path, binary=True)
    data = path.read_bytes()
    trunc = tmp_path / "trunc.ply"
    trunc.write_bytes(data[: len(data) - 20])
    with pytest.raises(ParseError):
        load_mesh(trunc)


def test_truncated_obj_raises_parse_error(tmp_path):
    path = tmp_path / "bad.obj"
    path.write_text("v 0 0 0\nv 1 0\n")
    with pytest.raises(ParseError) as err:
        load_mesh(path)
    assert err.value.line == 2


def test_landmark_sidecar_round_trip(tmp_path):
    lms = LandmarkSet({
        "hip_l": LandmarkEntry((1.0, 2.0, 3.0), 4),
        "skull": LandmarkEntry((0.5, -1.25, 9.0), None),
    })
    path = tmp_path / "scan.landmarks.json"
    save_landmarks(lms, path)
    data = json.loads(path.read_text())
    assert data["landmarks"]["hip_l"]["pos"] == [1.0, 2.0, 3.0]
    assert data["landmarks"]["skull"]["vertex"] is None
    back = load_landmarks(path)
    assert back.names() == ["hip_l", "skull"]
    assert np.allclose(back.entries["hip_l"].position, (1, 2, 3))
    assert back.entries["hip_l"].vertex == 4


def test_mesh_save_with_landmark_sidecar(tmp_path):
    m = box((10, 10, 10))
    lms = LandmarkSet({"c0": LandmarkEntry(m.vertices[0], 0)})
    path = tmp_path / "m.ply"
    save_mesh(m, path, landmarks=lms)
    mesh, back = load_mesh(path, with_landmarks=True)
    assert back is not None and back.names() == ["c0"]


# ---------------------------------------------------------------------------
# construction invariants

def test_face_index_out_of_range_rejected():
    with pytest.raises(ValueError):
        Mesh(np.zeros((3, 3)), np.array([[0, 1, 5]]))


def test_degenerate_face_rejected():
    with pytest.raises(ValueError):
        Mesh(np.zeros((3, 3)), np.array([[0, 1, 1]]))


def test_merge_meshes_offsets_faces():
    a, b = box((1, 1, 1)), box((1, 1, 1), center=(5, 0, 0))
    m = merge_meshes([a, b])
    assert m.n_vertices == 16 and m.n_faces == 24
    assert is_closed(m)
    assert mesh_volume(m) == pytest.approx(2e-6, rel=1e-12)
