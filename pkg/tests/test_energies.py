import numpy as np
import pytest
import torch

from oracles import assert_gradient_matches_fd, brute_force_closest

from bosskit.energies import (
    GATE_ANGLE,
    GATE_DISTANCE,
    CorrespondenceSet,
    PenetrationSet,
    RobustLossConfig,
    SurfaceJointMapping,
    build_correspondences,
    build_penetration_set,
    correspondences_to_target,
    e_data,
    e_height,
    e_landmark,
    e_orthogonal,
    e_penetration,
    e_pose_prior_gmm,
    e_shape_prior,
    e_skin_vicinity_landmarks,
    e_smooth,
    e_supine_pose,
    e_symmetry,
    e_translation_prior,
    e_vertex_l2,
    e_weight,
    geman_mcclure,
    project_rotations,
    train_pose_prior,
    volume_liters,
)
from bosskit.errors import UntrainedMappingError, UntrainedPriorError
from bosskit.kinematics import axis_angle_to_matrix_np
from bosskit.mesh import Mesh, SurfaceIndex, compute_vertex_normals
from bosskit.mesh.primitives import box, icosphere, plane_grid


# ---------------------------------------------------------------------------
# robust loss

def test_geman_mcclure_values():
    sigma = 10.0
    assert float(geman_mcclure(0.0, sigma)) == 0.0
    assert float(geman_mcclure(sigma**2, sigma)) == pytest.approx(0.5)
    assert float(geman_mcclure(100 * sigma**2, sigma)) == pytest.approx(100 / 101)
    s = torch.linspace(0.0, 1e6, 50, dtype=torch.float64)
    rho = geman_mcclure(s, sigma)
    assert (rho[1:] >= rho[:-1]).all() and (rho < 1.0).all()


# ---------------------------------------------------------------------------
# correspondences

def test_correspondences_identical_meshes():
    m = icosphere(30.0, 1)
    fwd, rev = build_correspondences(m, m)
    assert np.allclose(fwd.target_points, m.vertices, atol=1e-12)
    assert fwd.weights.min() == 1.0
    assert rev.weights.min() == 1.0


def test_correspondences_distance_gate():
    m = icosphere(30.0, 1)
    target = m.transformed(translation=(40.0, 0.0, 0.0))
    fwd, _ = build_correspondences(m, target, max_dist_mm=30.0)
    # |p - c| - 30 > 30 requires p_x < -13.75 on this sphere pair; the
    # near side stays within the gate
    far = m.vertices[:, 0] < -14.0
    assert (fwd.weights[far] == 0.0).all()
    assert (fwd.gate_reasons[far] == GATE_DISTANCE).all()
    whole = m.transformed(translation=(100.0, 0.0, 0.0))
    fwd, _ = build_correspondences(m, whole, max_dist_mm=30.0)
    assert fwd.n_active == 0


def test_correspondences_angle_gate_antiparallel_planes():
    src = plane_grid(4, 4, 20.0, 20.0, z=0.0)
    tgt = plane_grid(4, 4, 20.0, 20.0, z=10.0)
    tgt_flipped = Mesh(tgt.vertices, tgt.faces[:, [0, 2, 1]])  # normals now -z
    fwd, _ = build_correspondences(src, tgt_flipped, max_dist_mm=30.0)
    assert fwd.n_active == 0
    assert (fwd.gate_reasons == GATE_ANGLE).all()


# ---------------------------------------------------------------------------
# data term

def _double_loop_e_data(source, target, robust, lam1, lam2, max_angle=30.0, max_dist=30.0):
    total = 0.0
    sn = compute_vertex_normals(source)
    tn = compute_vertex_normals(target)
    t_face_n = SurfaceIndex(target).face_normals
    s_face_n = SurfaceIndex(source).face_normals
    cos_min = np.cos(np.deg2rad(max_angle))

    def one_direction(pts, pns, msh, face_normals, lam):
        subtotal = 0.0
        for p, n in zip(pts, pns):
            best_d, best_f = np.inf, -1
            for fi, (a, b, c) in enumerate(msh.vertices[msh.faces]):
                from oracles import closest_on_one_triangle

                q = closest_on_one_triangle(p, a, b, c)
                d = np.linalg.norm(q - p)
                if d < best_d:
                    best_d, best_f = d, fi
            if best_d > max_dist or np.dot(n, face_normals[best_f]) < cos_min:
                continue
            subtotal += lam * best_d**2 / (best_d**2 + robust.sigma_mm**2)
        return subtotal

    total += one_direction(source.vertices, sn, target, t_face_n, lam1)
    total += one_direction(target.vertices, tn, source, s_face_n, lam2)
    return total


def test_e_data_identical_is_zero():
    m = icosphere(25.0, 1)
    fwd, rev = build_correspondences(m, m)
    robust = RobustLossConfig(10.0)
    val = e_data(m.vertices, fwd, rev, robust, 1.0, 1.0)
    assert float(val) == pytest.approx(0.0, abs=1e-12)


def test_e_data_single_pair_value():
    robust = RobustLossConfig(10.0)
    d = 7.0
    corr = CorrespondenceSet(
        indices=[[0, 0, 0]], coeffs=[[1.0, 0, 0]], target_points=[[d, 0.0, 0.0]],
        weights=[1.0], gate_reasons=[0],
    )
    empty = CorrespondenceSet(
        indices=np.zeros((0, 3)), coeffs=np.zeros((0, 3)), target_points=np.zeros((0, 3)),
        weights=np.zeros(0), gate_reasons=np.zeros(0),
    )
    lam1 = 2.5
    val = e_data(np.zeros((1, 3)), corr, empty, robust, lam1, 1.0)
    assert float(val) == pytest.approx(lam1 * d**2 / (d**2 + 100.0))


def test_e_data_matches_double_loop_oracle():
    rng = np.random.default_rng(21)
    src = icosphere(20.0, 1)
    src = src.with_vertices(src.vertices + rng.normal(scale=1.5, size=src.vertices.shape))
    tgt = icosphere(21.0, 1)
    tgt = tgt.with_vertices(tgt.vertices + rng.normal(scale=1.5, size=tgt.vertices.shape))
    robust = RobustLossConfig(10.0)
    fwd, rev = build_correspondences(src, tgt)
    val = float(e_data(src.vertices, fwd, rev, robust, 0.7, 1.3))
    ref = _double_loop_e_data(src, tgt, robust, 0.7, 1.3)
    assert val == pytest.approx(ref, abs=1e-9)


def test_e_data_gradient_parity():
    rng = np.random.default_rng(22)
    src = icosphere(20.0, 1)
    tgt = icosphere(22.0, 1)
    fwd, rev = build_correspondences(src, tgt)
    robust = RobustLossConfig(10.0)
    for _ in range(5):
        base = src.vertices + rng.normal(scale=1.0, size=src.vertices.shape)
        assert_gradient_matches_fd(
            lambda v: e_data(v, fwd, rev, robust, 1.0, 1.0), base, rng
        )


# ---------------------------------------------------------------------------
# landmarks and simple priors

def test_e_landmark_values():
    a = np.zeros((3, 3))
    assert float(e_landmark(a, a)) == pytest.approx(0.0, abs=1e-5)
    b = a.copy()
    b[1] = [1.0, 2.0, 3.0]
    assert float(e_landmark(b, a)) == pytest.approx(6.0, abs=1e-5)


def test_e_shape_prior_values():
    assert float(e_shape_prior(np.zeros(5))) == pytest.approx(0.0, abs=1e-5)
    assert float(e_shape_prior(np.array([3.0, 4.0]))) == pytest.approx(5.0)
    assert float(e_shape_prior(np.array([6.0, 8.0]))) == pytest.approx(10.0)


def test_e_translation_prior_sums_vector_norms():
    t = np.array([[3.0, 4.0, 0.0], [0.0, 0.0, 2.0]])
    assert float(e_translation_prior(t)) == pytest.approx(7.0)


def test_prior_gradient_parity():
    rng = np.random.default_rng(23)
    for _ in range(5):
        assert_gradient_matches_fd(e_shape_prior, rng.normal(size=6), rng)
        assert_gradient_matches_fd(
            e_translation_prior, rng.normal(scale=5.0, size=(4, 3)), rng
        )
    assert_gradient_matches_fd(
        lambda x: e_landmark(x, torch.zeros((4, 3), dtype=torch.float64)),
        rng.normal(scale=10.0, size=(4, 3)),
        rng,
    )


# ---------------------------------------------------------------------------
# pose prior

def _gaussian_logpdf(x, mean, cov):
    d = len(mean)
    diff = x - mean
    return -0.5 * (
        d * np.log(2 * np.pi)
        + np.linalg.slogdet(cov)[1]
        + diff @ np.linalg.solve(cov, diff)
    )


def test_pose_prior_single_component_minimum_at_mean():
    rng = np.random.default_rng(31)
    mean = rng.normal(size=6)
    a = rng.normal(size=(6, 6))
    cov = a @ a.T + 3.0 * np.eye(6)
    from bosskit.energies import PosePriorGMM

    prior = PosePriorGMM(mean[None], cov[None], np.array([1.0]))
    val = float(e_pose_prior_gmm(mean, prior))
    assert val == pytest.approx(-_gaussian_logpdf(mean, mean, cov), abs=1e-9)
    for _ in range(10):
        other = mean + rng.normal(scale=0.5, size=6)
        assert float(e_pose_prior_gmm(other, prior)) >= val


def test_pose_prior_two_component_far_separation():
    from bosskit.energies import PosePriorGMM

    mean1 = np.zeros(4)
    mean2 = np.full(4, 50.0)
    cov = np.eye(4)
    prior = PosePriorGMM(
        np.stack([mean1, mean2]), np.stack([cov, cov]), np.array([0.5, 0.5])
    )
    val = float(e_pose_prior_gmm(mean1, prior))
    single = -_gaussian_logpdf(mean1, mean1, cov)
    assert val == pytest.approx(single + np.log(2.0), abs=1e-6)


def test_pose_prior_decreases_toward_nearest_mean():
    rng = np.random.default_rng(32)
    samples = np.vstack(
        [rng.normal(loc=-2.0, scale=0.3, size=(60, 4)), rng.normal(loc=2.0, scale=0.3, size=(60, 4))]
    )
    prior = train_pose_prior(samples, n_components=2, seed=0)
    # walk along a line toward the nearest mean; value must decrease
    target = prior.means[0]
    start = target + 1.0
    vals = [
        float(e_pose_prior_gmm(start + t * (target - start), prior))
        for t in np.linspace(0.0, 1.0, 8)
    ]
    assert all(v2 <= v1 + 1e-9 for v1, v2 in zip(vals, vals[1:]))


def test_pose_prior_untrained_raises():
    with pytest.raises(UntrainedPriorError):
        e_pose_prior_gmm(np.zeros(3), None)


def test_pose_prior_gradient_parity():
    rng = np.random.default_rng(33)
    samples = rng.normal(size=(80, 6))
    prior = train_pose_prior(samples, n_components=3, seed=1)
    for _ in range(5):
        assert_gradient_matches_fd(
            lambda t: e_pose_prior_gmm(t, prior), rng.normal(size=6), rng
        )


# ---------------------------------------------------------------------------
# supine pose

def test_e_supine_values():
    theta = np.zeros((4, 3))
    assert float(e_supine_pose(theta, [1, 2])) == 0.0
    theta[1, 0] = -0.4  # backward flexion is free
    assert float(e_supine_pose(theta, [1, 2])) == 0.0
    theta[1, 0] = 0.1
    assert float(e_supine_pose(theta, [1], stiffness=10.0)) == pytest.approx(np.e - 1.0)


def test_e_supine_gradient_parity():
    rng = np.random.default_rng(35)
    for _ in range(5):
        theta = rng.normal(scale=0.2, size=(5, 3))
        theta[np.abs(theta) < 0.02] += 0.05  # keep away from the hinge point
        assert_gradient_matches_fd(
            lambda t: e_supine_pose(t, [1, 2, 3], stiffness=8.0), theta, rng
        )


# ---------------------------------------------------------------------------
# weight / height

def _box_with_volume_liters(liters):
    # 500 x 400 x h mm; h chosen to hit the requested volume
    h = liters * 1e6 / (500.0 * 400.0)
    return box((500.0, 400.0, h))


def test_e_weight_exact_inversion():
    m = _box_with_volume_liters(1.015 * 70 - 4.937)
    assert float(e_weight(m.vertices, m.faces, 70.0)) == pytest.approx(0.0, abs=1e-18)
    assert float(e_weight(m.vertices, m.faces, 71.0)) == pytest.approx(1.0, abs=1e-10)


def test_volume_liters_matches_mesh_volume():
    from bosskit.mesh import mesh_volume

    m = icosphere(80.0, 2)
    assert float(volume_liters(m.vertices, m.faces)) == pytest.approx(
        mesh_volume(m, signed=True), rel=1e-12
    )


def test_e_weight_gradient_parity():
    rng = np.random.default_rng(36)
    m = icosphere(60.0, 1)
    for _ in range(5):
        base = m.vertices + rng.normal(scale=2.0, size=m.vertices.shape)
        assert_gradient_matches_fd(
            lambda v: e_weight(v, m.faces, 1.0), base, rng
        )


def test_e_height_values_and_invariance():
    m = box((100.0, 100.0, 1700.0))
    assert float(e_height(m.vertices, 1700.0)) == 0.0
    assert float(e_height(m.vertices, 1690.0)) == pytest.approx(100.0)
    shifted = m.vertices + np.array([55.0, -30.0, 0.0])
    assert float(e_height(shifted, 1700.0)) == 0.0


def test_e_height_gradient_parity():
    rng = np.random.default_rng(37)
    m = icosphere(40.0, 1)
    for _ in range(5):
        base = m.vertices + rng.normal(scale=1.0, size=m.vertices.shape)
        assert_gradient_matches_fd(lambda v: e_height(v, 70.0), base, rng)


# ---------------------------------------------------------------------------
# smoothness / orthogonality

def _identity_field(n):
    f = np.zeros((n, 3, 4))
    f[:, :, :3] = np.eye(3)
    return f


def test_e_smooth_equal_fields_zero():
    rng = np.random.default_rng(41)
    verts = rng.normal(scale=50.0, size=(10, 3))
    edges = np.array([[i, i + 1] for i in range(9)])
    field = np.tile(rng.normal(size=(3, 4)), (10, 1, 1))
    val = e_smooth(field, verts, edges, np.ones(9))
    assert float(val) == pytest.approx(0.0, abs=1e-18)


def test_e_smooth_translation_difference():
    verts = np.array([[0.0, 0, 0], [10.0, 0, 0]])
    field = _identity_field(2)
    d = np.array([3.0, -4.0, 12.0])
    field[1, :, 3] = d
    val = e_smooth(field, verts, [[0, 1]], [1.0])
    assert float(val) == pytest.approx(np.dot(d, d))


def test_e_smooth_matches_edge_loop_oracle():
    rng = np.random.default_rng(42)
    n = 12
    verts = rng.normal(scale=30.0, size=(n, 3))
    edges = np.array([[rng.integers(n), rng.integers(n)] for _ in range(20)])
    edges = edges[edges[:, 0] != edges[:, 1]]
    w = rng.random(len(edges))
    field = rng.normal(size=(n, 3, 4))
    ref = 0.0
    for (i, j), c in zip(edges, w):
        m = 0.5 * (verts[i] + verts[j])
        diff = (field[i, :, :3] - field[j, :, :3]) @ m + field[i, :, 3] - field[j, :, 3]
        ref += c * np.dot(diff, diff)
    assert float(e_smooth(field, verts, edges, w)) == pytest.approx(ref, abs=1e-9)


def test_e_smooth_gradient_parity():
    rng = np.random.default_rng(43)
    verts = rng.normal(scale=20.0, size=(8, 3))
    edges = np.array([[i, (i + 3) % 8] for i in range(8)])
    w = rng.random(8)
    for _ in range(5):
        field = rng.normal(size=(8, 3, 4))
        assert_gradient_matches_fd(lambda f: e_smooth(f, verts, edges, w), field, rng)


def test_e_orthogonal_values():
    rng = np.random.default_rng(44)
    field = _identity_field(5)
    for k in range(5):
        field[k, :, :3] = axis_angle_to_matrix_np(rng.normal(size=3))
    assert float(e_orthogonal(field)) == pytest.approx(0.0, abs=1e-20)
    scaled = _identity_field(1)
    scaled[0, :, :3] = 2.0 * np.eye(3)
    assert float(e_orthogonal(scaled)) == pytest.approx(3.0)


def test_e_orthogonal_negative_det_projection():
    a = np.diag([1.0, 1.0, -1.0])[None]
    r = project_rotations(torch.as_tensor(a)).numpy()[0]
    assert np.linalg.det(r) == pytest.approx(1.0)


def test_e_orthogonal_rotation_invariance():
    rng = np.random.default_rng(45)
    field = rng.normal(size=(6, 3, 4))
    r = axis_angle_to_matrix_np(rng.normal(size=3))
    rotated = field.copy()
    rotated[:, :, :3] = field[:, :, :3] @ r
    assert float(e_orthogonal(field)) == pytest.approx(float(e_orthogonal(rotated)), rel=1e-12)


def test_e_orthogonal_gradient_parity():
    rng = np.random.default_rng(46)
    for _ in range(5):
        field = rng.normal(size=(6, 3, 4)) + _identity_field(6)
        assert_gradient_matches_fd(e_orthogonal, field, rng)


# ---------------------------------------------------------------------------
# penetration

def test_e_penetration_cases():
    cube = box((100.0, 100.0, 100.0))
    outside = np.array([[200.0, 0.0, 0.0]])
    pset = build_penetration_set(outside, [cube])
    assert float(e_penetration(outside, pset)) == 0.0
    center = np.array([[0.0, 0.0, 0.0]])
    pset = build_penetration_set(center, [cube])
    assert float(e_penetration(center, pset)) == pytest.approx(2500.0)
    boundary = np.array([[50.0, 0.0, 0.0]])
    pset = build_penetration_set(boundary, [cube])
    assert float(e_penetration(boundary, pset)) == pytest.approx(0.0, abs=1e-12)


def test_e_penetration_gradient_parity():
    rng = np.random.default_rng(47)
    cube = box((100.0, 100.0, 100.0))
    pts = rng.uniform(-40.0, 40.0, size=(6, 3))
    pset = build_penetration_set(pts, [cube])
    assert len(pset.vertex_ids) == 6
    for _ in range(5):
        base = pts + rng.normal(scale=1.0, size=pts.shape)
        assert_gradient_matches_fd(lambda v: e_penetration(v, pset), base, rng)


# ---------------------------------------------------------------------------
# vicinity landmarks

def test_e_skin_vicinity_values_and_untrained():
    mapping = SurfaceJointMapping(np.array([[0.5, 0.5, 0.0]]), np.array([2]))
    surface = np.array([[0.0, 0, 0], [10.0, 0, 0], [99.0, 9, 9]])
    joints = np.zeros((3, 3))
    joints[2] = [5.0, 0.0, 0.0]  # equals the mapped prediction
    assert float(e_skin_vicinity_landmarks(surface, mapping, joints)) == pytest.approx(0.0)
    joints[2] = [5.0, 5.0, 0.0]
    assert float(e_skin_vicinity_landmarks(surface, mapping, joints)) == pytest.approx(25.0)
    with pytest.raises(UntrainedMappingError):
        e_skin_vicinity_landmarks(surface, None, joints)


def test_e_skin_vicinity_gradient_parity():
    rng = np.random.default_rng(48)
    mapping = SurfaceJointMapping(
        np.abs(rng.normal(size=(2, 6))) + 0.1, np.array([1, 3])
    )
    mapping.matrix /= mapping.matrix.sum(axis=1, keepdims=True)
    surface = rng.normal(scale=40.0, size=(6, 3))
    for _ in range(5):
        joints = rng.normal(scale=30.0, size=(4, 3))
        assert_gradient_matches_fd(
            lambda q: e_skin_vicinity_landmarks(surface, mapping, q), joints, rng
        )


# ---------------------------------------------------------------------------
# auxiliary terms used by unposing

def test_e_symmetry_mirrored_is_zero():
    verts = np.array([[1.0, 2.0, 3.0], [-1.0, 2.0, 3.0], [0.0, 5.0, 1.0]])
    perm = np.array([1, 0, 2])
    val = e_symmetry(verts, perm, np.zeros(3), np.array([1.0, 0, 0]))
    assert float(val) == pytest.approx(0.0, abs=1e-18)


def test_e_vertex_l2_masked():
    v = np.ones((4, 3))
    t = np.zeros((4, 3))
    assert float(e_vertex_l2(v, t)) == pytest.approx(12.0)
    assert float(e_vertex_l2(v, t, mask=[1, 0, 0, 1])) == pytest.approx(6.0)
