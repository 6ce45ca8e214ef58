"""Procedural skeleton + organ template: labeled segments over a kinematic tree."""

from __future__ import annotations

import numpy as np

from ..kinematics import (
    KinematicTree,
    ScaledSegmentModel,
    SkinnedModel,
    init_bone_joint_regressor,
)
from ..mesh import Mesh
from ..mesh.primitives import capsule, ellipsoid, swept_tube

SPINE_Y = -45.0

# name, parent, joint position
BONE_JOINTS = [
    ("pelvis", -1, (0.0, SPINE_Y, 1000.0)),
    ("v1", 0, (0.0, SPINE_Y, 1030.0)),
    ("v2", 1, (0.0, SPINE_Y, 1090.0)),
    ("v3", 2, (0.0, SPINE_Y, 1150.0)),
    ("v4", 3, (0.0, SPINE_Y, 1210.0)),
    ("v5", 4, (0.0, SPINE_Y, 1270.0)),
    ("v6", 5, (0.0, SPINE_Y, 1330.0)),
    ("v7", 6, (0.0, SPINE_Y, 1390.0)),
    ("skull", 7, (0.0, SPINE_Y, 1450.0)),
    ("rib1_l", 3, (15.0, SPINE_Y, 1170.0)),
    ("rib1_r", 3, (-15.0, SPINE_Y, 1170.0)),
    ("rib2_l", 4, (15.0, SPINE_Y, 1230.0)),
    ("rib2_r", 4, (-15.0, SPINE_Y, 1230.0)),
    ("rib3_l", 5, (15.0, SPINE_Y, 1290.0)),
    ("rib3_r", 5, (-15.0, SPINE_Y, 1290.0)),
    ("rib4_l", 6, (15.0, SPINE_Y, 1350.0)),
    ("rib4_r", 6, (-15.0, SPINE_Y, 1350.0)),
    ("sternum", 5, (0.0, 62.0, 1260.0)),
    ("humerus_l", 7, (170.0, 0.0, 1390.0)),
    ("forearm_l", 18, (450.0, 0.0, 1390.0)),
    ("humerus_r", 7, (-170.0, 0.0, 1390.0)),
    ("forearm_r", 20, (-450.0, 0.0, 1390.0)),
    ("femur_l", 0, (95.0, 0.0, 985.0)),
    ("femur_r", 0, (-95.0, 0.0, 985.0)),
    ("tibia_l", 22, (95.0, 0.0, 550.0)),
    ("tibia_r", 23, (-95.0, 0.0, 550.0)),
    # organ segments ride on the vertebral column
    ("lung_l", 5, (55.0, -5.0, 1260.0)),
    ("lung_r", 5, (-55.0, -5.0, 1260.0)),
    ("liver", 3, (48.0, 30.0, 1140.0)),
    ("heart", 5, (8.0, 42.0, 1245.0)),
    ("bowel", 1, (0.0, 40.0, 1065.0)),
]

N_BONE_SEGMENTS = 26
ORGAN_NAMES = ("lung_l", "lung_r", "liver", "heart", "bowel")
FREE_SEGMENTS = (17,)  # sternum floats
COMPOSITE_SEGMENTS = {7: 6}  # v7 shares weights evenly with its parent v6

LIMB_SEGMENTS_BY_DROPOUT = {
    "arms": (18, 19, 20, 21),
    "legs": (22, 23, 24, 25),
    "skull": (8,),
}

# along-axis scale component for limb-length morphing
LIMB_AXIS = {18: 0, 19: 0, 20: 0, 21: 0, 22: 2, 23: 2, 24: 2, 25: 2}

_SIDE = 10


def _mirror_x(mesh: Mesh) -> Mesh:
    m = mesh.with_vertices(mesh.vertices * np.array([-1.0, 1.0, 1.0]))
    return Mesh(m.vertices, m.faces[:, [0, 2, 1]], m.segment_labels, m.name)


def _rib_path(z: float, side: float) -> np.ndarray:
    pts = np.array(
        [
            (8.0, -70.0, z),
            (52.0, -56.0, z + 3.0),
            (82.0, -18.0, z + 7.0),
            (74.0, 28.0, z + 11.0),
            (46.0, 54.0, z + 14.0),
        ]
    )
    pts[:, 0] *= side
    return pts


def _segment_meshes() -> list[Mesh]:
    joints = {name: np.asarray(pos, dtype=np.float64) for name, _, pos in BONE_JOINTS}
    meshes: list[Mesh] = []

    def vert_capsule(z0, z1, radius):
        return capsule((0.0, SPINE_Y, z0), (0.0, SPINE_Y, z1), radius,
                       n_side=_SIDE, n_rings=3, cap_rings=2)

    # pelvis: wide lateral bar
    meshes.append(
        capsule((-70.0, -32.0, 990.0), (70.0, -32.0, 990.0), 36.0,
                n_side=12, n_rings=5, cap_rings=3)
    )
    for k in range(1, 8):  # vertebrae: short capsules with joint gaps
        z = BONE_JOINTS[k][2][2]
        meshes.append(vert_capsule(z + 10.0, z + 34.0, 16.0))
    meshes.append(ellipsoid((62.0, 72.0, 82.0), center=(0.0, -12.0, 1525.0), subdivisions=2))
    for pair in range(4):  # ribs
        z = BONE_JOINTS[9 + 2 * pair][2][2]
        meshes.append(swept_tube(_rib_path(z, +1.0), 6.0, n_side=6))
        meshes.append(swept_tube(_rib_path(z, -1.0), 6.0, n_side=6))
    meshes.append(
        capsule((0.0, 60.0, 1195.0), (0.0, 66.0, 1330.0), 12.0,
                n_side=8, n_rings=3, cap_rings=2)
    )

    def limb_capsule(a, b, radius, margin):
        a, b = np.asarray(a, float), np.asarray(b, float)
        u = (b - a) / np.linalg.norm(b - a)
        return capsule(a + u * margin, b - u * margin, radius,
                       n_side=_SIDE, n_rings=4, cap_rings=2)

    meshes.append(limb_capsule(joints["humerus_l"], joints["forearm_l"], 14.0, 34.0))
    meshes.append(limb_capsule(joints["forearm_l"], (690.0, 0.0, 1390.0), 12.0, 30.0))
    meshes.append(limb_capsule(joints["humerus_r"], joints["forearm_r"], 14.0, 34.0))
    meshes.append(limb_capsule(joints["forearm_r"], (-690.0, 0.0, 1390.0), 12.0, 30.0))
    meshes.append(limb_capsule(joints["femur_l"], joints["tibia_l"], 16.0, 38.0))
    meshes.append(limb_capsule(joints["femur_r"], joints["tibia_r"], 16.0, 38.0))
    meshes.append(limb_capsule(joints["tibia_l"], (95.0, 0.0, 150.0), 14.0, 34.0))
    meshes.append(limb_capsule(joints["tibia_r"], (-95.0, 0.0, 150.0), 14.0, 34.0))

    # organs: ellipsoidal blobs, clear of the skeleton
    meshes.append(ellipsoid((30.0, 40.0, 66.0), center=(55.0, -5.0, 1260.0), subdivisions=2))
    meshes.append(_mirror_x(ellipsoid((30.0, 40.0, 66.0), center=(55.0, -5.0, 1260.0), subdivisions=2)))
    meshes.append(ellipsoid((52.0, 40.0, 44.0), center=(48.0, 30.0, 1140.0), subdivisions=2))
    meshes.append(ellipsoid((28.0, 30.0, 36.0), center=(8.0, 42.0, 1245.0), subdivisions=2))
    meshes.append(ellipsoid((78.0, 48.0, 72.0), center=(0.0, 40.0, 1065.0), subdivisions=2))
    return meshes


def build_bone_organ_model() -> ScaledSegmentModel:
    """Assemble the scaled-segment skeleton + organ template."""
    meshes = _segment_meshes()
    assert len(meshes) == len(BONE_JOINTS)
    verts, faces, labels = [], [], []
    offset = 0
    for seg, m in enumerate(meshes):
        verts.append(m.vertices)
        faces.append(m.faces + offset)
        labels.append(np.full(m.n_vertices, seg, dtype=np.int64))
        offset += m.n_vertices
    template = Mesh(
        np.vstack(verts), np.vstack(faces), np.concatenate(labels), "phantom_bone_organ"
    )
    parents = np.array([p for _, p, _ in BONE_JOINTS])
    joints = np.array([pos for _, _, pos in BONE_JOINTS], dtype=np.float64)
    names = tuple(n for n, _, _ in BONE_JOINTS)
    tree = KinematicTree(parents, joints, names)

    k = len(BONE_JOINTS)
    weights = np.zeros((template.n_vertices, k))
    lab = template.segment_labels
    for seg in range(k):
        sel = lab == seg
        if seg in COMPOSITE_SEGMENTS:
            weights[sel, seg] = 0.5
            weights[sel, COMPOSITE_SEGMENTS[seg]] = 0.5
        else:
            weights[sel, seg] = 1.0

    landmark_joints = {
        f"b_{names[j]}": j
        for j in (0, 1, 2, 3, 4, 5, 6, 7, 8, 17, 18, 19, 20, 21, 22, 23, 24, 25)
    }
    return ScaledSegmentModel(
        template=template,
        tree=tree,
        blend_weights=weights,
        free_segments=FREE_SEGMENTS,
        landmark_joints=landmark_joints,
        segment_names={i: n for i, n in enumerate(names)},
        name="phantom_bone_organ",
    )


def bone_lbs_twin(model: ScaledSegmentModel) -> SkinnedModel:
    """LBS counterpart used for pose normalization.

    Organ vertices are weighted onto their parent vertebra joint; bone
    vertices keep the segment weights (composites stay split). The joint
    regressor is initialized from flanking-segment candidates.
    """
    k = model.tree.n_joints
    weights = model.blend_weights.copy()
    lab = model.template.segment_labels
    for seg, name in model.segment_names.items():
        if name in ORGAN_NAMES:
            sel = lab == seg
            weights[sel] = 0.0
            weights[sel, model.tree.parents[seg]] = 1.0
    joint_segments = {
        j: ((int(model.tree.parents[j]), j) if model.tree.parents[j] >= 0 else (j,))
        for j in range(k)
    }
    regressor = init_bone_joint_regressor(
        model.template, model.tree, joint_segments, seed=0
    )
    return SkinnedModel(
        template=model.template,
        tree=model.tree,
        blend_weights=weights,
        joint_regressor=regressor,
        shape_basis=np.zeros((3 * model.template.n_vertices, 0)),
        pose_basis=np.zeros((3 * model.template.n_vertices, 0)),
        landmark_joints=dict(model.landmark_joints),
        name="phantom_bone_organ_lbs",
    )
