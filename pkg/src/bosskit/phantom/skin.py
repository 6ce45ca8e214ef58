"""Procedural skin envelope: template, sections, skinning weights, shape basis."""

from __future__ import annotations

import numpy as np

from ..kinematics import KinematicTree, SkinnedModel, fit_joint_regressor
from ..mesh import Mesh, merge_meshes
from ..mesh.primitives import capsule, ellipsoid
from .config import GIRTH_GAIN_SKIN, LIMB_GAIN, STATURE_GAIN

BODY_CENTER = np.array([0.0, 0.0, 1000.0])

SKIN_JOINTS = [
    # name, parent, position
    ("pelvis", -1, (0.0, 0.0, 1000.0)),
    ("spine", 0, (0.0, 0.0, 1120.0)),
    ("chest", 1, (0.0, 0.0, 1260.0)),
    ("neck", 2, (0.0, 0.0, 1400.0)),
    ("skull", 3, (0.0, 0.0, 1480.0)),
    ("shoulder_l", 2, (170.0, 0.0, 1390.0)),
    ("elbow_l", 5, (450.0, 0.0, 1390.0)),
    ("shoulder_r", 2, (-170.0, 0.0, 1390.0)),
    ("elbow_r", 7, (-450.0, 0.0, 1390.0)),
    ("hip_l", 0, (95.0, 0.0, 985.0)),
    ("knee_l", 9, (95.0, 0.0, 550.0)),
    ("hip_r", 0, (-95.0, 0.0, 985.0)),
    ("knee_r", 11, (-95.0, 0.0, 550.0)),
]

ARM_END_X = 700.0
LEG_END_Z = 130.0

# the 24-section catalogue; ids are stable across the toolkit
SKIN_SECTIONS = (
    "head", "neck", "chest_l", "chest_r", "waist_l", "waist_r",
    "abdomen_l", "abdomen_r", "pelvis_l", "pelvis_r",
    "upper_arm_l", "forearm_l", "hand_l", "upper_arm_r", "forearm_r", "hand_r",
    "thigh_l", "knee_l", "shin_l", "foot_l", "thigh_r", "knee_r", "shin_r", "foot_r",
)

SECTION_JOINTS = {
    0: (3, 4), 1: (3,),
    2: (2,), 3: (2,), 4: (1, 2), 5: (1, 2), 6: (1,), 7: (1,), 8: (0,), 9: (0,),
    10: (5,), 11: (6,), 12: (6,), 13: (7,), 14: (8,), 15: (8,),
    16: (9,), 17: (10,), 18: (10,), 19: (10,), 20: (11,), 21: (12,), 22: (12,), 23: (12,),
}

_ARM_SECTIONS = (10, 11, 12, 13, 14, 15)
_LEG_SECTIONS = (16, 17, 18, 19, 20, 21, 22, 23)
_SKULL_SECTIONS = (0,)

SECTIONS_BY_DROPOUT = {
    "arms": _ARM_SECTIONS,
    "legs": _LEG_SECTIONS,
    "skull": _SKULL_SECTIONS,
}


def _belly_profile(t: float) -> float:
    # gentle bulge peaking just below mid-torso
    return 1.0 + 0.12 * np.exp(-(((t - 0.42) / 0.22) ** 2))


def _build_parts():
    torso = capsule(
        (0.0, 0.0, 960.0), (0.0, 0.0, 1420.0), 150.0, 112.0,
        n_side=30, n_rings=22, cap_rings=5, radius_profile=_belly_profile,
    )
    head = ellipsoid((78.0, 88.0, 106.0), center=(0.0, 0.0, 1560.0), subdivisions=2)
    arm_l = capsule((172.0, 0.0, 1390.0), (ARM_END_X, 0.0, 1390.0), 52.0, 38.0,
                    n_side=16, n_rings=12, cap_rings=3)
    arm_r = arm_l.with_vertices(arm_l.vertices * np.array([-1.0, 1.0, 1.0]))
    arm_r = Mesh(arm_r.vertices, arm_r.faces[:, [0, 2, 1]])  # restore winding
    leg_l = capsule((95.0, 0.0, 960.0), (95.0, 0.0, LEG_END_Z), 80.0, 46.0,
                    n_side=18, n_rings=14, cap_rings=3)
    leg_r = leg_l.with_vertices(leg_l.vertices * np.array([-1.0, 1.0, 1.0]))
    leg_r = Mesh(leg_r.vertices, leg_r.faces[:, [0, 2, 1]])
    return {
        "torso": torso, "head": head,
        "arm_l": arm_l, "arm_r": arm_r, "leg_l": leg_l, "leg_r": leg_r,
    }


def _assign_sections(template: Mesh, part_of_vertex: np.ndarray, part_names) -> np.ndarray:
    v = template.vertices
    section = np.zeros(template.n_vertices, dtype=np.int64)
    name_of = dict(enumerate(part_names))
    idx = {n: i for i, n in enumerate(SKIN_SECTIONS)}
    for i in range(template.n_vertices):
        part = name_of[part_of_vertex[i]]
        x, _, z = v[i]
        side = "l" if x >= 0 else "r"
        if part == "head":
            section[i] = idx["head"]
        elif part == "torso":
            if z >= 1350.0:
                section[i] = idx["neck"]
            elif z >= 1230.0:
                section[i] = idx[f"chest_{side}"]
            elif z >= 1130.0:
                section[i] = idx[f"waist_{side}"]
            elif z >= 1030.0:
                section[i] = idx[f"abdomen_{side}"]
            else:
                section[i] = idx[f"pelvis_{side}"]
        elif part.startswith("arm"):
            ax = abs(x)
            if ax < 430.0:
                section[i] = idx[f"upper_arm_{side}"]
            elif ax < 620.0:
                section[i] = idx[f"forearm_{side}"]
            else:
                section[i] = idx[f"hand_{side}"]
        else:  # legs
            if z >= 620.0:
                section[i] = idx[f"thigh_{side}"]
            elif z >= 480.0:
                section[i] = idx[f"knee_{side}"]
            elif z >= 250.0:
                section[i] = idx[f"shin_{side}"]
            else:
                section[i] = idx[f"foot_{side}"]
    return section


def _smoothstep(x):
    x = np.clip(x, 0.0, 1.0)
    return x * x * (3.0 - 2.0 * x)


def _blend_weights(template: Mesh, part_of_vertex: np.ndarray, part_names) -> np.ndarray:
    """Smooth axial skinning weights per body part chain."""
    v = template.vertices
    n = template.n_vertices
    w = np.zeros((n, len(SKIN_JOINTS)))
    name_of = dict(enumerate(part_names))
    blend = 60.0  # transition half-width, mm

    for i in range(n):
        part = name_of[part_of_vertex[i]]
        x, _, z = v[i]
        if part == "head":
            w[i, 4] = 1.0
        elif part == "torso":
            # telescoping partition along pelvis(0) -> spine(1) -> chest(2) -> neck(3)
            s1 = _smoothstep((z - (1120.0 - blend)) / (2 * blend))
            s2 = _smoothstep((z - (1260.0 - blend)) / (2 * blend))
            s3 = _smoothstep((z - (1400.0 - blend)) / (2 * blend))
            w[i, 0] = 1.0 - s1
            w[i, 1] = s1 * (1.0 - s2)
            w[i, 2] = s1 * s2 * (1.0 - s3)
            w[i, 3] = s1 * s2 * s3
        elif part.startswith("arm"):
            sh, el = (5, 6) if x >= 0 else (7, 8)
            s = _smoothstep((abs(x) - (450.0 - blend)) / (2 * blend))
            w[i, sh] = 1.0 - s
            w[i, el] = s
        else:
            hip, knee = (9, 10) if x >= 0 else (11, 12)
            s = _smoothstep(((550.0 + blend) - z) / (2 * blend))
            w[i, hip] = 1.0 - s
            w[i, knee] = s
    total = w.sum(axis=1, keepdims=True)
    return w / total


def _shape_basis(template: Mesh, part_of_vertex, part_names, n_factors: int) -> np.ndarray:
    v = template.vertices
    n = template.n_vertices
    cols = np.zeros((3 * n, 3))
    # stature: uniform scale about body center
    cols[:, 0] = (STATURE_GAIN * (v - BODY_CENTER)).reshape(-1)
    # girth: radial belly bulge, tapered in z, torso only
    name_of = dict(enumerate(part_names))
    torso = np.array([name_of[p] == "torso" for p in part_of_vertex])
    bump = np.exp(-(((v[:, 2] - 1150.0) / 140.0) ** 2)) * torso
    radial = np.zeros_like(v)
    radial[:, 0] = v[:, 0]
    radial[:, 1] = v[:, 1]
    cols[:, 1] = (GIRTH_GAIN_SKIN * bump[:, None] * radial).reshape(-1)
    # limb length: stretch beyond shoulder/hip lines
    stretch = np.zeros_like(v)
    arm = np.array([name_of[p].startswith("arm") for p in part_of_vertex])
    leg = np.array([name_of[p].startswith("leg") for p in part_of_vertex])
    stretch[arm, 0] = np.sign(v[arm, 0]) * np.maximum(0.0, np.abs(v[arm, 0]) - 170.0)
    stretch[leg, 2] = -np.maximum(0.0, 985.0 - v[leg, 2])
    cols[:, 2] = (LIMB_GAIN * stretch).reshape(-1)
    return cols[:, :n_factors]


def build_skin_model(n_factors: int = 3) -> SkinnedModel:
    """Assemble the generative skin model (template, tree, weights, bases)."""
    parts = _build_parts()
    names = list(parts)
    template = merge_meshes([parts[n] for n in names], name="phantom_skin")
    part_of_vertex = np.concatenate(
        [np.full(parts[n].n_vertices, i, dtype=np.int64) for i, n in enumerate(names)]
    )
    sections = _assign_sections(template, part_of_vertex, names)
    joints = np.array([j for _, _, j in SKIN_JOINTS])
    parents = np.array([p for _, p, _ in SKIN_JOINTS])
    tree = KinematicTree(
        parents, joints, tuple(n for n, _, _ in SKIN_JOINTS), section_of_vertex=sections
    )
    weights = _blend_weights(template, part_of_vertex, names)
    regressor = fit_joint_regressor([template], [joints], candidates_per_joint=40)
    shape_basis = _shape_basis(template, part_of_vertex, names, n_factors)
    pose_basis = np.zeros((3 * template.n_vertices, 9 * (len(SKIN_JOINTS) - 1)))
    landmark_joints = {}
    section_of_landmark = {}
    for sec_id, sec_name in enumerate(SKIN_SECTIONS):
        lm = f"s_{sec_name}"
        landmark_joints[lm] = SECTION_JOINTS[sec_id][0]
        section_of_landmark[lm] = sec_id
    return SkinnedModel(
        template=template,
        tree=tree,
        blend_weights=weights,
        joint_regressor=regressor,
        shape_basis=shape_basis,
        pose_basis=pose_basis,
        landmark_joints=landmark_joints,
        section_joints={k: tuple(v) for k, v in SECTION_JOINTS.items()},
        section_of_landmark=section_of_landmark,
        name="phantom_skin",
    )
