"""Phantom generation: ground-truth subjects emitted as scan bundles."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..kinematics import (
    Pose,
    ScaledSegmentModel,
    SkinnedModel,
    model_joints,
    morph_vertices,
    pose_scaled_segment_vertices,
    scaled_segment_joints,
)
from ..mesh import LandmarkEntry, LandmarkSet, Mesh, mesh_volume
from ..registration.bundle import ScanBundle
from .bones import (
    LIMB_AXIS,
    LIMB_SEGMENTS_BY_DROPOUT,
    N_BONE_SEGMENTS,
    ORGAN_NAMES,
    bone_lbs_twin,
    build_bone_organ_model,
)
from .config import (
    GIRTH_GAIN_ORGAN,
    LIMB_GAIN,
    STATURE_GAIN,
    PhantomFamilyConfig,
    PhantomSpec,
)
from .skin import SECTIONS_BY_DROPOUT, SKIN_SECTIONS, build_skin_model

# skin joint -> bone joint sharing the same articulation draw
SHARED_JOINTS = {
    4: 8,  # skull
    5: 18, 6: 19, 7: 20, 8: 21,  # shoulders / elbows
    9: 22, 10: 24, 11: 23, 12: 25,  # hips / knees
}


@dataclass
class PhantomFamily:
    """Templates and generative models shared by a cohort."""

    config: PhantomFamilyConfig
    skin_model: SkinnedModel
    bone_model: ScaledSegmentModel
    bone_lbs: SkinnedModel

    @property
    def n_factors(self) -> int:
        return self.config.n_factors


_FAMILY_CACHE: dict[PhantomFamilyConfig, PhantomFamily] = {}


def get_family(config: PhantomFamilyConfig | None = None) -> PhantomFamily:
    config = config or PhantomFamilyConfig()
    if config not in _FAMILY_CACHE:
        skin = build_skin_model(config.n_factors)
        bones = build_bone_organ_model()
        _FAMILY_CACHE[config] = PhantomFamily(config, skin, bones, bone_lbs_twin(bones))
    return _FAMILY_CACHE[config]


def bone_scales_for_shape(family: PhantomFamily, shape: np.ndarray) -> np.ndarray:
    """Per-segment scales realizing the generative shape factors."""
    model = family.bone_model
    k = model.tree.n_joints
    shape = np.asarray(shape, dtype=np.float64)
    scales = np.full((k, 3), 1.0 + STATURE_GAIN * shape[0])
    if family.n_factors >= 2:
        for seg, name in model.segment_names.items():
            if name in ORGAN_NAMES:
                scales[seg] *= 1.0 + GIRTH_GAIN_ORGAN * shape[1]
    if family.n_factors >= 3:
        for seg, axis in LIMB_AXIS.items():
            scales[seg, axis] *= 1.0 + LIMB_GAIN * shape[2]
    return scales


@dataclass
class PhantomTruth:
    """Ground truth paired with one generated scan bundle."""

    shape: np.ndarray
    rest_skin: Mesh
    rest_bone_organ: Mesh
    skin_pose: Pose
    bone_scales: np.ndarray
    bone_poses: np.ndarray
    bone_translations: np.ndarray
    skin_joints: np.ndarray  # posed
    bone_joints: np.ndarray  # posed
    landmarks: LandmarkSet  # full catalogue, before dropout
    observed_sections: tuple[int, ...]
    observed_bone_segments: tuple[int, ...]
    skin_vertices_posed: np.ndarray  # noiseless, full topology
    bone_organ_vertices_posed: np.ndarray


def _sample_poses(spec: PhantomSpec, family: PhantomFamily, rng: np.random.Generator):
    skin_k = family.skin_model.tree.n_joints
    bone_k = family.bone_model.tree.n_joints
    theta_s = np.zeros((skin_k, 3))
    theta_b = np.zeros((bone_k, 3))

    root_rot = rng.normal(scale=0.02, size=3)
    trans = rng.normal(scale=20.0, size=3)
    theta_s[0] = root_rot
    theta_b[0] = root_rot

    for j in (1, 2, 3):  # skin torso chain: supine-biased, mostly flat
        theta_s[j] = rng.normal(scale=spec.torso_flex_scale, size=3)
    for j in range(1, 8):  # vertebrae wiggle even less
        theta_b[j] = rng.normal(scale=spec.torso_flex_scale / 2.0, size=3)

    shared = {}
    for skin_j in (4, 5, 6, 7, 8, 9, 10, 11, 12):
        lim = 0.02 if skin_j == 4 else spec.limb_angle_limit
        shared[skin_j] = rng.uniform(-lim, lim, size=3)
        theta_s[skin_j] = shared[skin_j]
    for skin_j, bone_j in SHARED_JOINTS.items():
        theta_b[bone_j] = shared[skin_j]

    tb = np.tile(trans, (bone_k, 1))  # global translation as uniform offsets
    return Pose(theta_s, trans), theta_b, tb


def _dropped_sections(dropout) -> set[int]:
    out: set[int] = set()
    for flag in dropout:
        out.update(SECTIONS_BY_DROPOUT[flag])
    return out


def _dropped_bone_segments(dropout) -> set[int]:
    out: set[int] = set()
    for flag in dropout:
        out.update(LIMB_SEGMENTS_BY_DROPOUT.get(flag, ()))
    return out


def generate_phantom(spec: PhantomSpec) -> tuple[ScanBundle, PhantomTruth]:
    """Build one subject: scans + landmarks + metadata, with ground truth."""
    family = get_family(spec.family)
    skin_model = family.skin_model
    bone_model = family.bone_model
    rng = np.random.default_rng(spec.seed)

    beta = spec.shape[: family.n_factors]
    skin_pose, theta_b, tb = _sample_poses(spec, family, rng)
    scales = bone_scales_for_shape(family, spec.shape)

    skin_posed = morph_vertices(skin_model, beta, skin_pose.theta, skin_pose.trans).numpy()
    bo_posed = pose_scaled_segment_vertices(bone_model, scales, theta_b, tb).numpy()
    skin_joints = model_joints(skin_model, beta, skin_pose.theta, skin_pose.trans).numpy()
    bone_joints = (scaled_segment_joints(bone_model, scales, theta_b) + 0.0).numpy() + tb

    rest_skin = skin_model.template.with_vertices(
        morph_vertices(skin_model, beta, np.zeros_like(skin_pose.theta)).numpy()
    )
    rest_bo = bone_model.template.with_vertices(
        pose_scaled_segment_vertices(
            bone_model, scales, np.zeros_like(theta_b), np.zeros_like(tb)
        ).numpy()
    )

    entries = {}
    for name, joint in skin_model.landmark_joints.items():
        entries[name] = LandmarkEntry(skin_joints[joint], None)
    for name, joint in bone_model.landmark_joints.items():
        entries[name] = LandmarkEntry(bone_joints[joint], None)
    all_landmarks = LandmarkSet(entries)

    dropped_secs = _dropped_sections(spec.dropout)
    dropped_segs = _dropped_bone_segments(spec.dropout)
    observed_sections = tuple(s for s in range(len(SKIN_SECTIONS)) if s not in dropped_secs)
    observed_segments = tuple(
        s for s in range(bone_model.tree.n_joints) if s not in dropped_segs
    )

    # skin scan: observed sections only
    skin_mask = ~np.isin(skin_model.tree.section_of_vertex, sorted(dropped_secs))
    skin_scan, _ = skin_model.template.with_vertices(skin_posed).submesh(skin_mask)
    skin_scan = Mesh(skin_scan.vertices, skin_scan.faces, None, f"skin_{spec.seed}")

    # bone scan: bone segments only, labels preserved
    bone_labels = bone_model.template.segment_labels
    bone_mask = (bone_labels < N_BONE_SEGMENTS) & ~np.isin(bone_labels, sorted(dropped_segs))
    bone_scan, _ = bone_model.template.with_vertices(bo_posed).submesh(bone_mask)
    bone_scan = Mesh(
        bone_scan.vertices, bone_scan.faces, bone_scan.segment_labels, f"bones_{spec.seed}"
    )

    organs = {}
    for seg, name in bone_model.segment_names.items():
        if name in ORGAN_NAMES:
            organ, _ = bone_model.template.with_vertices(bo_posed).submesh(bone_labels == seg)
            organs[name] = Mesh(organ.vertices, organ.faces, None, name)

    if spec.noise_mm > 0:
        skin_scan = skin_scan.with_vertices(
            skin_scan.vertices + rng.normal(scale=spec.noise_mm, size=skin_scan.vertices.shape)
        )
        bone_scan = bone_scan.with_vertices(
            bone_scan.vertices + rng.normal(scale=spec.noise_mm, size=bone_scan.vertices.shape)
        )
        organs = {
            k: m.with_vertices(m.vertices + rng.normal(scale=spec.noise_mm, size=m.vertices.shape))
            for k, m in organs.items()
        }

    kept_names = [
        n for n in all_landmarks.entries
        if (
            n in skin_model.landmark_joints
            and skin_model.section_of_landmark[n] not in dropped_secs
        )
        or (n in bone_model.landmark_joints and bone_model.landmark_joints[n] not in dropped_segs)
    ]
    scan_landmarks = all_landmarks.subset(kept_names)

    height = float(rest_skin.vertices[:, 2].max() - rest_skin.vertices[:, 2].min())
    weight = (mesh_volume(rest_skin) + 4.937) / 1.015
    metadata = {
        "height_mm": height,
        "weight_kg": float(weight),
        "sex": int(rng.integers(0, 2)),
    }

    bundle = ScanBundle(
        skin=skin_scan,
        bones=bone_scan,
        organs=organs,
        landmarks=scan_landmarks,
        metadata=metadata,
        name=f"phantom_{spec.seed:05d}",
    )
    truth = PhantomTruth(
        shape=spec.shape.copy(),
        rest_skin=rest_skin,
        rest_bone_organ=rest_bo,
        skin_pose=skin_pose,
        bone_scales=scales,
        bone_poses=theta_b,
        bone_translations=tb,
        skin_joints=skin_joints,
        bone_joints=bone_joints,
        landmarks=all_landmarks,
        observed_sections=observed_sections,
        observed_bone_segments=observed_segments,
        skin_vertices_posed=skin_posed,
        bone_organ_vertices_posed=bo_posed,
    )
    return bundle, truth


_DROPOUT_CYCLE = (("arms",), ("legs",), ("arms", "skull"), ("legs", "skull"))


def generate_cohort(
    n: int,
    seed: int = 0,
    dropout_fraction: float = 0.0,
    noise_mm: float = 0.0,
    family: PhantomFamilyConfig | None = None,
) -> list[tuple[ScanBundle, PhantomTruth]]:
    """Independent subjects with seeded shape/pose draws.

    The declared fraction of subjects is partial-body, cycling through
    arm/leg/skull dropout patterns deterministically.
    """
    if n < 2:
        raise ValueError("cohort needs at least 2 subjects")
    family = family or PhantomFamilyConfig()
    master = np.random.default_rng(seed)
    child_seeds = master.integers(0, 2**31 - 1, size=n)
    n_partial = int(round(n * dropout_fraction))
    out = []
    for i in range(n):
        rng = np.random.default_rng(child_seeds[i])
        shape = np.zeros(3)
        draws = np.clip(rng.normal(size=family.n_factors), -2.2, 2.2)
        shape[: family.n_factors] = draws
        dropout = _DROPOUT_CYCLE[i % len(_DROPOUT_CYCLE)] if i < n_partial else ()
        spec = PhantomSpec(
            seed=int(child_seeds[i]),
            shape=shape,
            dropout=dropout,
            noise_mm=noise_mm,
            family=family,
        )
        out.append(generate_phantom(spec))
    return out


def true_factor_directions(family: PhantomFamily, eps: float = 1e-3) -> np.ndarray:
    """Rest-pose derivative of (skin, bone-organ) coordinates per factor.

    Columns span the generative subspace that shape-space learning should
    recover.
    """
    skin_n = family.skin_model.n_vertices
    bo_n = family.bone_model.template.n_vertices
    cols = []
    for f in range(family.n_factors):
        beta = np.zeros(family.n_factors)
        skin_col = family.skin_model.shape_basis[:, f]
        plus = np.zeros(3)
        plus[f] = eps
        minus = -plus
        bo_plus = pose_scaled_segment_vertices(
            family.bone_model, bone_scales_for_shape(family, plus)
        ).numpy()
        bo_minus = pose_scaled_segment_vertices(
            family.bone_model, bone_scales_for_shape(family, minus)
        ).numpy()
        bo_col = ((bo_plus - bo_minus) / (2 * eps)).reshape(-1)
        cols.append(np.concatenate([skin_col, bo_col]))
    return np.stack(cols, axis=1)
