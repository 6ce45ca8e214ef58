"""Joint-regressor learning: NNLS fits over sparse candidate vertex sets."""

from __future__ import annotations

import numpy as np
from scipy.optimize import nnls
from scipy.spatial import cKDTree

from ..errors import InsufficientCandidatesError, RankDeficientError
from ..mesh import Mesh, compute_vertex_normals
from .tree import KinematicTree

# weight of the sum-to-one soft constraint row, on the scale of mm coordinates
_SUM_ROW_WEIGHT = 1000.0


def _solve_row(coords: np.ndarray, targets: np.ndarray, nonneg: bool) -> np.ndarray:
    """Weights over candidate vertices reproducing the stacked joint targets.

    coords: (n_obs, C, 3) candidate positions per observation;
    targets: (n_obs, 3). A soft sum-to-one row anchors the scale before the
    final exact renormalization, and a tiny distance-weighted ridge breaks
    ties toward nearby vertices (exact-vertex joints come back one-hot).
    """
    n_obs, n_cand = coords.shape[0], coords.shape[1]
    dist = np.linalg.norm(coords[0] - targets[0], axis=1)
    a = np.zeros((3 * n_obs + 1 + n_cand, n_cand))
    b = np.zeros(3 * n_obs + 1 + n_cand)
    for i in range(n_obs):
        a[3 * i : 3 * i + 3] = coords[i].T
        b[3 * i : 3 * i + 3] = targets[i]
    a[3 * n_obs] = _SUM_ROW_WEIGHT
    b[3 * n_obs] = _SUM_ROW_WEIGHT
    a[3 * n_obs + 1 :] = np.diag(1e-3 * dist)
    if nonneg:
        w, _ = nnls(a, b)
    else:
        w, *_ = np.linalg.lstsq(a, b, rcond=None)
    w = np.abs(w)
    total = w.sum()
    if total <= 0:
        raise RankDeficientError("regressor row collapsed to zero")
    return w / total


def fit_joint_regressor(
    meshes: list[Mesh],
    joints: list[np.ndarray],
    candidates_per_joint: int = 40,
) -> np.ndarray:
    """Row-stochastic joint regressor fitted on rest-pose meshes.

    Candidate vertices are the nearest ones to each joint on the first
    mesh; the NNLS fit stacks all (mesh, joints) observations. Raises
    RankDeficientError below three candidates per joint.
    """
    if not meshes or len(meshes) != len(joints):
        raise ValueError("need matching mesh and joint lists")
    base = meshes[0]
    joint_sets = [np.asarray(j, dtype=np.float64).reshape(-1, 3) for j in joints]
    n_joints = len(joint_sets[0])
    tree = cKDTree(base.vertices)
    n_cand = min(candidates_per_joint, base.n_vertices)
    if n_cand < 3:
        raise RankDeficientError(f"{n_cand} candidate vertices per joint; need >= 3")
    regressor = np.zeros((n_joints, base.n_vertices))
    for k in range(n_joints):
        _, cand = tree.query(joint_sets[0][k], k=n_cand)
        cand = np.atleast_1d(cand)
        coords = np.stack([m.vertices[cand] for m in meshes])
        targets = np.stack([js[k] for js in joint_sets])
        regressor[k, cand] = _solve_row(coords, targets, nonneg=True)
    return regressor


def init_bone_joint_regressor(
    template: Mesh,
    tree: KinematicTree,
    joint_segments: dict[int, tuple[int, int]],
    seed: int = 0,
    per_segment: int = 50,
    facing_cos: float = 0.0,
) -> np.ndarray:
    """Seeded least-squares joint regressor for the skeleton template.

    For each joint, samples up to ``per_segment`` of the closest vertices
    from each of its two flanking segments, keeping only vertices whose
    normals approximately face the vertex-to-joint direction; fits least
    squares and renormalizes rows as |w| / ||w||_1.
    """
    if template.segment_labels is None:
        raise ValueError("bone template needs segment labels")
    normals = compute_vertex_normals(template)
    rng = np.random.default_rng(seed)
    labels = template.segment_labels
    regressor = np.zeros((tree.n_joints, template.n_vertices))
    def collect(k, segs, cos_min):
        chosen: list[np.ndarray] = []
        for seg in segs:
            idx = np.nonzero(labels == seg)[0]
            if len(idx) == 0:
                continue
            to_joint = tree.rest_joints[k] - template.vertices[idx]
            dist = np.linalg.norm(to_joint, axis=1)
            ok = dist > 1e-12
            facing = np.zeros(len(idx), dtype=bool)
            facing[ok] = (
                np.einsum("ij,ij->i", normals[idx[ok]], to_joint[ok] / dist[ok, None])
                > cos_min
            )
            idx, dist = idx[facing], dist[facing]
            if len(idx) == 0:
                continue
            order = np.argsort(dist, kind="stable")
            pool = idx[order[: 4 * per_segment]]
            take = min(per_segment, len(pool))
            pick = rng.choice(len(pool), size=take, replace=False)
            chosen.append(pool[np.sort(pick)])
        return np.unique(np.concatenate(chosen)) if chosen else np.zeros(0, np.int64)

    for k in range(tree.n_joints):
        segs = joint_segments.get(k)
        if segs is None:
            segs = (k,)
        cand = collect(k, segs, facing_cos)
        if len(cand) < 3:
            # joints buried inside a single segment (roots) see no facing
            # normals; fall back to plain nearest vertices there
            cand = collect(k, segs, -1.0)
        if len(cand) < 3:
            raise InsufficientCandidatesError(
                f"joint {k} ('{tree.names[k]}') has {len(cand)} usable candidates"
            )
        regressor[k, cand] = _solve_row(
            template.vertices[cand][None], tree.rest_joints[k][None], nonneg=False
        )
    return regressor


def fit_surface_joint_mapping(
    surfaces: list[np.ndarray],
    joints: list[np.ndarray],
    candidates_per_joint: int = 60,
) -> np.ndarray:
    """Row-stochastic map from registered surface vertices to skeleton joints.

    Trained on subjects where the joints were observed; used to anchor
    limb joints when a scan misses the limbs entirely.
    """
    surfaces = [np.asarray(s, dtype=np.float64) for s in surfaces]
    joint_sets = [np.asarray(j, dtype=np.float64).reshape(-1, 3) for j in joints]
    n_joints = joint_sets[0].shape[0]
    mean_surface = np.mean(surfaces, axis=0)
    mean_joints = np.mean(joint_sets, axis=0)
    tree = cKDTree(mean_surface)
    n_cand = min(candidates_per_joint, len(mean_surface))
    if n_cand < 3:
        raise RankDeficientError("too few surface candidates")
    mapping = np.zeros((n_joints, len(mean_surface)))
    for k in range(n_joints):
        _, cand = tree.query(mean_joints[k], k=n_cand)
        cand = np.atleast_1d(cand)
        coords = np.stack([s[cand] for s in surfaces])
        targets = np.stack([js[k] for js in joint_sets])
        mapping[k, cand] = _solve_row(coords, targets, nonneg=True)
    return mapping
