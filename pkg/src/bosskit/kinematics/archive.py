"""Model archives: a JSON manifest plus binary tensor blobs."""

from __future__ import annotations

import json
import os

import numpy as np

from ..blobs import read_blob, write_blob
from ..errors import ParseError
from ..mesh import Mesh
from .segments import ScaledSegmentModel
from .skinning import SkinnedModel
from .tree import KinematicTree

_FORMAT = "bosskit-model"
_VERSION = 1


def _write_manifest(path, manifest: dict) -> None:
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)
    os.replace(tmp, path)


def _save_common(outdir, tensors: dict[str, np.ndarray]) -> dict[str, str]:
    os.makedirs(os.path.join(outdir, "tensors"), exist_ok=True)
    index = {}
    for name, arr in tensors.items():
        rel = os.path.join("tensors", f"{name}.bin")
        write_blob(os.path.join(outdir, rel), arr)
        index[name] = rel
    return index


def save_model_archive(outdir, model: SkinnedModel | ScaledSegmentModel) -> None:
    os.makedirs(outdir, exist_ok=True)
    tensors = {
        "template_vertices": model.template.vertices,
        "template_faces": model.template.faces,
        "rest_joints": model.tree.rest_joints,
        "parents": model.tree.parents,
        "blend_weights": model.blend_weights,
    }
    if model.template.segment_labels is not None:
        tensors["segment_labels"] = model.template.segment_labels
    if model.tree.section_of_vertex is not None:
        tensors["section_of_vertex"] = model.tree.section_of_vertex.astype(np.int64)
    meta = {
        "joint_names": list(model.tree.names),
        "landmark_joints": {k: int(v) for k, v in model.landmark_joints.items()},
        "mesh_name": model.template.name,
        "name": model.name,
    }
    if isinstance(model, SkinnedModel):
        kind = "skinned"
        tensors["joint_regressor"] = model.joint_regressor
        tensors["shape_basis"] = model.shape_basis
        tensors["pose_basis"] = model.pose_basis
        meta["section_joints"] = {str(k): list(map(int, v)) for k, v in model.section_joints.items()}
        meta["section_of_landmark"] = {k: int(v) for k, v in model.section_of_landmark.items()}
    else:
        kind = "scaled_segment"
        tensors["scales"] = model.scales
        tensors["poses"] = model.poses
        tensors["translations"] = model.translations
        meta["free_segments"] = list(map(int, model.free_segments))
        meta["segment_names"] = {str(k): v for k, v in model.segment_names.items()}
    index = _save_common(outdir, tensors)
    _write_manifest(
        os.path.join(outdir, "manifest.json"),
        {"format": _FORMAT, "version": _VERSION, "kind": kind, "tensors": index, "meta": meta},
    )


def load_model_archive(indir) -> SkinnedModel | ScaledSegmentModel:
    manifest_path = os.path.join(indir, "manifest.json")
    with open(manifest_path, "r", encoding="utf-8") as fh:
        manifest = json.load(fh)
    if manifest.get("format") != _FORMAT:
        raise ParseError(f"not a model archive: {manifest_path}")
    tensors = {name: read_blob(os.path.join(indir, rel)) for name, rel in manifest["tensors"].items()}
    meta = manifest["meta"]
    template = Mesh(
        tensors["template_vertices"],
        tensors["template_faces"],
        tensors.get("segment_labels"),
        meta.get("mesh_name", ""),
    )
    tree = KinematicTree(
        tensors["parents"],
        tensors["rest_joints"],
        tuple(meta["joint_names"]),
        tensors.get("section_of_vertex"),
    )
    landmark_joints = {k: int(v) for k, v in meta.get("landmark_joints", {}).items()}
    if manifest["kind"] == "skinned":
        return SkinnedModel(
            template=template,
            tree=tree,
            blend_weights=tensors["blend_weights"],
            joint_regressor=tensors["joint_regressor"],
            shape_basis=tensors["shape_basis"],
            pose_basis=tensors["pose_basis"],
            landmark_joints=landmark_joints,
            section_joints={int(k): tuple(v) for k, v in meta.get("section_joints", {}).items()},
            section_of_landmark={k: int(v) for k, v in meta.get("section_of_landmark", {}).items()},
            name=meta.get("name", ""),
        )
    if manifest["kind"] == "scaled_segment":
        return ScaledSegmentModel(
            template=template,
            tree=tree,
            blend_weights=tensors["blend_weights"],
            scales=tensors["scales"],
            poses=tensors["poses"],
            translations=tensors["translations"],
            free_segments=tuple(meta.get("free_segments", ())),
            landmark_joints=landmark_joints,
            segment_names={int(k): v for k, v in meta.get("segment_names", {}).items()},
            name=meta.get("name", ""),
        )
    raise ParseError(f"unknown model kind '{manifest['kind']}'")
