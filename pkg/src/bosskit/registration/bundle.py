"""Scan bundles: the on-disk unit of one subject's surface data."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

from ..mesh import (
    LandmarkSet,
    Mesh,
    load_landmarks,
    load_mesh,
    save_landmarks,
    save_mesh,
)


@dataclass
class ScanBundle:
    """One subject's extracted surfaces, landmarks and optional metadata.

    metadata keys: height_mm, weight_kg, sex (0/1); any may be absent.
    """

    skin: Mesh | None = None
    bones: Mesh | None = None
    organs: dict[str, Mesh] = field(default_factory=dict)
    landmarks: LandmarkSet = field(default_factory=LandmarkSet)
    metadata: dict | None = None
    name: str = ""

    def save(self, outdir) -> None:
        os.makedirs(outdir, exist_ok=True)
        if self.skin is not None:
            save_mesh(self.skin, os.path.join(outdir, "skin.ply"))
        if self.bones is not None:
            save_mesh(self.bones, os.path.join(outdir, "bones.ply"))
        for key in sorted(self.organs):
            save_mesh(self.organs[key], os.path.join(outdir, f"organ_{key}.ply"))
        save_landmarks(self.landmarks, os.path.join(outdir, "landmarks.json"))
        if self.metadata is not None:
            tmp = os.path.join(outdir, "metadata.json.tmp")
            with open(tmp, "w", encoding="utf-8") as fh:
                json.dump(self.metadata, fh, indent=1, sort_keys=True)
            os.replace(tmp, os.path.join(outdir, "metadata.json"))

    @classmethod
    def load(cls, indir) -> "ScanBundle":
        bundle = cls(name=os.path.basename(os.path.normpath(indir)))
        skin_path = os.path.join(indir, "skin.ply")
        if os.path.exists(skin_path):
            bundle.skin = load_mesh(skin_path)
        bone_path = os.path.join(indir, "bones.ply")
        if os.path.exists(bone_path):
            bundle.bones = load_mesh(bone_path)
        for fname in sorted(os.listdir(indir)):
            if fname.startswith("organ_") and fname.endswith(".ply"):
                bundle.organs[fname[len("organ_") : -len(".ply")]] = load_mesh(
                    os.path.join(indir, fname)
                )
        lm_path = os.path.join(indir, "landmarks.json")
        if os.path.exists(lm_path):
            bundle.landmarks = load_landmarks(lm_path)
        meta_path = os.path.join(indir, "metadata.json")
        if os.path.exists(meta_path):
            with open(meta_path, "r", encoding="utf-8") as fh:
                bundle.metadata = json.load(fh)
        return bundle
