"""Registration results and their directory serialization."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

from ..blobs import read_blob, write_blob
from ..mesh import Mesh, load_mesh, save_mesh


@dataclass
class RegistrationResult:
    """Fitted parameters plus template-topology vertices for one stage.

    ``vertices`` always has template topology; vertices of masked
    (unobserved) sections carry the initial-fit positions and are flagged
    by ``observed_mask``.
    """

    kind: str  # skin_rigid | skin_nonrigid | bones_rigid | bone_organ | ...
    params: dict[str, np.ndarray]
    initial_vertices: np.ndarray
    vertices: np.ndarray
    observed_mask: np.ndarray  # (N,) bool
    active_sections: tuple[int, ...] = ()
    diagnostics: list = field(default_factory=list)
    converged: bool = True
    name: str = ""

    def __post_init__(self):
        self.initial_vertices = np.asarray(self.initial_vertices, dtype=np.float64)
        self.vertices = np.asarray(self.vertices, dtype=np.float64)
        self.observed_mask = np.asarray(self.observed_mask, dtype=bool)
        if self.vertices.shape != self.initial_vertices.shape:
            raise ValueError("initial and final vertices must share topology")

    def save(self, outdir, template: Mesh | None = None) -> None:
        os.makedirs(outdir, exist_ok=True)
        write_blob(os.path.join(outdir, "vertices.bin"), self.vertices)
        write_blob(os.path.join(outdir, "initial_vertices.bin"), self.initial_vertices)
        write_blob(os.path.join(outdir, "observed_mask.bin"), self.observed_mask.astype(np.int64))
        for key in sorted(self.params):
            write_blob(os.path.join(outdir, f"param_{key}.bin"), np.asarray(self.params[key], dtype=np.float64))
        manifest = {
            "kind": self.kind,
            "name": self.name,
            "converged": bool(self.converged),
            "active_sections": list(map(int, self.active_sections)),
            "params": sorted(self.params),
        }
        tmp = os.path.join(outdir, "result.json.tmp")
        with open(tmp, "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, indent=1, sort_keys=True)
        os.replace(tmp, os.path.join(outdir, "result.json"))
        diag_tmp = os.path.join(outdir, "diagnostics.jsonl.tmp")
        with open(diag_tmp, "w", encoding="utf-8") as fh:
            for rec in self.diagnostics:
                fh.write(json.dumps(rec, sort_keys=True) + "\n")
        os.replace(diag_tmp, os.path.join(outdir, "diagnostics.jsonl"))
        if template is not None:
            save_mesh(template.with_vertices(self.vertices), os.path.join(outdir, "fitted.ply"))

    @classmethod
    def load(cls, indir) -> "RegistrationResult":
        with open(os.path.join(indir, "result.json"), "r", encoding="utf-8") as fh:
            manifest = json.load(fh)
        params = {
            key: read_blob(os.path.join(indir, f"param_{key}.bin"))
            for key in manifest["params"]
        }
        diagnostics = []
        diag_path = os.path.join(indir, "diagnostics.jsonl")
        if os.path.exists(diag_path):
            with open(diag_path, "r", encoding="utf-8") as fh:
                diagnostics = [json.loads(line) for line in fh if line.strip()]
        return cls(
            kind=manifest["kind"],
            params=params,
            initial_vertices=read_blob(os.path.join(indir, "initial_vertices.bin")),
            vertices=read_blob(os.path.join(indir, "vertices.bin")),
            observed_mask=read_blob(os.path.join(indir, "observed_mask.bin")).astype(bool),
            active_sections=tuple(manifest.get("active_sections", ())),
            diagnostics=diagnostics,
            converged=manifest.get("converged", True),
            name=manifest.get("name", ""),
        )
