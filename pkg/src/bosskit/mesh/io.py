"""Mesh and landmark file I/O: OBJ (ASCII), PLY (ASCII / binary LE), landmark JSON.

Round trips are lossless: coordinates are written as doubles (shortest
repr in text formats, raw float64 in binary PLY), segment labels ride in
a custom per-vertex `segment` int property, landmarks in a sidecar JSON.
"""

from __future__ import annotations

import json
import os
import struct
from dataclasses import dataclass, field

import numpy as np

from ..errors import ParseError
from .core import Mesh


@dataclass
class LandmarkEntry:
    position: np.ndarray  # (3,)
    vertex: int | None = None

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=np.float64).reshape(3)
        if self.vertex is not None:
            self.vertex = int(self.vertex)


@dataclass
class LandmarkSet:
    """Named landmark points, optionally bound to mesh vertex indices."""

    entries: dict[str, LandmarkEntry] = field(default_factory=dict)

    def __len__(self):
        return len(self.entries)

    def names(self) -> list[str]:
        return sorted(self.entries)

    def positions(self, names) -> np.ndarray:
        return np.array([self.entries[n].position for n in names], dtype=np.float64).reshape(-1, 3)

    def subset(self, names) -> "LandmarkSet":
        return LandmarkSet({n: self.entries[n] for n in names if n in self.entries})

    def present_sections(self, section_of_landmark: dict[str, int]) -> set[int]:
        """Sections witnessed by at least one present landmark."""
        return {section_of_landmark[n] for n in self.entries if n in section_of_landmark}

    def validate_bound_indices(self, mesh: Mesh):
        for name, e in self.entries.items():
            if e.vertex is not None and not (0 <= e.vertex < mesh.n_vertices):
                raise ValueError(f"landmark '{name}' binds vertex {e.vertex} outside mesh")

    def to_dict(self) -> dict:
        return {
            "landmarks": {
                name: {
                    "pos": [float(x) for x in e.position],
                    "vertex": e.vertex,
                }
                for name, e in sorted(self.entries.items())
            }
        }

    @classmethod
    def from_dict(cls, data: dict) -> "LandmarkSet":
        entries = {}
        for name, rec in data.get("landmarks", {}).items():
            entries[name] = LandmarkEntry(np.asarray(rec["pos"], dtype=np.float64), rec.get("vertex"))
        return cls(entries)


def save_landmarks(landmarks: LandmarkSet, path) -> None:
    _atomic_write_text(path, json.dumps(landmarks.to_dict(), indent=1, sort_keys=True))


def load_landmarks(path) -> LandmarkSet:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"bad landmark JSON: {exc.msg}", line=exc.lineno) from exc
    return LandmarkSet.from_dict(data)


def _atomic_write_text(path, text: str) -> None:
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _atomic_write_bytes(path, blob: bytes) -> None:
    tmp = f"{path}.tmp"
    with open(tmp, "wb") as fh:
        fh.write(blob)
    os.replace(tmp, path)


# ---------------------------------------------------------------------------
# OBJ

def _save_obj(mesh: Mesh, path) -> None:
    lines = [f"# {mesh.name}" if mesh.name else "#"]
    for v in mesh.vertices:
        lines.append(f"v {v[0]:.17g} {v[1]:.17g} {v[2]:.17g}")
    for f in mesh.faces:
        lines.append(f"f {f[0] + 1} {f[1] + 1} {f[2] + 1}")
    _atomic_write_text(path, "\n".join(lines) + "\n")


def _load_obj(path) -> Mesh:
    verts, faces = [], []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            tag, *rest = line.split()
            if tag == "v":
                if len(rest) < 3:
                    raise ParseError("vertex needs 3 coordinates", line=lineno)
                try:
                    verts.append([float(x) for x in rest[:3]])
                except ValueError as exc:
                    raise ParseError(f"bad vertex coordinate: {exc}", line=lineno) from exc
            elif tag == "f":
                if len(rest) < 3:
                    raise ParseError("face needs 3 indices", line=lineno)
                try:
                    idx = [int(tok.split("/")[0]) - 1 for tok in rest[:3]]
                except ValueError as exc:
                    raise ParseError(f"bad face index: {exc}", line=lineno) from exc
                faces.append(idx)
            # other OBJ statements (vn, vt, o, g, usemtl, ...) are skipped
    if not verts:
        raise ParseError("no vertices found", line=1)
    try:
        return Mesh(np.asarray(verts), np.asarray(faces, dtype=np.int64).reshape(-1, 3))
    except ValueError as exc:
        raise ParseError(str(exc), line=1) from exc


# ---------------------------------------------------------------------------
# PLY

_PLY_DTYPES = {
    "char": "i1", "int8": "i1", "uchar": "u1", "uint8": "u1",
    "short": "i2", "int16": "i2", "ushort": "u2", "uint16": "u2",
    "int": "i4", "int32": "i4", "uint": "u4", "uint32": "u4",
    "float": "f4", "float32": "f4", "double": "f8", "float64": "f8",
}


def _save_ply(mesh: Mesh, path, binary: bool) -> None:
    has_seg = mesh.segment_labels is not None
    header = ["ply"]
    header.append("format binary_little_endian 1.0" if binary else "format ascii 1.0")
    if mesh.name:
        header.append(f"comment {mesh.name}")
    header.append(f"element vertex {mesh.n_vertices}")
    header += ["property double x", "property double y", "property double z"]
    if has_seg:
        header.append("property int segment")
    header.append(f"element face {mesh.n_faces}")
    header.append("property list uchar int vertex_indices")
    header.append("end_header")

    if binary:
        blob = bytearray(("\n".join(header) + "\n").encode("ascii"))
        if has_seg:
            vert = np.empty(mesh.n_vertices, dtype=[("xyz", "<f8", 3), ("seg", "<i4")])
            vert["xyz"] = mesh.vertices
            vert["seg"] = mesh.segment_labels
        else:
            vert = np.empty(mesh.n_vertices, dtype=[("xyz", "<f8", 3)])
            vert["xyz"] = mesh.vertices
        blob += vert.tobytes()
        face = np.empty(mesh.n_faces, dtype=[("n", "u1"), ("idx", "<i4", 3)])
        face["n"] = 3
        face["idx"] = mesh.faces
        blob += face.tobytes()
        _atomic_write_bytes(path, bytes(blob))
    else:
        lines = header
        for i in range(mesh.n_vertices):
            v = mesh.vertices[i]
            row = f"{v[0]:.17g} {v[1]:.17g} {v[2]:.17g}"
            if has_seg:
                row += f" {int(mesh.segment_labels[i])}"
            lines.append(row)
        for f in mesh.faces:
            lines.append(f"3 {f[0]} {f[1]} {f[2]}")
        _atomic_write_text(path, "\n".join(lines) + "\n")


def _parse_ply_header(blob: bytes):
    end = blob.find(b"end_header\n")
    if end < 0:
        raise ParseError("missing end_header", offset=len(blob))
    header_text = blob[:end].decode("ascii", errors="replace")
    body = end + len(b"end_header\n")
    fmt = None
    elements = []  # (name, count, [(prop_name, dtype, is_list, count_dtype)])
    comment = ""
    for lineno, line in enumerate(header_text.splitlines(), start=1):
        tokens = line.split()
        if not tokens:
            continue
        if tokens[0] == "ply":
            continue
        if tokens[0] == "format":
            fmt = tokens[1]
        elif tokens[0] == "comment":
            if not comment:
                comment = line.partition("comment ")[2]
        elif tokens[0] == "element":
            elements.append((tokens[1], int(tokens[2]), []))
        elif tokens[0] == "property":
            if not elements:
                raise ParseError("property before element", line=lineno)
            if tokens[1] == "list":
                elements[-1][2].append((tokens[4], _PLY_DTYPES[tokens[3]], True, _PLY_DTYPES[tokens[2]]))
            else:
                elements[-1][2].append((tokens[2], _PLY_DTYPES[tokens[1]], False, None))
    if fmt not in ("ascii", "binary_little_endian"):
        raise ParseError(f"unsupported PLY format '{fmt}'", line=2)
    return fmt, comment, elements, body


def _load_ply(path) -> Mesh:
    with open(path, "rb") as fh:
        blob = fh.read()
    fmt, comment, elements, offset = _parse_ply_header(blob)

    verts = faces = segments = None
    if fmt == "ascii":
        text_lines = blob[offset:].decode("ascii", errors="replace").splitlines()
        cursor = 0
        for name, count, props in elements:
            if cursor + count > len(text_lines):
                raise ParseError(f"truncated element '{name}'", line=len(text_lines) + 1)
            rows = text_lines[cursor : cursor + count]
            cursor += count
            if name == "vertex":
                cols = {p[0]: i for i, p in enumerate(props)}
                data = []
                for lineno, row in enumerate(rows):
                    toks = row.split()
                    if len(toks) < len(props):
                        raise ParseError("short vertex row", line=lineno + 1)
                    data.append([float(t) for t in toks])
                arr = np.asarray(data, dtype=np.float64).reshape(count, -1)
                verts = arr[:, [cols["x"], cols["y"], cols["z"]]]
                if "segment" in cols:
                    segments = arr[:, cols["segment"]].astype(np.int64)
            elif name == "face":
                out = []
                for lineno, row in enumerate(rows):
                    toks = row.split()
                    if not toks or int(toks[0]) != 3 or len(toks) < 4:
                        raise ParseError("only triangle faces supported", line=lineno + 1)
                    out.append([int(toks[1]), int(toks[2]), int(toks[3])])
                faces = np.asarray(out, dtype=np.int64).reshape(-1, 3)
    else:
        pos = offset
        for name, count, props in elements:
            lists = [p for p in props if p[2]]
            if not lists:
                dtype = np.dtype([(p[0], "<" + p[1]) for p in props])
                end = pos + dtype.itemsize * count
                if end > len(blob):
                    raise ParseError(f"truncated element '{name}'", offset=len(blob))
                arr = np.frombuffer(blob[pos:end], dtype=dtype)
                pos = end
                if name == "vertex":
                    verts = np.stack(
                        [arr["x"], arr["y"], arr["z"]], axis=1
                    ).astype(np.float64)
                    if "segment" in dtype.names:
                        segments = arr["segment"].astype(np.int64)
            else:
                if name != "face" or len(props) != 1:
                    raise ParseError(f"unsupported list layout in '{name}'", offset=pos)
                cnt_dt = np.dtype("<" + props[0][3])
                idx_dt = np.dtype("<" + props[0][1])
                rows = []
                for _ in range(count):
                    if pos + cnt_dt.itemsize > len(blob):
                        raise ParseError("truncated face element", offset=len(blob))
                    n = int(np.frombuffer(blob, dtype=cnt_dt, count=1, offset=pos)[0])
                    pos += cnt_dt.itemsize
                    if n != 3:
                        raise ParseError("only triangle faces supported", offset=pos)
                    end = pos + idx_dt.itemsize * n
                    if end > len(blob):
                        raise ParseError("truncated face element", offset=len(blob))
                    rows.append(np.frombuffer(blob, dtype=idx_dt, count=n, offset=pos))
                    pos = end
                faces = np.asarray(rows, dtype=np.int64).reshape(-1, 3)
    if verts is None or faces is None:
        raise ParseError("PLY missing vertex or face element", offset=offset)
    try:
        return Mesh(verts, faces, segments, comment)
    except ValueError as exc:
        raise ParseError(str(exc), offset=offset) from exc


# ---------------------------------------------------------------------------
# format dispatch

def landmark_sidecar_path(mesh_path) -> str:
    base, _ = os.path.splitext(str(mesh_path))
    return base + ".landmarks.json"


def save_mesh(mesh: Mesh, path, landmarks: LandmarkSet | None = None, binary: bool = True) -> None:
    """Write a mesh by extension (.obj / .ply) plus optional landmark sidecar."""
    ext = os.path.splitext(str(path))[1].lower()
    if ext == ".obj":
        _save_obj(mesh, path)
    elif ext == ".ply":
        _save_ply(mesh, path, binary=binary)
    else:
        raise ValueError(f"unsupported mesh format '{ext}'")
    if landmarks is not None:
        save_landmarks(landmarks, landmark_sidecar_path(path))


def load_mesh(path, with_landmarks: bool = False):
    """Read a mesh; optionally return (mesh, landmarks-or-None)."""
    ext = os.path.splitext(str(path))[1].lower()
    if ext == ".obj":
        mesh = _load_obj(path)
    elif ext == ".ply":
        mesh = _load_ply(path)
    else:
        raise ValueError(f"unsupported mesh format '{ext}'")
    if not with_landmarks:
        return mesh
    side = landmark_sidecar_path(path)
    lms = load_landmarks(side) if os.path.exists(side) else None
    return mesh, lms
