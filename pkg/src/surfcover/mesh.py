"""Triangle meshes, surface sampling, and candidate sensor grids."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

FORMAT_VERSION = 1

MIN_TRIANGLE_AREA = 1e-12  # m^2; faces below this are rejected as degenerate


class MeshError(ValueError):
    pass


class EmptySampleError(ValueError):
    """Raised when sampling + filtering leaves no usable target surface."""


def _as_points(a) -> np.ndarray:
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise MeshError(f"expected (n, 3) point array, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class TriangleMesh:
    """Indexed triangle soup bounding the workspace."""

    vertices: np.ndarray  # (V, 3) float64, meters
    triangles: np.ndarray  # (T, 3) int64 vertex indices
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "vertices", _as_points(self.vertices))
        tris = np.asarray(self.triangles, dtype=np.int64)
        if tris.ndim != 2 or tris.shape[1] != 3:
            raise MeshError(f"expected (t, 3) triangle array, got shape {tris.shape}")
        object.__setattr__(self, "triangles", tris)
        if not np.isfinite(self.vertices).all():
            raise MeshError("mesh has non-finite vertex coordinates")
        if tris.size and (tris.min() < 0 or tris.max() >= len(self.vertices)):
            bad = np.where((tris < 0) | (tris >= len(self.vertices)))[0]
            raise MeshError(f"triangle indices out of range in faces {sorted(set(bad.tolist()))}")
        areas = self.areas()
        bad = np.where(areas <= MIN_TRIANGLE_AREA)[0]
        if bad.size:
            raise MeshError(f"degenerate (zero-area) faces: {bad.tolist()}")

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    def corners(self):
        """Return (a, b, c) corner arrays, each (T, 3)."""
        v, t = self.vertices, self.triangles
        return v[t[:, 0]], v[t[:, 1]], v[t[:, 2]]

    def areas(self) -> np.ndarray:
        a, b, c = self.corners()
        return 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)

    def face_normals(self) -> np.ndarray:
        """Unit normals oriented by winding (right-hand rule)."""
        a, b, c = self.corners()
        n = np.cross(b - a, c - a)
        return n / np.linalg.norm(n, axis=1, keepdims=True)

    def bounds(self):
        return self.vertices.min(axis=0), self.vertices.max(axis=0)


@dataclass(frozen=True)
class SurfaceSample:
    position: np.ndarray
    normal: np.ndarray
    weight: float
    id: int


@dataclass(frozen=True)
class SampleSet:
    """Discretization of the target surface: positions, normals, area weights."""

    positions: np.ndarray  # (N, 3)
    normals: np.ndarray  # (N, 3) unit
    weights: np.ndarray  # (N,) m^2
    grid_pitch: float

    def __post_init__(self):
        object.__setattr__(self, "positions", _as_points(self.positions))
        object.__setattr__(self, "normals", _as_points(self.normals))
        object.__setattr__(self, "weights", np.asarray(self.weights, dtype=np.float64))
        n = len(self.positions)
        if n < 1:
            raise EmptySampleError("sample set is empty")
        if self.normals.shape != (n, 3) or self.weights.shape != (n,):
            raise ValueError("positions/normals/weights length mismatch")
        norms = np.linalg.norm(self.normals, axis=1)
        if not np.allclose(norms, 1.0, atol=1e-9):
            raise ValueError("normals must be unit length")
        if (self.weights <= 0).any():
            raise ValueError("sample weights must be positive")

    def __len__(self) -> int:
        return len(self.positions)

    def __getitem__(self, i: int) -> SurfaceSample:
        return SurfaceSample(self.positions[i], self.normals[i], float(self.weights[i]), i)

    def content_hash(self) -> int:
        return content_hash_u64(self.positions, self.normals, self.weights)

    def to_json_dict(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "kind": "sample_set",
            "grid_pitch": self.grid_pitch,
            "positions": self.positions.tolist(),
            "normals": self.normals.tolist(),
            "weights": self.weights.tolist(),
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "SampleSet":
        if d.get("format_version") != FORMAT_VERSION:
            raise ValueError(f"unsupported sample_set format_version {d.get('format_version')}")
        return cls(
            positions=np.array(d["positions"], dtype=np.float64),
            normals=np.array(d["normals"], dtype=np.float64),
            weights=np.array(d["weights"], dtype=np.float64),
            grid_pitch=float(d["grid_pitch"]),
        )


@dataclass(frozen=True)
class CandidateSet:
    """Discretized candidate sensor locations."""

    positions: np.ndarray  # (M, 3)
    region_kind: str = "explicit-list"  # plane-at-height | box | explicit-list

    def __post_init__(self):
        pos = _as_points(self.positions)
        # merge exact duplicates, first occurrence wins
        _, idx = np.unique(pos, axis=0, return_index=True)
        if len(idx) != len(pos):
            pos = pos[np.sort(idx)]
        object.__setattr__(self, "positions", pos)
        if len(pos) < 1:
            raise ValueError("candidate set is empty")

    def __len__(self) -> int:
        return len(self.positions)

    def content_hash(self) -> int:
        return content_hash_u64(self.positions)

    def to_json_dict(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "kind": "candidate_set",
            "region_kind": self.region_kind,
            "positions": self.positions.tolist(),
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "CandidateSet":
        if d.get("format_version") != FORMAT_VERSION:
            raise ValueError(f"unsupported candidate_set format_version {d.get('format_version')}")
        return cls(
            positions=np.array(d["positions"], dtype=np.float64),
            region_kind=d.get("region_kind", "explicit-list"),
        )


def content_hash_u64(*arrays: np.ndarray) -> int:
    h = hashlib.blake2b(digest_size=8)
    for a in arrays:
        a = np.ascontiguousarray(a, dtype=np.float64)
        h.update(str(a.shape).encode())
        h.update(a.tobytes())
    return int.from_bytes(h.digest(), "little")


# ---------------------------------------------------------------------------
# OBJ I/O


def load_obj(path, name: str | None = None) -> TriangleMesh:
    """Load an ASCII Wavefront OBJ mesh (v/f records; quads fan-triangulated)."""
    vertices = []
    faces = []
    with open(path, "r") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            tag = parts[0]
            if tag == "v":
                if len(parts) < 4:
                    raise MeshError(f"{path}:{lineno}: malformed vertex line: {line!r}")
                try:
                    vertices.append([float(x) for x in parts[1:4]])
                except ValueError as exc:
                    raise MeshError(f"{path}:{lineno}: bad vertex coordinate: {line!r}") from exc
            elif tag == "f":
                if len(parts) < 4:
                    raise MeshError(f"{path}:{lineno}: face with fewer than 3 vertices")
                idx = []
                for tok in parts[1:]:
                    vtok = tok.split("/")[0]
                    try:
                        i = int(vtok)
                    except ValueError as exc:
                        raise MeshError(f"{path}:{lineno}: bad face index {tok!r}") from exc
                    # OBJ is 1-based; negative indices count from the end
                    idx.append(i - 1 if i > 0 else len(vertices) + i)
                for a, b in zip(idx[1:-1], idx[2:]):
                    faces.append([idx[0], a, b])
            # vn/vt/usemtl etc. are ignored
    if not vertices:
        raise MeshError(f"{path}: no vertices")
    if not faces:
        raise MeshError(f"{path}: no faces")
    return TriangleMesh(
        vertices=np.array(vertices, dtype=np.float64),
        triangles=np.array(faces, dtype=np.int64),
        name=name if name is not None else str(path),
    )


def save_obj(mesh: TriangleMesh, path) -> None:
    with open(path, "w") as fh:
        if mesh.name:
            fh.write(f"# {mesh.name}\n")
        for v in mesh.vertices:
            fh.write(f"v {v[0]:.12g} {v[1]:.12g} {v[2]:.12g}\n")
        for t in mesh.triangles:
            fh.write(f"f {t[0] + 1} {t[1] + 1} {t[2] + 1}\n")


# ---------------------------------------------------------------------------
# Surface sampling


def _triangle_lattice(a, b, c, m: int) -> np.ndarray:
    """Centroids of the m^2 congruent sub-triangles of triangle (a, b, c)."""
    pts = []
    for i in range(m):
        for j in range(m - i):
            # upward sub-triangle (i, j), (i+1, j), (i, j+1)
            u = (3 * i + 1) / (3 * m)
            v = (3 * j + 1) / (3 * m)
            pts.append((u, v))
            if i + j <= m - 2:
                # downward sub-triangle (i+1, j), (i, j+1), (i+1, j+1)
                u = (3 * i + 2) / (3 * m)
                v = (3 * j + 2) / (3 * m)
                pts.append((u, v))
    uv = np.array(pts)
    return a + uv[:, :1] * (b - a) + uv[:, 1:] * (c - a)


def sample_surface(mesh: TriangleMesh, pitch: float, drop_downward: float = 0.0) -> SampleSet:
    """Grid-sample every triangle at the given pitch.

    Each triangle is subdivided into m^2 congruent sub-triangles with m chosen
    so sub-triangle edges are at most `pitch`; one sample sits at each
    sub-triangle centroid and carries weight area/m^2. Samples whose face
    normal has z-component below -drop_downward are discarded.
    """
    if pitch <= 0:
        raise ValueError("pitch must be positive")
    tau = float(drop_downward)
    if not -1.0 <= tau <= 1.0:
        raise ValueError("drop_downward threshold must be in [-1, 1]")
    normals = mesh.face_normals()
    areas = mesh.areas()
    A, B, C = mesh.corners()
    positions, out_normals, weights = [], [], []
    for t in range(mesh.n_triangles):
        if normals[t, 2] < -tau:
            continue
        a, b, c = A[t], B[t], C[t]
        longest = max(
            np.linalg.norm(b - a), np.linalg.norm(c - b), np.linalg.norm(a - c)
        )
        m = max(1, math.ceil(longest / pitch))
        pts = _triangle_lattice(a, b, c, m)
        positions.append(pts)
        out_normals.append(np.repeat(normals[t : t + 1], len(pts), axis=0))
        weights.append(np.full(len(pts), areas[t] / len(pts)))
    if not positions:
        raise EmptySampleError(
            "all faces were filtered out (surface faces downward?); no target surface left"
        )
    return SampleSet(
        positions=np.concatenate(positions),
        normals=np.concatenate(out_normals),
        weights=np.concatenate(weights),
        grid_pitch=float(pitch),
    )


# ---------------------------------------------------------------------------
# Candidate grids


def _axis_points(lo: float, hi: float, pitch: float) -> np.ndarray:
    if hi < lo:
        raise ValueError(f"empty interval [{lo}, {hi}]")
    n = int(math.floor((hi - lo) / pitch + 1e-9)) + 1
    return lo + pitch * np.arange(n)


def generate_candidates_plane(
    h: float, rect: tuple[float, float, float, float], pitch: float
) -> CandidateSet:
    """Regular grid on the plane z = h over rectangle (x0, y0, x1, y1)."""
    if pitch <= 0:
        raise ValueError("pitch must be positive")
    x0, y0, x1, y1 = rect
    xs = _axis_points(x0, x1, pitch)
    ys = _axis_points(y0, y1, pitch)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    pos = np.column_stack([gx.ravel(), gy.ravel(), np.full(gx.size, float(h))])
    return CandidateSet(positions=pos, region_kind="plane-at-height")


def generate_candidates_box(lo, hi, pitch: float) -> CandidateSet:
    """Regular 3D lattice inside the axis-aligned box [lo, hi]."""
    if pitch <= 0:
        raise ValueError("pitch must be positive")
    lo = np.asarray(lo, dtype=np.float64)
    hi = np.asarray(hi, dtype=np.float64)
    axes = [_axis_points(lo[d], hi[d], pitch) for d in range(3)]
    gx, gy, gz = np.meshgrid(*axes, indexing="ij")
    pos = np.column_stack([gx.ravel(), gy.ravel(), gz.ravel()])
    return CandidateSet(positions=pos, region_kind="box")


def save_json(obj, path) -> None:
    with open(path, "w") as fh:
        json.dump(obj.to_json_dict(), fh)


def load_sample_set(path) -> SampleSet:
    with open(path) as fh:
        return SampleSet.from_json_dict(json.load(fh))


def load_candidate_set(path) -> CandidateSet:
    with open(path) as fh:
        return CandidateSet.from_json_dict(json.load(fh))
