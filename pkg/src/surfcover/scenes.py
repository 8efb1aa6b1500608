"""Deterministic synthetic scenes: sinusoidal terrain and box-furnished rooms."""

from __future__ import annotations

import numpy as np

from .mesh import TriangleMesh


def gen_terrain(
    seed: int,
    extent: tuple[float, float] = (10.0, 10.0),
    cells: int = 20,
    amplitude: float = 0.5,
) -> TriangleMesh:
    """Height field z(x, y) = amplitude * sum of 4 seeded sinusoids over a
    (cells+1)^2 grid; smooth and low-curvature by construction.
    """
    if cells < 1:
        raise ValueError("cells must be at least 1")
    rng = np.random.default_rng(seed)
    freqs = rng.uniform(0.2, 1.2, size=(4, 2))
    phases = rng.uniform(0.0, 2.0 * np.pi, size=4)
    sx, sy = extent
    xs = np.linspace(0.0, sx, cells + 1)
    ys = np.linspace(0.0, sy, cells + 1)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    z = np.zeros_like(gx)
    for (fx, fy), ph in zip(freqs, phases):
        z += np.sin(fx * gx + fy * gy + ph)
    z *= amplitude
    vertices = np.column_stack([gx.ravel(), gy.ravel(), z.ravel()])

    def vid(i, j):
        return i * (cells + 1) + j

    tris = []
    for i in range(cells):
        for j in range(cells):
            # counter-clockwise seen from above: normals point up
            tris.append([vid(i, j), vid(i + 1, j), vid(i + 1, j + 1)])
            tris.append([vid(i, j), vid(i + 1, j + 1), vid(i, j + 1)])
    return TriangleMesh(
        vertices=vertices,
        triangles=np.array(tris, dtype=np.int64),
        name=f"terrain-seed{seed}",
    )


def _quad(v, a, b, c, d):
    """Two triangles for quad corners a, b, c, d (counter-clockwise around the
    intended normal)."""
    return [[v[a], v[b], v[c]], [v[a], v[c], v[d]]]


def _box_triangles(lo, hi, vertices: list, inward: bool) -> list:
    """Append the 8 box corners to `vertices`; return 12 triangles whose
    normals face outward (inward=False) or into the box (inward=True)."""
    x0, y0, z0 = lo
    x1, y1, z1 = hi
    base = len(vertices)
    corners = [
        (x0, y0, z0), (x1, y0, z0), (x1, y1, z0), (x0, y1, z0),
        (x0, y0, z1), (x1, y0, z1), (x1, y1, z1), (x0, y1, z1),
    ]
    vertices.extend(corners)
    v = list(range(base, base + 8))
    faces = []
    faces += _quad(v, 0, 3, 2, 1)  # bottom, normal -z
    faces += _quad(v, 4, 5, 6, 7)  # top, normal +z
    faces += _quad(v, 0, 1, 5, 4)  # y = y0 side, normal -y
    faces += _quad(v, 2, 3, 7, 6)  # y = y1 side, normal +y
    faces += _quad(v, 0, 4, 7, 3)  # x = x0 side, normal -x
    faces += _quad(v, 1, 2, 6, 5)  # x = x1 side, normal +x
    if inward:
        faces = [[f[0], f[2], f[1]] for f in faces]
    return faces


def gen_room(
    extent: tuple[float, float, float] = (6.0, 4.0, 3.0),
    obstacles: list[tuple[tuple, tuple]] = (),
) -> TriangleMesh:
    """Interior-facing room shell plus axis-aligned box obstacles.

    The shell's winding is flipped so its normals face the interior (floor up,
    ceiling down, walls inward); obstacle boxes keep outward normals, which
    also face the room interior. Obstacles must lie strictly inside the shell
    and must not overlap each other.
    """
    w, d, h = extent
    lo_room = np.zeros(3)
    hi_room = np.array([w, d, h])
    boxes = [(np.asarray(lo, float), np.asarray(hi, float)) for lo, hi in obstacles]
    for lo, hi in boxes:
        if (hi <= lo).any():
            raise ValueError(f"obstacle box has empty extent: {lo} .. {hi}")
        if (lo < lo_room - 1e-12).any() or (hi > hi_room + 1e-12).any():
            raise ValueError(f"obstacle {lo} .. {hi} extends outside the room shell")
    for a in range(len(boxes)):
        for b in range(a + 1, len(boxes)):
            (lo1, hi1), (lo2, hi2) = boxes[a], boxes[b]
            if (lo1 < hi2).all() and (lo2 < hi1).all():
                raise ValueError(f"obstacles {a} and {b} overlap")
    vertices: list = []
    faces = _box_triangles(lo_room, hi_room, vertices, inward=True)
    for lo, hi in boxes:
        faces += _box_triangles(lo, hi, vertices, inward=False)
    return TriangleMesh(
        vertices=np.array(vertices, dtype=np.float64),
        triangles=np.array(faces, dtype=np.int64),
        name="room",
    )
