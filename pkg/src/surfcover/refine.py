"""Local improvement: plane-constrained minimum enclosing spheres and
per-sensor grid refinement."""

from __future__ import annotations

import random
from dataclasses import dataclass

import numpy as np

from .coverage import CoverageInstance, QualityKind
from .mesh import SampleSet
from .visibility import Bvh, segments_occluded

CONTAIN_TOL = 1e-9


@dataclass(frozen=True)
class ConstrainedSphere:
    """Minimum sphere covering a point set with its center pinned to a plane."""

    center: np.ndarray  # (3,), center[2] == plane height
    radius: float
    support: tuple[int, ...]  # indices of the <= 3 boundary points

    def contains(self, p, tol: float = CONTAIN_TOL) -> bool:
        d2 = float(np.sum((np.asarray(p, float) - self.center) ** 2))
        r2 = self.radius**2
        return d2 <= r2 + tol * max(1.0, r2)


def _sphere_1p(p, h: float):
    # center is the vertical projection; radius is the vertical offset
    center = np.array([p[0], p[1], h])
    return center, abs(h - p[2])


def _sphere_2p(p, q, h: float):
    # center on the intersection of the 3D bisector plane with z = h, at the
    # foot of the perpendicular from p's projection
    a = p[:2]
    b = q[:2]
    wa = (h - p[2]) ** 2
    wb = (h - q[2]) ** 2
    d = b - a
    d2 = float(d @ d)
    if d2 < 1e-24:
        # identical projections: fall back to covering the farther point
        if wa >= wb:
            return _sphere_1p(p, h)
        return _sphere_1p(q, h)
    t = (d2 + wb - wa) / (2.0 * d2)
    x = a + t * d
    r = float(np.sqrt(np.sum((x - a) ** 2) + wa))
    return np.array([x[0], x[1], h]), r


def _sphere_3p(p, q, s, h: float):
    # equidistance in 3D of the three points restricted to z = h gives two
    # linear equations in the planar center coordinates
    pts2 = np.array([p[:2], q[:2], s[:2]])
    w = np.array([(h - p[2]) ** 2, (h - q[2]) ** 2, (h - s[2]) ** 2])
    sq = (pts2**2).sum(axis=1) + w
    A = 2.0 * (pts2[1:] - pts2[0])
    rhs = sq[1:] - sq[0]
    det = A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0]
    if abs(det) < 1e-18:
        return None  # collinear projections; a 2-point basis will cover
    x = np.linalg.solve(A, rhs)
    r = float(np.sqrt(np.sum((x - pts2[0]) ** 2) + w[0]))
    return np.array([x[0], x[1], h]), r


def min_sphere_fixed_plane(points, h_plane: float, seed: int = 0) -> ConstrainedSphere:
    """Smallest sphere containing `points` with its center on z = h_plane.

    Randomized incremental in the style of Welzl's minimum enclosing disc
    algorithm with boundary sets of at most three points solved in closed
    form; the shuffle is seeded so results are reproducible.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 3 or len(pts) == 0:
        raise ValueError("expected a non-empty (n, 3) point array")
    order = list(range(len(pts)))
    random.Random(seed).shuffle(order)

    def make(basis: list[int]):
        if len(basis) == 1:
            c, r = _sphere_1p(pts[basis[0]], h_plane)
        elif len(basis) == 2:
            c, r = _sphere_2p(pts[basis[0]], pts[basis[1]], h_plane)
        else:
            out = _sphere_3p(pts[basis[0]], pts[basis[1]], pts[basis[2]], h_plane)
            if out is None:
                # degenerate triple: best 2-point sphere covering all three
                best = None
                for a in range(3):
                    for b in range(a + 1, 3):
                        c, r = _sphere_2p(pts[basis[a]], pts[basis[b]], h_plane)
                        cand = ConstrainedSphere(c, r, (basis[a], basis[b]))
                        if all(cand.contains(pts[basis[i]]) for i in range(3)):
                            if best is None or cand.radius < best.radius:
                                best = cand
                if best is not None:
                    return best
                out = _sphere_2p(pts[basis[0]], pts[basis[1]], h_plane)
            c, r = out
        return ConstrainedSphere(c, r, tuple(basis))

    sphere = make([order[0]])
    for ii in range(1, len(order)):
        i = order[ii]
        if sphere.contains(pts[i]):
            continue
        sphere = make([i])
        for jj in range(ii):
            j = order[jj]
            if sphere.contains(pts[j]):
                continue
            sphere = make([i, j])
            for ll in range(jj):
                l = order[ll]
                if sphere.contains(pts[l]):
                    continue
                sphere = make([i, j, l])
    return sphere


# ---------------------------------------------------------------------------
# Lloyd-style max-min improvement


def improve_quality_max(
    samples: SampleSet,
    centers: np.ndarray,
    h_plane: float,
    tol: float = 1e-9,
    max_rounds: int = 1000,
) -> tuple[np.ndarray, float]:
    """Shrink the covering radius by alternating nearest-center assignment and
    plane-constrained 1-center recomputation. The radius never increases and
    iteration stops once it improves by at most `tol`.
    """
    centers = np.array(centers, dtype=np.float64, copy=True)
    pos = samples.positions

    def radius_and_assignment():
        d = np.linalg.norm(pos[:, None, :] - centers[None, :, :], axis=2)
        assign = d.argmin(axis=1)  # lowest sensor index on ties
        return float(d.min(axis=1).max()), assign

    r, assign = radius_and_assignment()
    for _ in range(max_rounds):
        for j in range(len(centers)):
            cluster = pos[assign == j]
            if len(cluster) == 0:
                continue  # no responsibility this round; leave in place
            centers[j] = min_sphere_fixed_plane(cluster, h_plane).center
        r_new, assign = radius_and_assignment()
        if r - r_new <= tol:
            r = min(r, r_new)
            break
        r = r_new
    return centers, r


# ---------------------------------------------------------------------------
# Per-sensor grid refinement


def _local_grid(center: np.ndarray, pitch: float, halfwidth: float, bounds=None) -> np.ndarray:
    steps = int(np.floor(halfwidth / pitch + 1e-9))
    offs = pitch * np.arange(-steps, steps + 1)
    gx, gy = np.meshgrid(center[0] + offs, center[1] + offs, indexing="ij")
    pts = np.column_stack([gx.ravel(), gy.ravel(), np.full(gx.size, center[2])])
    if bounds is not None:
        lo, hi = bounds
        keep = (
            (pts[:, 0] >= lo[0] - 1e-9)
            & (pts[:, 0] <= hi[0] + 1e-9)
            & (pts[:, 1] >= lo[1] - 1e-9)
            & (pts[:, 1] <= hi[1] + 1e-9)
        )
        pts = pts[keep]
    # ensure the current location itself is a candidate (index 0)
    return np.vstack([center[None, :], pts])


def _phi_columns(
    samples: SampleSet, positions: np.ndarray, vis: np.ndarray, kind: QualityKind
) -> np.ndarray:
    diff = positions[None, :, :] - samples.positions[:, None, :]
    dist = np.linalg.norm(diff, axis=2)
    safe = np.where(dist == 0, 1.0, dist)
    if kind is QualityKind.VISIBILITY:
        phi = vis.astype(np.float64)
    elif kind is QualityKind.INVERSE_DISTANCE:
        phi = np.where(vis, 1.0 / safe, 0.0)
    else:
        cosine = np.einsum("nmk,nk->nm", diff, samples.normals) / safe
        phi = np.where(vis, np.maximum(cosine, 0.0) / safe**2, 0.0)
    return phi


def _vis_columns(bvh: Bvh, samples: SampleSet, positions: np.ndarray, eps=None) -> np.ndarray:
    n = len(samples)
    out = np.zeros((n, len(positions)), dtype=bool)
    for j in range(len(positions)):
        targets = np.repeat(positions[j : j + 1], n, axis=0)
        out[:, j] = ~segments_occluded(bvh, samples.positions, targets, eps)
    return out


def refine_grid(
    instance: CoverageInstance,
    placement,
    bvh: Bvh,
    pitch_fine: float,
    rounds: int,
    neighborhood: float,
    threshold: float | None = None,
    bounds=None,
    eps: float | None = None,
) -> tuple[np.ndarray, float]:
    """Move sensors one at a time onto a fine local grid, keeping a move only
    when the global objective strictly improves.

    Objectives: covered count for the visibility and cumulative kinds (the
    cumulative kind needs `threshold`), covering radius (minimized) for the
    best-quality kind. Returns the refined sensor positions and the final
    objective value.
    """
    kind = instance.kind
    if kind is QualityKind.LAMBERT_INVERSE_SQUARE and threshold is None:
        raise ValueError("cumulative kind needs a threshold")
    samples = instance.samples
    positions = np.array(
        [instance.candidates.positions[j] for j in placement], dtype=np.float64
    )
    k = len(positions)
    cols = _phi_columns(
        samples, positions, _vis_columns(bvh, samples, positions, eps), kind
    )

    def objective(phi_cols: np.ndarray) -> float:
        if kind is QualityKind.VISIBILITY:
            return float((phi_cols > 0).any(axis=1).sum())
        if kind is QualityKind.LAMBERT_INVERSE_SQUARE:
            return float((phi_cols.sum(axis=1) > threshold).sum())
        # best-quality: minimize the covering radius
        d = np.linalg.norm(
            samples.positions[:, None, :] - positions[None, :, :], axis=2
        )
        return -float(d.min(axis=1).max())

    current = objective(cols)
    for _ in range(rounds):
        moved = False
        for j in range(k):
            local = _local_grid(positions[j], pitch_fine, neighborhood, bounds)
            vis_loc = _vis_columns(bvh, samples, local, eps)
            phi_loc = _phi_columns(samples, local, vis_loc, kind)
            others = np.delete(cols, j, axis=1)
            if kind is QualityKind.VISIBILITY:
                base = (others > 0).any(axis=1)
                scores = base.sum() + ((~base)[:, None] & (phi_loc > 0)).sum(axis=0)
            elif kind is QualityKind.LAMBERT_INVERSE_SQUARE:
                base = others.sum(axis=1)
                scores = ((base[:, None] + phi_loc) > threshold).sum(axis=0)
            else:
                other_pos = np.delete(positions, j, axis=0)
                if len(other_pos):
                    base = np.linalg.norm(
                        samples.positions[:, None, :] - other_pos[None, :, :], axis=2
                    ).min(axis=1)
                else:
                    base = np.full(len(samples), np.inf)
                d_loc = np.linalg.norm(
                    samples.positions[:, None, :] - local[None, :, :], axis=2
                )
                scores = -np.minimum(base[:, None], d_loc).max(axis=0)
            best = int(np.argmax(scores))
            if scores[best] > current + 1e-12 and best != 0:
                positions[j] = local[best]
                cols[:, j] = phi_loc[:, best]
                current = float(scores[best])
                moved = True
        if not moved:
            break
    if instance.kind is QualityKind.INVERSE_DISTANCE:
        return positions, -current  # covering radius
    return positions, current
