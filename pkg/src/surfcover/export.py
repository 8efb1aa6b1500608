"""Colored point-cloud export: each covered sample gets its sensor's color."""

from __future__ import annotations

import numpy as np

from .coverage import CoverageInstance, QualityKind

# fixed 12-color cycle by sensor index; uncovered samples are white
PALETTE = [
    (230, 25, 75),
    (60, 180, 75),
    (255, 225, 25),
    (0, 130, 200),
    (245, 130, 48),
    (145, 30, 180),
    (70, 240, 240),
    (240, 50, 230),
    (210, 245, 60),
    (250, 190, 190),
    (0, 128, 128),
    (170, 110, 40),
]
UNCOVERED = (255, 255, 255)


def sample_colors(
    instance: CoverageInstance,
    selected,
    threshold: float | None = None,
) -> np.ndarray:
    """(N, 3) uint8 colors: best/assigned sensor's palette entry, white if the
    sample is uncovered."""
    n = instance.n_samples
    colors = np.tile(np.array(UNCOVERED, dtype=np.uint8), (n, 1))
    selected = list(selected)
    if not selected:
        return colors
    cols = instance.phi[:, selected]
    best = cols.argmax(axis=1)
    if instance.kind is QualityKind.LAMBERT_INVERSE_SQUARE:
        if threshold is None:
            raise ValueError("cumulative kind needs a threshold")
        covered = cols.sum(axis=1) > threshold
    else:
        covered = cols.max(axis=1) > 0
    for rank in range(len(selected)):
        mask = covered & (best == rank)
        colors[mask] = PALETTE[rank % len(PALETTE)]
    return colors


def write_ply(path, positions: np.ndarray, colors: np.ndarray) -> None:
    """ASCII PLY with per-vertex position and RGB color."""
    n = len(positions)
    if colors.shape != (n, 3):
        raise ValueError("colors must be (n, 3)")
    with open(path, "w") as fh:
        fh.write("ply\nformat ascii 1.0\n")
        fh.write(f"element vertex {n}\n")
        fh.write("property float x\nproperty float y\nproperty float z\n")
        fh.write("property uchar red\nproperty uchar green\nproperty uchar blue\n")
        fh.write("end_header\n")
        for p, c in zip(positions, colors):
            fh.write(f"{p[0]:.9g} {p[1]:.9g} {p[2]:.9g} {c[0]} {c[1]} {c[2]}\n")
