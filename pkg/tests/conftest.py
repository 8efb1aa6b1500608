import numpy as np
import pytest

import surfcover as sc


def box_mesh(lo=(0, 0, 0), hi=(1, 1, 1), name="box"):
    """Closed axis-aligned box with outward-facing normals."""
    from surfcover.scenes import _box_triangles

    vertices = []
    faces = _box_triangles(np.asarray(lo, float), np.asarray(hi, float), vertices, inward=False)
    return sc.TriangleMesh(np.array(vertices), np.array(faces), name)


def square_mesh(flip=False):
    """Unit square in z = 0, normal +z (or -z when flipped)."""
    verts = [[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0]]
    tris = [[0, 1, 2], [0, 2, 3]] if not flip else [[0, 2, 1], [0, 3, 2]]
    return sc.TriangleMesh(verts, tris, "square")


def all_visible(samples, candidates):
    """Visibility matrix of all ones (the relaxed-visibility setting)."""
    return sc.VisibilityMatrix(
        bits=np.ones((len(samples), len(candidates)), dtype=bool),
        sample_hash=samples.content_hash(),
        candidate_hash=candidates.content_hash(),
    )


def make_sample_set(positions, normals=None, weights=None, pitch=1.0):
    positions = np.asarray(positions, float)
    n = len(positions)
    if normals is None:
        normals = np.tile([0.0, 0.0, 1.0], (n, 1))
    if weights is None:
        weights = np.ones(n)
    return sc.SampleSet(positions=positions, normals=normals, weights=weights, grid_pitch=pitch)


@pytest.fixture(scope="session")
def room_scene():
    """Room with one box obstacle, sampled and with visibility precomputed."""
    mesh = sc.gen_room(extent=(6, 4, 3), obstacles=[((2, 1.5, 0), (3.5, 2.5, 1.0))])
    samples = sc.sample_surface(mesh, pitch=0.7)
    candidates = sc.generate_candidates_plane(2.8, (0.5, 0.5, 5.5, 3.5), 1.0)
    bvh = sc.build_bvh(mesh)
    vm = sc.visibility_matrix(bvh, samples, candidates)
    return mesh, bvh, samples, candidates, vm
