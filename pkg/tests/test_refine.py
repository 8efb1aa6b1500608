import math

import numpy as np
import pytest

import surfcover as sc
from surfcover.coverage import QualityKind

from conftest import all_visible, make_sample_set


def grid_search_min_sphere_radius(points, h, span=12.0, levels=3, cells=60):
    """Two-level grid search over plane centers; oracle for the closed form."""
    points = np.asarray(points, float)
    cx, cy = points[:, 0].mean(), points[:, 1].mean()
    half = span

    def radius_at(x, y):
        return np.sqrt(
            (points[:, 0] - x) ** 2 + (points[:, 1] - y) ** 2 + (points[:, 2] - h) ** 2
        ).max()

    best = (radius_at(cx, cy), cx, cy)
    for _ in range(levels):
        xs = np.linspace(best[1] - half, best[1] + half, cells)
        ys = np.linspace(best[2] - half, best[2] + half, cells)
        for x in xs:
            for y in ys:
                r = radius_at(x, y)
                if r < best[0]:
                    best = (r, x, y)
        half = 3 * half / cells
    return best[0]


def test_min_sphere_single_point():
    s = sc.min_sphere_fixed_plane([[0, 0, 0]], 3.0)
    assert np.allclose(s.center, [0, 0, 3])
    assert s.radius == pytest.approx(3.0)


def test_min_sphere_two_points_symmetric():
    s = sc.min_sphere_fixed_plane([[-4, 0, 0], [4, 0, 0]], 3.0)
    assert np.allclose(s.center, [0, 0, 3])
    assert s.radius == pytest.approx(5.0)


def test_min_sphere_four_fold_symmetry():
    s = sc.min_sphere_fixed_plane([[1, 0, 0], [0, 1, 0], [-1, 0, 0], [0, -1, 0]], 1.0)
    assert np.allclose(s.center, [0, 0, 1], atol=1e-9)
    assert s.radius == pytest.approx(math.sqrt(2))


def test_min_sphere_matches_grid_oracle():
    rng = np.random.default_rng(12)
    for _ in range(25):
        n = int(rng.integers(1, 13))
        pts = rng.uniform(-4, 4, (n, 3))
        h = float(rng.uniform(5, 7))
        sphere = sc.min_sphere_fixed_plane(pts, h)
        oracle = grid_search_min_sphere_radius(pts, h)
        assert sphere.radius == pytest.approx(oracle, rel=1e-4)


def test_min_sphere_contains_all_points():
    rng = np.random.default_rng(13)
    for _ in range(20):
        pts = rng.uniform(-5, 5, (int(rng.integers(2, 15)), 3))
        sphere = sc.min_sphere_fixed_plane(pts, 6.0)
        assert all(sphere.contains(p) for p in pts)
        assert sphere.center[2] == 6.0


def test_min_sphere_radius_at_least_clearance():
    rng = np.random.default_rng(14)
    pts = rng.uniform(-3, 3, (10, 3))
    h = 8.0
    sphere = sc.min_sphere_fixed_plane(pts, h)
    clearance = np.abs(h - pts[:, 2]).min()
    assert sphere.radius >= clearance - 1e-12


def test_min_sphere_permutation_invariant():
    rng = np.random.default_rng(15)
    pts = rng.uniform(-3, 3, (9, 3))
    r1 = sc.min_sphere_fixed_plane(pts, 5.0)
    r2 = sc.min_sphere_fixed_plane(pts[::-1], 5.0)
    assert r1.radius == pytest.approx(r2.radius, abs=1e-9)
    assert np.allclose(r1.center, r2.center, atol=1e-7)


def test_min_sphere_support_on_boundary():
    rng = np.random.default_rng(16)
    pts = rng.uniform(-3, 3, (12, 3))
    sphere = sc.min_sphere_fixed_plane(pts, 5.0)
    for idx in sphere.support:
        d = np.linalg.norm(pts[idx] - sphere.center)
        assert d == pytest.approx(sphere.radius, abs=1e-9)


def test_improve_quality_max_fixed_point():
    # sensors already at per-cluster optima: nothing to gain
    s = make_sample_set([[-2, 0, 0], [2, 0, 0]])
    centers = np.array([[-2.0, 0.0, 3.0], [2.0, 0.0, 3.0]])
    new_centers, r = sc.improve_quality_max(s, centers, 3.0)
    assert np.allclose(new_centers, centers)
    assert r == pytest.approx(3.0)


def test_improve_quality_max_never_increases_radius():
    rng = np.random.default_rng(18)
    plane = sc.PlaneDeployment(3.0)
    for _ in range(20):
        pts = np.column_stack([rng.uniform(0, 12, (25, 2)), rng.uniform(0, 0.5, 25)])
        s = make_sample_set(pts)
        k = int(rng.integers(1, 5))
        fpc = sc.farthest_point_clustering(s, k, plane)
        r0 = sc.coverage_radius(fpc, s)
        _, r1 = sc.improve_quality_max(s, fpc.positions, plane.height)
        assert r1 <= r0 + 1e-12


def _coarse_fine_setup():
    mesh = sc.gen_room(extent=(6, 4, 3), obstacles=[((2, 1.5, 0), (3.5, 2.5, 1.0))])
    samples = sc.sample_surface(mesh, pitch=0.9)
    bvh = sc.build_bvh(mesh)
    rect = (1.0, 1.0, 5.0, 3.0)
    coarse = sc.generate_candidates_plane(2.8, rect, 2.0)
    fine = sc.generate_candidates_plane(2.8, rect, 0.5)
    return mesh, bvh, samples, rect, coarse, fine


def test_refine_grid_zero_rounds_is_noop():
    _, bvh, samples, rect, coarse, _ = _coarse_fine_setup()
    vm = sc.visibility_matrix(bvh, samples, coarse)
    inst = sc.build_instance(samples, coarse, vm, QualityKind.VISIBILITY)
    placement = (0, len(coarse) - 1)
    pos, obj = sc.refine_grid(inst, placement, bvh, pitch_fine=0.5, rounds=0, neighborhood=1.0)
    assert np.allclose(pos, coarse.positions[list(placement)])


def test_refine_grid_never_decreases_objective():
    _, bvh, samples, rect, coarse, _ = _coarse_fine_setup()
    vm = sc.visibility_matrix(bvh, samples, coarse)
    inst = sc.build_instance(samples, coarse, vm, QualityKind.VISIBILITY)
    placement, report, _ = sc.solve_problem1(inst, 2)
    pos, obj = sc.refine_grid(
        inst, placement, bvh, pitch_fine=0.5, rounds=2, neighborhood=1.0
    )
    assert obj >= report.objective


def test_refine_grid_bounded_by_fine_ilp():
    # refined positions restricted to the fine lattice: fine ILP is an upper oracle
    _, bvh, samples, rect, coarse, fine = _coarse_fine_setup()
    vm_c = sc.visibility_matrix(bvh, samples, coarse)
    inst_c = sc.build_instance(samples, coarse, vm_c, QualityKind.VISIBILITY)
    placement, report, _ = sc.solve_problem1(inst_c, 2)
    lo = np.array([rect[0], rect[1]])
    hi = np.array([rect[2], rect[3]])
    pos, obj = sc.refine_grid(
        inst_c, placement, bvh, pitch_fine=0.5, rounds=2, neighborhood=2.0,
        bounds=(lo, hi),
    )
    vm_f = sc.visibility_matrix(bvh, samples, fine)
    inst_f = sc.build_instance(samples, fine, vm_f, QualityKind.VISIBILITY)
    _, report_f, _ = sc.solve_problem1(inst_f, 2)
    assert report.objective <= obj <= report_f.objective


def test_refine_grid_cumulative_requires_threshold():
    _, bvh, samples, rect, coarse, _ = _coarse_fine_setup()
    vm = sc.visibility_matrix(bvh, samples, coarse)
    inst = sc.build_instance(samples, coarse, vm, QualityKind.LAMBERT_INVERSE_SQUARE)
    with pytest.raises(ValueError, match="threshold"):
        sc.refine_grid(inst, (0,), bvh, pitch_fine=0.5, rounds=1, neighborhood=1.0)
