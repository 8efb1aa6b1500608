import math

import numpy as np
import pytest

import surfcover as sc
from surfcover.coverage import QualityKind
from surfcover.drivers import candidate_radii
from surfcover.ilp import IlpModel, ModelKind

from conftest import all_visible, make_sample_set


def random_instance(rng, n, m, kind):
    pts = np.column_stack([rng.uniform(0, 8, (n, 2)), np.zeros(n)])
    cand = np.column_stack([rng.uniform(0, 8, (m, 2)), np.full(m, 2.0)])
    samples = make_sample_set(pts)
    cands = sc.CandidateSet(positions=cand)
    vm = sc.VisibilityMatrix(
        bits=rng.random((n, m)) < 0.7,
        sample_hash=samples.content_hash(),
        candidate_hash=cands.content_hash(),
    )
    return sc.build_instance(samples, cands, vm, kind)


def line_instance():
    samples = make_sample_set([[0, 0, 0], [4, 0, 0], [8, 0, 0]])
    cands = sc.CandidateSet(positions=[[0, 0, 0], [8, 0, 0]])
    vm = all_visible(samples, cands)
    return sc.build_instance(samples, cands, vm, QualityKind.VISIBILITY)


def test_problem1_k0_trivial():
    rng = np.random.default_rng(0)
    inst = random_instance(rng, 8, 4, QualityKind.VISIBILITY)
    placement, report, result = sc.solve_problem1(inst, 0)
    assert placement == ()
    assert report.objective == 0.0
    assert result.primal == 0.0


def test_problem1_k_equals_m_covers_everything_coverable():
    rng = np.random.default_rng(1)
    inst = random_instance(rng, 12, 5, QualityKind.VISIBILITY)
    _, report, _ = sc.solve_problem1(inst, 5)
    assert report.objective == float(inst.vis.bits.any(axis=1).sum())


def test_problem1_monotone_in_k():
    rng = np.random.default_rng(2)
    inst = random_instance(rng, 20, 6, QualityKind.VISIBILITY)
    prev = -1.0
    for k in range(0, 7):
        _, report, _ = sc.solve_problem1(inst, k)
        assert report.objective >= prev
        prev = report.objective


def test_problem2_line_k2():
    r, placement, _ = sc.solve_problem2(line_instance(), k=2, rho=1.0)
    assert r == pytest.approx(4.0)
    assert set(placement) == {0, 1}


def test_problem2_line_k1():
    r, placement, _ = sc.solve_problem2(line_instance(), k=1, rho=1.0)
    assert r == pytest.approx(8.0)


def test_problem2_rho_zero_gives_smallest_radius():
    inst = line_instance()
    r, _, _ = sc.solve_problem2(inst, k=1, rho=0.0)
    assert r == pytest.approx(candidate_radii(inst)[0])


def test_problem2_infeasible_when_no_visibility():
    samples = make_sample_set([[0, 0, 0], [4, 0, 0]])
    cands = sc.CandidateSet(positions=[[0, 0, 2]])
    vm = sc.VisibilityMatrix(
        bits=np.array([[True], [False]]),
        sample_hash=samples.content_hash(),
        candidate_hash=cands.content_hash(),
    )
    inst = sc.build_instance(samples, cands, vm, QualityKind.VISIBILITY)
    with pytest.raises(sc.InfeasibleError):
        sc.solve_problem2(inst, k=1, rho=1.0)


def test_problem2_result_is_a_witnessed_optimum():
    # exactness: feasible at r*, infeasible at the next smaller candidate radius
    rng = np.random.default_rng(3)
    for _ in range(10):
        inst = random_instance(rng, 10, 5, QualityKind.VISIBILITY)
        if not inst.vis.bits.any():
            continue
        rho = float(rng.choice([0.5, 0.8, 1.0]))
        k = int(rng.integers(1, 4))
        try:
            r_star, placement, _ = sc.solve_problem2(inst, k=k, rho=rho)
        except sc.InfeasibleError:
            continue
        radii = candidate_radii(inst)
        idx = int(np.searchsorted(radii, r_star))
        assert radii[idx] == pytest.approx(r_star)
        from surfcover.ilp import SolveStatus, build_feasibility_model

        assert (
            sc.solve(build_feasibility_model(inst, k, r_star, rho)).status
            is SolveStatus.OPTIMAL
        )
        if idx > 0:
            below = float(radii[idx - 1])
            assert (
                sc.solve(build_feasibility_model(inst, k, below, rho)).status
                is SolveStatus.INFEASIBLE
            )


def test_problem3_huge_threshold_covers_nothing():
    rng = np.random.default_rng(4)
    inst = random_instance(rng, 10, 4, QualityKind.LAMBERT_INVERSE_SQUARE)
    _, report, _ = sc.solve_problem3(inst, 3, threshold=1e9)
    assert report.objective == 0.0


def test_problem3_small_threshold_matches_problem1():
    rng = np.random.default_rng(5)
    lam = random_instance(rng, 12, 5, QualityKind.LAMBERT_INVERSE_SQUARE)
    vis = sc.build_instance(lam.samples, lam.candidates, lam.vis, QualityKind.VISIBILITY)
    floor = lam.phi[lam.phi > 0].min()
    for k in (1, 2, 3):
        _, r3, _ = sc.solve_problem3(lam, k, threshold=floor / 2)
        _, r1, _ = sc.solve_problem1(vis, k)
        # a threshold below every positive quality reduces to plain visibility
        assert r3.objective == r1.objective


def test_problem3_matches_brute_force():
    rng = np.random.default_rng(6)
    for _ in range(10):
        inst = random_instance(rng, 8, 5, QualityKind.LAMBERT_INVERSE_SQUARE)
        k = int(rng.integers(1, 4))
        phi = float(rng.uniform(0.001, 0.05))
        _, report, result = sc.solve_problem3(inst, k, threshold=phi)
        model = IlpModel(ModelKind.THRESHOLD_COVERAGE, inst.phi, k, threshold=phi)
        assert result.primal == sc.brute_force_solve(model).primal


def test_two_phase_quality_refines_without_regressing():
    rng = np.random.default_rng(7)
    pts = np.column_stack([rng.uniform(0, 10, (30, 2)), rng.uniform(0, 0.4, 30)])
    samples = make_sample_set(pts)
    report = sc.two_phase_quality(samples, k=3, plane=sc.PlaneDeployment(3.0))
    assert report.problem == 2
    assert report.refined.objective <= report.coarse.objective + 1e-12
    assert report.certified_factor <= 2.0 + 1e-12
    assert report.refined.positions.shape == (3, 3)


def test_two_phase_quality_k1_certificate_consistent():
    rng = np.random.default_rng(8)
    pts = np.column_stack([rng.uniform(0, 6, (15, 2)), np.zeros(15)])
    samples = make_sample_set(pts)
    report = sc.two_phase_quality(samples, k=1, plane=sc.PlaneDeployment(2.0))
    # k = 1 phase 2 is exactly the constrained 1-center optimum
    exact = sc.min_sphere_fixed_plane(pts, 2.0).radius
    assert report.refined.objective == pytest.approx(exact, abs=1e-9)


def test_two_phase_coverage_room(room_scene):
    mesh, bvh, samples, candidates, vm = room_scene
    inst = sc.build_instance(samples, candidates, vm, QualityKind.VISIBILITY)
    report = sc.two_phase_coverage(
        inst, bvh, k=2, pitch_fine=0.4, neighborhood=0.8, rounds=1
    )
    assert report.problem == 1
    assert report.refined.objective >= report.coarse.objective
    assert report.certified_factor is None


def test_two_phase_coverage_rejects_quality_kind():
    rng = np.random.default_rng(9)
    inst = random_instance(rng, 6, 3, QualityKind.INVERSE_DISTANCE)
    with pytest.raises(ValueError, match="best-quality"):
        sc.two_phase_coverage(inst, None, k=1, pitch_fine=0.5, neighborhood=1.0)


def test_pipeline_report_json_round_trip():
    rng = np.random.default_rng(10)
    pts = np.column_stack([rng.uniform(0, 5, (10, 2)), np.zeros(10)])
    report = sc.two_phase_quality(make_sample_set(pts), k=2, plane=sc.PlaneDeployment(2.0))
    d = report.to_json_dict()
    assert d["problem"] == 2
    assert len(d["phase2"]["positions"]) == 2
    import json

    json.dumps(d)  # must be serializable as-is
