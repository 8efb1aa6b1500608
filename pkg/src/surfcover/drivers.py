"""End-to-end solvers for the three coverage problems and the two-phase
coarse-solve + local-improvement pipeline."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import clustering, refine
from .coverage import CoverageInstance, CoverageReport, QualityKind, evaluate
from .ilp import (
    SolveResult,
    SolveStatus,
    build_cumulative_model,
    build_feasibility_model,
    build_visibility_model,
    solve,
)
from .visibility import Bvh


class InfeasibleError(RuntimeError):
    """The demanded coverage ratio is unachievable with the given budget."""


def solve_problem1(
    instance: CoverageInstance,
    k: int,
    time_limit: float | None = None,
    gap_tol: float = 0.0,
) -> tuple[tuple[int, ...], CoverageReport, SolveResult]:
    """Maximize the number of samples visible to at least one of k sensors."""
    if k == 0:
        report = evaluate(instance, [])
        return (), report, _trivial_result()
    model = build_visibility_model(instance, k)
    result = solve(model, time_limit=time_limit, gap_tol=gap_tol)
    placement = result.placement or ()
    report = evaluate(instance, placement)
    return placement, report, result


def solve_problem3(
    instance: CoverageInstance,
    k: int,
    threshold: float,
    time_limit: float | None = None,
    gap_tol: float = 0.0,
) -> tuple[tuple[int, ...], CoverageReport, SolveResult]:
    """Maximize the number of samples whose summed quality reaches the
    threshold."""
    if k == 0:
        report = evaluate(instance, [], threshold=threshold)
        return (), report, _trivial_result()
    model = build_cumulative_model(instance, k, threshold)
    result = solve(model, time_limit=time_limit, gap_tol=gap_tol)
    placement = result.placement or ()
    report = evaluate(instance, placement, threshold=threshold)
    return placement, report, result


def candidate_radii(instance: CoverageInstance) -> np.ndarray:
    """Sorted distinct sample-candidate distances over visible pairs; the
    optimal max-min radius is always one of these."""
    dist = np.linalg.norm(
        instance.candidates.positions[None, :, :] - instance.samples.positions[:, None, :],
        axis=2,
    )
    vals = dist[instance.vis.bits]
    if vals.size == 0:
        raise InfeasibleError("no visible sample-candidate pair at all")
    return np.unique(vals)


def solve_problem2(
    instance: CoverageInstance,
    k: int,
    rho: float,
    time_limit: float | None = None,
) -> tuple[float, tuple[int, ...], SolveResult]:
    """Smallest radius r such that k sensors within distance r (and visible)
    can cover a rho fraction of the samples; binary search over the finite set
    of pairwise distances, each step an exact feasibility solve.
    """
    radii = candidate_radii(instance)
    hi = len(radii) - 1
    top = solve(
        build_feasibility_model(instance, k, float(radii[hi]), rho),
        time_limit=time_limit,
    )
    if top.status is not SolveStatus.OPTIMAL:
        raise InfeasibleError(
            f"coverage ratio {rho} unachievable with {k} sensors even at the "
            f"largest radius {radii[hi]:.6g}"
        )
    lo = 0
    best = (float(radii[hi]), top)
    while lo <= hi:
        mid = (lo + hi) // 2
        r = float(radii[mid])
        res = solve(build_feasibility_model(instance, k, r, rho), time_limit=time_limit)
        if res.status is SolveStatus.OPTIMAL:
            best = (r, res)
            hi = mid - 1
        else:
            lo = mid + 1
    r_star, res = best
    return r_star, res.placement or (), res


def _trivial_result() -> SolveResult:
    return SolveResult(
        status=SolveStatus.OPTIMAL,
        placement=(),
        primal=0.0,
        dual_bound=0.0,
        gap=0.0,
        nodes=0,
        elapsed=0.0,
    )


# ---------------------------------------------------------------------------
# Two-phase pipeline


@dataclass(frozen=True)
class PhaseReport:
    objective: float
    elapsed: float
    positions: np.ndarray  # (k, 3) sensor positions after the phase


@dataclass(frozen=True)
class PipelineReport:
    problem: int
    coarse: PhaseReport
    refined: PhaseReport
    certified_factor: float | None  # problem 2 only

    def to_json_dict(self) -> dict:
        return {
            "problem": self.problem,
            "phase1": {
                "objective": self.coarse.objective,
                "elapsed": self.coarse.elapsed,
                "positions": self.coarse.positions.tolist(),
            },
            "phase2": {
                "objective": self.refined.objective,
                "elapsed": self.refined.elapsed,
                "positions": self.refined.positions.tolist(),
            },
            "certified_factor": self.certified_factor,
        }


def two_phase_coverage(
    instance: CoverageInstance,
    bvh: Bvh,
    k: int,
    pitch_fine: float,
    neighborhood: float,
    threshold: float | None = None,
    rounds: int = 3,
    time_limit: float | None = None,
    bounds=None,
) -> PipelineReport:
    """Coarse ILP then per-sensor grid refinement, for the visibility (problem
    1) and cumulative (problem 3) objectives."""
    t0 = time.perf_counter()
    if instance.kind is QualityKind.VISIBILITY:
        placement, report, _ = solve_problem1(instance, k, time_limit=time_limit)
        problem = 1
    elif instance.kind is QualityKind.LAMBERT_INVERSE_SQUARE:
        placement, report, _ = solve_problem3(
            instance, k, threshold, time_limit=time_limit
        )
        problem = 3
    else:
        raise ValueError("use two_phase_quality for the best-quality objective")
    coarse_pos = instance.candidates.positions[list(placement)]
    coarse = PhaseReport(report.objective, time.perf_counter() - t0, coarse_pos)

    t1 = time.perf_counter()
    positions, objective = refine.refine_grid(
        instance,
        placement,
        bvh,
        pitch_fine=pitch_fine,
        rounds=rounds,
        neighborhood=neighborhood,
        threshold=threshold,
        bounds=bounds,
    )
    refined = PhaseReport(objective, time.perf_counter() - t1, positions)
    return PipelineReport(problem, coarse, refined, certified_factor=None)


def two_phase_quality(
    samples,
    k: int,
    plane: clustering.PlaneDeployment,
    phase1_factor: float = 2.0,
) -> PipelineReport:
    """Farthest-point clustering then constrained-1-center iteration for the
    best-quality (max-min distance) objective with relaxed visibility.

    The certified global factor is the phase-1 approximation factor scaled by
    the achieved radius-reduction ratio: improving a factor-2 start from r to
    0.75 r certifies factor 1.5.
    """
    t0 = time.perf_counter()
    centers = clustering.farthest_point_clustering(samples, k, plane)
    r1 = clustering.coverage_radius(centers, samples)
    coarse = PhaseReport(r1, time.perf_counter() - t0, centers.positions.copy())

    t1 = time.perf_counter()
    new_pos, r2 = refine.improve_quality_max(samples, centers.positions, plane.height)
    refined = PhaseReport(r2, time.perf_counter() - t1, new_pos)
    factor = phase1_factor * (r2 / r1) if r1 > 0 else phase1_factor
    return PipelineReport(2, coarse, refined, certified_factor=factor)
