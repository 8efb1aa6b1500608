"""0/1 coverage models and an embedded deterministic branch-and-bound solver.

Three model kinds are built from a coverage instance:

* max-visibility coverage: pick at most k candidates maximizing the number of
  samples seen by at least one pick,
* threshold coverage: a sample counts when the summed quality of the picks
  reaches the threshold,
* feasibility cover: can k picks, restricted to candidates within a radius and
  visible, cover at least ceil(N * rho) samples?

The solver branches only on the selection variables: for a fixed selection the
coverage variables are determined greedily, which is optimal for all three
kinds. Branching and tie-breaking are fully deterministic so identical inputs
always produce identical results.
"""

from __future__ import annotations

import enum
import itertools
import math
import sys
import time
from dataclasses import dataclass

import numpy as np

from .coverage import CoverageInstance, QualityKind

BRUTE_FORCE_CAP = 10**6
THRESHOLD_TOL = 1e-9  # slack for float comparisons against the quality threshold


class ModelKind(enum.Enum):
    MAX_VISIBILITY_COVERAGE = "max-visibility-coverage"
    THRESHOLD_COVERAGE = "threshold-coverage"
    FEASIBILITY_COVER = "feasibility-cover"


class SolveStatus(enum.Enum):
    OPTIMAL = "optimal"
    FEASIBLE = "feasible"
    INFEASIBLE = "infeasible"
    TIME_LIMIT = "time-limit"


@dataclass(frozen=True)
class IlpModel:
    kind: ModelKind
    cover: np.ndarray  # (N, M): bool mask for visibility/feasibility kinds,
    # non-negative quality coefficients for the threshold kind
    k: int
    threshold: float | None = None  # threshold kind only
    radius: float | None = None  # feasibility kind only
    rho: float | None = None  # feasibility kind only

    @property
    def n_samples(self) -> int:
        return self.cover.shape[0]

    @property
    def n_candidates(self) -> int:
        return self.cover.shape[1]

    @property
    def coverage_target(self) -> int:
        """RHS of the ratio row, ceil(N * rho); the covered count is integral."""
        if self.kind is not ModelKind.FEASIBILITY_COVER:
            raise ValueError("coverage target only exists for the feasibility kind")
        return math.ceil(self.n_samples * self.rho - 1e-12)

    def covered_count(self, selected) -> int:
        """Number of samples covered by the given selection (y set greedily)."""
        selected = list(selected)
        if not selected:
            return 0
        if self.kind is ModelKind.THRESHOLD_COVERAGE:
            sums = self.cover[:, selected].sum(axis=1)
            return int((sums >= self.threshold - THRESHOLD_TOL).sum())
        return int(self.cover[:, selected].any(axis=1).sum())


@dataclass(frozen=True)
class SolveResult:
    status: SolveStatus
    placement: tuple[int, ...] | None
    primal: float
    dual_bound: float
    gap: float
    nodes: int
    elapsed: float

    def to_json_dict(self) -> dict:
        return {
            "status": self.status.value,
            "placement": list(self.placement) if self.placement is not None else None,
            "primal": self.primal,
            "dual_bound": self.dual_bound,
            "gap": self.gap,
            "nodes": self.nodes,
            "elapsed": self.elapsed,
        }


# ---------------------------------------------------------------------------
# Model builders


def build_visibility_model(instance: CoverageInstance, k: int) -> IlpModel:
    if instance.kind is not QualityKind.VISIBILITY:
        raise ValueError("visibility model requires a visibility-kind instance")
    _check_budget(k, instance.n_candidates)
    return IlpModel(
        kind=ModelKind.MAX_VISIBILITY_COVERAGE,
        cover=instance.vis.bits.copy(),
        k=k,
    )


def build_cumulative_model(instance: CoverageInstance, k: int, threshold: float) -> IlpModel:
    if instance.kind is not QualityKind.LAMBERT_INVERSE_SQUARE:
        raise ValueError("cumulative model requires a Lambert inverse-square instance")
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    _check_budget(k, instance.n_candidates)
    return IlpModel(
        kind=ModelKind.THRESHOLD_COVERAGE,
        cover=instance.phi.copy(),
        k=k,
        threshold=float(threshold),
    )


def build_feasibility_model(
    instance: CoverageInstance, k: int, radius: float, rho: float
) -> IlpModel:
    if radius < 0:
        raise ValueError("radius must be nonnegative")
    if not 0 < rho <= 1:
        # rho == 0 demands nothing and is allowed as a degenerate edge
        if rho != 0:
            raise ValueError("rho must be in (0, 1]")
    _check_budget(k, instance.n_candidates)
    dist = np.linalg.norm(
        instance.candidates.positions[None, :, :] - instance.samples.positions[:, None, :],
        axis=2,
    )
    allowed = instance.vis.bits & (dist <= radius)
    return IlpModel(
        kind=ModelKind.FEASIBILITY_COVER,
        cover=allowed,
        k=k,
        radius=float(radius),
        rho=float(rho),
    )


def _check_budget(k: int, m: int) -> None:
    if k < 0:
        raise ValueError("sensor budget k must be non-negative")
    # k > M is allowed; the cardinality row is simply non-binding


# ---------------------------------------------------------------------------
# Branch and bound


def _greedy_scores(model: IlpModel, covered_f, free: np.ndarray) -> np.ndarray:
    """Marginal value of each free candidate given the current selection.

    For the boolean kinds this is the count of newly covered samples. For the
    threshold kind it is the summed fractional progress toward each still
    uncovered sample's remaining deficit.
    """
    if model.kind is ModelKind.THRESHOLD_COVERAGE:
        need = np.maximum(model.threshold - covered_f, 0.0)
        open_rows = need > THRESHOLD_TOL
        if not open_rows.any():
            return np.zeros(len(free))
        sub = model.cover[np.ix_(open_rows, free)]
        return np.minimum(sub, need[open_rows, None]).sum(axis=0)
    uncovered = ~covered_f
    if not uncovered.any():
        return np.zeros(len(free))
    return model.cover[np.ix_(uncovered, free)].sum(axis=0).astype(np.float64)


def _upper_bound(model: IlpModel, covered_f, free: np.ndarray, budget: int) -> int:
    """Valid optimistic covered-count bound for the subtree (selection fixed,
    `free` still undecided, `budget` picks left)."""
    if model.kind is ModelKind.THRESHOLD_COVERAGE:
        need = model.threshold - covered_f
        if budget == 0 or free.size == 0:
            reachable = need <= THRESHOLD_TOL
        else:
            sub = model.cover[:, free]
            t = min(budget, free.size)
            if t >= sub.shape[1]:
                top = sub.sum(axis=1)
            else:
                part = np.partition(sub, sub.shape[1] - t, axis=1)
                top = part[:, sub.shape[1] - t :].sum(axis=1)
            # each sample independently takes its t best free contributions
            reachable = need <= top + THRESHOLD_TOL
        return int(reachable.sum())
    base = int(covered_f.sum())
    if budget == 0 or free.size == 0:
        return base
    uncovered = ~covered_f
    gains = model.cover[np.ix_(uncovered, free)].sum(axis=0)
    t = min(budget, free.size)
    if t < gains.size:
        gains = np.partition(gains, gains.size - t)[gains.size - t :]
    # coverage is submodular: summing individual marginals over-counts overlap
    return base + int(gains.sum())


def _coverage_state(model: IlpModel, selected: list[int]):
    """State vector the bound works from: covered mask, or accumulated sums."""
    if model.kind is ModelKind.THRESHOLD_COVERAGE:
        if not selected:
            return np.zeros(model.n_samples)
        return model.cover[:, selected].sum(axis=1)
    if not selected:
        return np.zeros(model.n_samples, dtype=bool)
    return model.cover[:, selected].any(axis=1)


def _count_covered(model: IlpModel, covered_f) -> int:
    if model.kind is ModelKind.THRESHOLD_COVERAGE:
        return int((covered_f >= model.threshold - THRESHOLD_TOL).sum())
    return int(covered_f.sum())


def _greedy_incumbent(model: IlpModel) -> list[int]:
    """Greedy pick + first-improving 1-swaps; deterministic warm start."""
    selected: list[int] = []
    free = np.arange(model.n_candidates)
    state = _coverage_state(model, selected)
    for _ in range(min(model.k, model.n_candidates)):
        scores = _greedy_scores(model, state, free)
        best = int(np.argmax(scores))  # argmax keeps lowest index on ties
        if scores[best] <= 0:
            break
        j = int(free[best])
        selected.append(j)
        free = free[free != j]
        state = _coverage_state(model, selected)
        if free.size == 0:
            break
    # 1-swap local improvement
    improved = True
    rounds = 0
    while improved and rounds < 20:
        improved = False
        rounds += 1
        current = model.covered_count(selected)
        for si in range(len(selected)):
            for j in range(model.n_candidates):
                if j in selected:
                    continue
                trial = selected[:si] + [j] + selected[si + 1 :]
                if model.covered_count(trial) > current:
                    selected = trial
                    improved = True
                    current = model.covered_count(selected)
                    break
            if improved:
                break
    return selected


def solve(
    model: IlpModel,
    time_limit: float | None = None,
    gap_tol: float = 0.0,
) -> SolveResult:
    """Exact deterministic branch and bound over the selection variables.

    Depth-first, branching on the free candidate with the largest greedy
    score (lowest index on ties), select-first. The dual bound at each node is
    the greedy fractional cover bound, valid by submodularity for the boolean
    kinds and by per-sample relaxation for the threshold kind. The feasibility
    kind exits early once the coverage target is met.
    """
    start = time.perf_counter()
    n, m = model.n_samples, model.n_candidates
    k = min(model.k, m)
    target = model.coverage_target if model.kind is ModelKind.FEASIBILITY_COVER else None

    incumbent = _greedy_incumbent(model)
    inc_value = model.covered_count(incumbent)
    nodes = 0
    timed_out = False
    open_bound = -math.inf  # best bound among subtrees cut off by the clock
    found_target = target is not None and inc_value >= target

    root_free = np.arange(m)

    def dfs(selected: list[int], free: np.ndarray):
        nonlocal nodes, incumbent, inc_value, timed_out, open_bound, found_target
        if timed_out or found_target:
            return
        nodes += 1
        if time_limit is not None and time.perf_counter() - start > time_limit:
            timed_out = True
            bound = _upper_bound(model, _coverage_state(model, selected), free, k - len(selected))
            open_bound = max(open_bound, bound)
            return
        state = _coverage_state(model, selected)
        value = _count_covered(model, state)
        if value > inc_value:
            incumbent, inc_value = list(selected), value
            if target is not None and inc_value >= target:
                found_target = True
                return
        budget = k - len(selected)
        if budget == 0 or free.size == 0:
            return
        bound = _upper_bound(model, state, free, budget)
        if bound <= inc_value:
            return
        scores = _greedy_scores(model, state, free)
        pick = int(free[int(np.argmax(scores))])
        rest = free[free != pick]
        dfs(selected + [pick], rest)  # value 1 first
        if timed_out or found_target:
            if timed_out:
                open_bound = max(
                    open_bound,
                    _upper_bound(model, state, rest, budget),
                )
            return
        dfs(selected, rest)

    if k > 0:
        # one frame per decided candidate; headroom over the default limit
        sys.setrecursionlimit(max(sys.getrecursionlimit(), 4 * m + 1000))
        dfs([], root_free)

    elapsed = time.perf_counter() - start
    primal = float(inc_value)
    placement = tuple(sorted(incumbent))

    if model.kind is ModelKind.FEASIBILITY_COVER:
        if found_target:
            return SolveResult(
                status=SolveStatus.OPTIMAL,
                placement=placement,
                primal=primal,
                dual_bound=primal,
                gap=0.0,
                nodes=nodes,
                elapsed=elapsed,
            )
        if timed_out:
            dual = max(primal, open_bound)
            gap = (dual - primal) / max(1.0, abs(primal))
            return SolveResult(SolveStatus.TIME_LIMIT, placement, primal, dual, gap, nodes, elapsed)
        return SolveResult(
            status=SolveStatus.INFEASIBLE,
            placement=None,
            primal=primal,
            dual_bound=primal,
            gap=0.0,
            nodes=nodes,
            elapsed=elapsed,
        )

    if timed_out:
        dual = max(primal, open_bound)
        gap = (dual - primal) / max(1.0, abs(primal))
        status = SolveStatus.FEASIBLE if gap <= gap_tol else SolveStatus.TIME_LIMIT
        return SolveResult(status, placement, primal, dual, gap, nodes, elapsed)
    return SolveResult(
        status=SolveStatus.OPTIMAL,
        placement=placement,
        primal=primal,
        dual_bound=primal,
        gap=0.0,
        nodes=nodes,
        elapsed=elapsed,
    )


# ---------------------------------------------------------------------------
# Brute-force oracle


def brute_force_solve(model: IlpModel) -> SolveResult:
    """Exhaustive enumeration of all k-subsets; ground truth for tests."""
    start = time.perf_counter()
    m = model.n_candidates
    k = min(model.k, m)
    if math.comb(m, k) > BRUTE_FORCE_CAP:
        raise ValueError(f"C({m}, {k}) exceeds the brute-force cap of {BRUTE_FORCE_CAP}")
    best_value = 0
    best: tuple[int, ...] = ()
    count = 0
    for combo in itertools.combinations(range(m), k):
        count += 1
        value = model.covered_count(combo)
        if value > best_value:
            best_value, best = value, combo
    elapsed = time.perf_counter() - start
    if model.kind is ModelKind.FEASIBILITY_COVER:
        feasible = best_value >= model.coverage_target
        return SolveResult(
            status=SolveStatus.OPTIMAL if feasible else SolveStatus.INFEASIBLE,
            placement=best if feasible else None,
            primal=float(best_value),
            dual_bound=float(best_value),
            gap=0.0,
            nodes=count,
            elapsed=elapsed,
        )
    return SolveResult(
        status=SolveStatus.OPTIMAL,
        placement=best,
        primal=float(best_value),
        dual_bound=float(best_value),
        gap=0.0,
        nodes=count,
        elapsed=elapsed,
    )


# ---------------------------------------------------------------------------
# CPLEX-LP export


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def export_lp(model: IlpModel, path) -> None:
    """Write the model in CPLEX LP text format for external MILP solvers."""
    n, m = model.n_samples, model.n_candidates
    lines = ["Maximize", " obj: " + _join_sum([f"y{i}" for i in range(n)]), "Subject To"]
    if model.kind is ModelKind.THRESHOLD_COVERAGE:
        for i in range(n):
            terms = [f"{_fmt(model.threshold)} y{i}"]
            for j in range(m):
                coef = model.cover[i, j]
                if coef > 0:
                    terms.append(f"- {_fmt(coef)} z{j}")
            lines.append(f" cov{i}: " + " ".join(terms) + " <= 0")
    else:
        for i in range(n):
            terms = [f"y{i}"]
            for j in range(m):
                if model.cover[i, j]:
                    terms.append(f"- z{j}")
            lines.append(f" cov{i}: " + " ".join(terms) + " <= 0")
    lines.append(" card: " + _join_sum([f"z{j}" for j in range(m)]) + f" <= {model.k}")
    if model.kind is ModelKind.FEASIBILITY_COVER:
        lines.append(
            " ratio: "
            + _join_sum([f"y{i}" for i in range(n)])
            + f" >= {model.coverage_target}"
        )
    lines.append("Binary")
    names = [f"y{i}" for i in range(n)] + [f"z{j}" for j in range(m)]
    for chunk in range(0, len(names), 16):
        lines.append(" " + " ".join(names[chunk : chunk + 16]))
    lines.append("End")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _join_sum(names: list[str]) -> str:
    return " + ".join(names)
