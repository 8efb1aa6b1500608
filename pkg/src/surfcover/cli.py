"""Command-line front end: scene generation, sampling, visibility caching,
the three solvers, the clustering approximation, refinement, sweeps, and
colored exports.

Exit codes: 0 success, 2 usage error, 3 infeasible, 4 time limit hit with the
gap above tolerance.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time

import numpy as np

from . import clustering, drivers, export, refine, scenes
from .coverage import QualityKind, build_instance, evaluate
from .ilp import SolveStatus
from .mesh import (
    generate_candidates_plane,
    load_candidate_set,
    load_obj,
    load_sample_set,
    sample_surface,
    save_json,
    save_obj,
)
from .visibility import build_bvh, load_spvm, save_spvm, visibility_matrix

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INFEASIBLE = 3
EXIT_TIME_LIMIT = 4

RESULT_VERSION = 1

PROBLEM_KIND = {
    1: QualityKind.VISIBILITY,
    2: QualityKind.INVERSE_DISTANCE,
    3: QualityKind.LAMBERT_INVERSE_SQUARE,
}


class UsageError(Exception):
    pass


class StaleCacheError(Exception):
    pass


def _write_result(path, payload: dict, deterministic: bool) -> None:
    payload = {"format_version": RESULT_VERSION, **payload}
    if not deterministic:
        payload["timestamp"] = time.time()
    elif "solve" in payload and payload["solve"]:
        payload["solve"]["elapsed"] = 0.0
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1, sort_keys=True)
        fh.write("\n")


def _load_trio(args):
    samples = load_sample_set(args.samples)
    candidates = load_candidate_set(args.candidates)
    vm = load_spvm(args.vis)
    try:
        vm.check_consistent(samples, candidates)
    except ValueError as exc:
        raise StaleCacheError(
            f"{exc}; re-run: surfcover visibility --mesh ... --samples {args.samples} "
            f"--candidates {args.candidates} --out {args.vis}"
        ) from exc
    return samples, candidates, vm


def _cmd_gen_scene(args) -> int:
    if args.kind == "terrain":
        mesh = scenes.gen_terrain(seed=args.seed, cells=args.cells, amplitude=args.amplitude)
    else:
        # a bed-sized and a counter-sized box furnish the default room
        mesh = scenes.gen_room(
            extent=(6.0, 4.0, 3.0),
            obstacles=[
                ((1.0, 1.0, 0.0), (3.0, 2.2, 0.7)),
                ((4.5, 0.5, 0.0), (5.5, 3.5, 1.1)),
            ],
        )
    save_obj(mesh, args.out)
    return EXIT_OK


def _cmd_sample(args) -> int:
    mesh = load_obj(args.mesh)
    samples = sample_surface(mesh, pitch=args.pitch, drop_downward=args.tau)
    save_json(samples, args.out)
    return EXIT_OK


def _cmd_candidates(args) -> int:
    x0, y0, x1, y1 = args.rect
    cands = generate_candidates_plane(args.plane_z, (x0, y0, x1, y1), args.pitch)
    save_json(cands, args.out)
    return EXIT_OK


def _cmd_visibility(args) -> int:
    samples = load_sample_set(args.samples)
    candidates = load_candidate_set(args.candidates)
    if os.path.exists(args.out):
        try:
            cached = load_spvm(args.out)
            cached.check_consistent(samples, candidates)
            return EXIT_OK  # cache hit keyed by content hashes
        except ValueError:
            pass  # stale or foreign file: recompute below
    mesh = load_obj(args.mesh)
    bvh = build_bvh(mesh)
    vm = visibility_matrix(bvh, samples, candidates)
    save_spvm(vm, args.out)
    return EXIT_OK


def _check_solve_flags(args) -> None:
    if args.problem != 3 and args.phi is not None:
        raise UsageError("--phi only applies to --problem 3")
    if args.problem != 2 and args.rho is not None:
        raise UsageError("--rho only applies to --problem 2")
    if args.problem == 3 and args.phi is None:
        raise UsageError("--problem 3 requires --phi")


def _cmd_solve(args) -> int:
    _check_solve_flags(args)
    samples, candidates, vm = _load_trio(args)
    instance = build_instance(samples, candidates, vm, PROBLEM_KIND[args.problem])
    params: dict = {}
    if args.problem == 1:
        placement, report, result = drivers.solve_problem1(
            instance, args.k, time_limit=args.time_limit, gap_tol=args.gap
        )
        objective = report.objective
        extra = {"coverage_ratio": report.coverage_ratio(len(samples))}
    elif args.problem == 2:
        rho = args.rho if args.rho is not None else 1.0
        params["rho"] = rho
        r_star, placement, result = drivers.solve_problem2(
            instance, args.k, rho, time_limit=args.time_limit
        )
        objective = r_star
        extra = {"radius": r_star, "min_quality": (1.0 / r_star) if r_star > 0 else None}
    else:
        params["phi"] = args.phi
        placement, report, result = drivers.solve_problem3(
            instance, args.k, args.phi, time_limit=args.time_limit, gap_tol=args.gap
        )
        objective = report.objective
        extra = {"coverage_ratio": report.coverage_ratio(len(samples))}
    payload = {
        "problem": args.problem,
        "k": args.k,
        "params": params,
        "placement": list(placement),
        "positions": candidates.positions[list(placement)].tolist(),
        "objective": objective,
        "solve": result.to_json_dict(),
        **extra,
    }
    _write_result(args.out, payload, args.deterministic)
    if result.status is SolveStatus.INFEASIBLE:
        return EXIT_INFEASIBLE
    if result.status is SolveStatus.TIME_LIMIT:
        return EXIT_TIME_LIMIT
    return EXIT_OK


def _cmd_approx(args) -> int:
    samples = load_sample_set(args.samples)
    plane = clustering.PlaneDeployment(height=args.plane_z)
    centers = clustering.farthest_point_clustering(samples, args.k, plane)
    radius = clustering.coverage_radius(centers, samples)
    payload = {
        "problem": 2,
        "method": "farthest-point-clustering",
        "k": args.k,
        "params": {"plane_z": args.plane_z},
        "placement": None,
        "positions": centers.positions.tolist(),
        "objective": radius,
        "radius": radius,
        "solve": None,
    }
    _write_result(args.out, payload, args.deterministic)
    return EXIT_OK


def _cmd_refine(args) -> int:
    with open(args.infile) as fh:
        prev = json.load(fh)
    if args.method == "onecenter":
        samples = load_sample_set(args.samples)
        plane_z = prev.get("params", {}).get("plane_z")
        if plane_z is None:
            raise UsageError("--method onecenter needs a result produced by `approx`")
        positions, radius = refine.improve_quality_max(
            samples, np.array(prev["positions"]), plane_z
        )
        payload = {
            **{k: prev[k] for k in ("problem", "k", "params")},
            "method": "onecenter-refined",
            "placement": None,
            "positions": positions.tolist(),
            "objective": radius,
            "radius": radius,
            "solve": None,
        }
    else:
        samples, candidates, vm = _load_trio(args)
        problem = prev["problem"]
        if problem == 2:
            raise UsageError("--method grid refines problem 1/3 results; use onecenter")
        instance = build_instance(samples, candidates, vm, PROBLEM_KIND[problem])
        mesh = load_obj(args.mesh)
        bvh = build_bvh(mesh)
        neighborhood = args.neighborhood or 2 * args.fine_pitch
        positions, objective = refine.refine_grid(
            instance,
            prev["placement"],
            bvh,
            pitch_fine=args.fine_pitch,
            rounds=args.rounds,
            neighborhood=neighborhood,
            threshold=prev.get("params", {}).get("phi"),
        )
        payload = {
            **{k: prev[k] for k in ("problem", "k", "params")},
            "method": "grid-refined",
            "placement": None,
            "positions": positions.tolist(),
            "objective": objective,
            "solve": None,
        }
    _write_result(args.out, payload, args.deterministic)
    return EXIT_OK


def _parse_k_range(text: str) -> range:
    try:
        a, b = text.split("..")
        return range(int(a), int(b) + 1)
    except ValueError as exc:
        raise UsageError(f"bad --k-range {text!r}; expected A..B") from exc


def _cmd_sweep(args) -> int:
    _check_solve_flags(args)
    samples, candidates, vm = _load_trio(args)
    instance = build_instance(samples, candidates, vm, PROBLEM_KIND[args.problem])
    rows = []
    for k in _parse_k_range(args.k_range):
        t0 = time.perf_counter()
        if args.problem == 1:
            _, report, result = drivers.solve_problem1(instance, k, time_limit=args.time_limit)
            objective = report.objective
        elif args.problem == 2:
            rho = args.rho if args.rho is not None else 1.0
            r_star, _, result = drivers.solve_problem2(instance, k, rho, time_limit=args.time_limit)
            objective = r_star
        else:
            _, report, result = drivers.solve_problem3(
                instance, k, args.phi, time_limit=args.time_limit
            )
            objective = report.objective
        elapsed = 0.0 if args.deterministic else time.perf_counter() - t0
        rows.append((k, objective, result.gap, elapsed))
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["k", "objective", "gap", "elapsed"])
        writer.writerows(rows)
    return EXIT_OK


def _cmd_export(args) -> int:
    with open(args.infile) as fh:
        prev = json.load(fh)
    samples, candidates, vm = _load_trio(args)
    problem = prev["problem"]
    instance = build_instance(samples, candidates, vm, PROBLEM_KIND[problem])
    placement = prev.get("placement") or []
    colors = export.sample_colors(
        instance, placement, threshold=prev.get("params", {}).get("phi")
    )
    export.write_ply(args.out, samples.positions, colors)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="surfcover", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def add_det(sp):
        sp.add_argument("--deterministic", action="store_true",
                        help="omit timestamps so identical inputs give identical bytes")

    sp = sub.add_parser("gen-scene", help="generate a synthetic scene mesh")
    sp.add_argument("--kind", choices=["terrain", "room"], required=True)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--cells", type=int, default=20)
    sp.add_argument("--amplitude", type=float, default=0.5)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=_cmd_gen_scene)

    sp = sub.add_parser("sample", help="grid-sample a mesh surface")
    sp.add_argument("--mesh", required=True)
    sp.add_argument("--pitch", type=float, required=True)
    sp.add_argument("--tau", type=float, default=0.0)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=_cmd_sample)

    sp = sub.add_parser("candidates", help="candidate grid on a horizontal plane")
    sp.add_argument("--plane-z", type=float, required=True)
    sp.add_argument("--rect", type=float, nargs=4, metavar=("X0", "Y0", "X1", "Y1"),
                    required=True)
    sp.add_argument("--pitch", type=float, required=True)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=_cmd_candidates)

    sp = sub.add_parser("visibility", help="precompute the visibility matrix (cached)")
    sp.add_argument("--mesh", required=True)
    sp.add_argument("--samples", required=True)
    sp.add_argument("--candidates", required=True)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=_cmd_visibility)

    sp = sub.add_parser("solve", help="solve problem 1, 2, or 3 exactly")
    sp.add_argument("--problem", type=int, choices=[1, 2, 3], required=True)
    sp.add_argument("--k", type=int, required=True)
    sp.add_argument("--phi", type=float, default=None)
    sp.add_argument("--rho", type=float, default=None)
    sp.add_argument("--time-limit", type=float, default=None)
    sp.add_argument("--gap", type=float, default=0.0)
    sp.add_argument("--samples", required=True)
    sp.add_argument("--candidates", required=True)
    sp.add_argument("--vis", required=True)
    sp.add_argument("--out", required=True)
    add_det(sp)
    sp.set_defaults(func=_cmd_solve)

    sp = sub.add_parser("approx", help="farthest-point clustering on a plane")
    sp.add_argument("--samples", required=True)
    sp.add_argument("--k", type=int, required=True)
    sp.add_argument("--plane-z", type=float, required=True)
    sp.add_argument("--out", required=True)
    add_det(sp)
    sp.set_defaults(func=_cmd_approx)

    sp = sub.add_parser("refine", help="local improvement of a previous result")
    sp.add_argument("--method", choices=["grid", "onecenter"], required=True)
    sp.add_argument("--rounds", type=int, default=3)
    sp.add_argument("--fine-pitch", type=float, default=0.1)
    sp.add_argument("--neighborhood", type=float, default=None)
    sp.add_argument("--mesh")
    sp.add_argument("--samples", required=True)
    sp.add_argument("--candidates")
    sp.add_argument("--vis")
    sp.add_argument("--in", dest="infile", required=True)
    sp.add_argument("--out", required=True)
    add_det(sp)
    sp.set_defaults(func=_cmd_refine)

    sp = sub.add_parser("sweep", help="objective vs k curve as CSV")
    sp.add_argument("--problem", type=int, choices=[1, 2, 3], required=True)
    sp.add_argument("--k-range", required=True, help="A..B inclusive")
    sp.add_argument("--phi", type=float, default=None)
    sp.add_argument("--rho", type=float, default=None)
    sp.add_argument("--time-limit", type=float, default=None)
    sp.add_argument("--samples", required=True)
    sp.add_argument("--candidates", required=True)
    sp.add_argument("--vis", required=True)
    sp.add_argument("--out", required=True)
    add_det(sp)
    sp.set_defaults(func=_cmd_sweep)

    sp = sub.add_parser("export", help="colored PLY of per-sensor coverage")
    sp.add_argument("--coloring", choices=["per-sensor"], default="per-sensor")
    sp.add_argument("--in", dest="infile", required=True)
    sp.add_argument("--samples", required=True)
    sp.add_argument("--candidates", required=True)
    sp.add_argument("--vis", required=True)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=_cmd_export)

    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except StaleCacheError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except drivers.InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE


if __name__ == "__main__":
    sys.exit(main())
