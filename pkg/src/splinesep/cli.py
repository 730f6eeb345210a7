"""Command-line entry point: plan one trajectory, run the benchmark sweep,
re-certify a stored result, or re-plot stored results.

Exit codes are a stable contract: 0 certified success, 1 input error,
2 solver failure, 3 certification failure.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import bench, transcription as tr
from .errors import SplinesepError
from .geometry import ConvexPolytope
from .planner import Planner, PlannerConfig, certify_arrays

SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_SOLVER = 2
EXIT_CERT = 3


def _load_env(path: str) -> tuple[list[ConvexPolytope], float, float]:
    with open(path) as fh:
        data = json.load(fh)
    obstacles = [ConvexPolytope(np.asarray(o["vertices"], dtype=float))
                 for o in data.get("obstacles", [])]
    robot = data.get("robot", {})
    return obstacles, float(robot.get("radius", 0.2)), float(robot.get("eps", 0.05))


def _parse_xy(text: str) -> np.ndarray:
    parts = [float(v) for v in text.split(",")]
    if len(parts) not in (2, 3):
        raise ValueError("expected 'x,y' or 'x,y,theta'")
    return np.asarray(parts)


def _result_to_json(res, problem) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "status": res.status,
        "T_s": res.T,
        "states": res.states.tolist(),
        "controls": res.controls.tolist(),
        "position_coeffs": res.position_coeffs.tolist(),
        "robot": {"radius": problem.robot_radius, "eps": problem.safety_margin},
        "schedule": None if res.schedule is None else {
            "normals": res.schedule.normals.tolist(),
            "offsets": res.schedule.offsets.tolist(),
        },
        "trace": {"status": res.trace.status, "message": res.trace.message,
                  "iterations": res.trace.iterations},
        "certification": None if res.certification is None else {
            "ok": res.certification.ok,
            "coeff_ok": res.certification.coeff_ok,
            "sampled_ok": res.certification.sampled_ok,
            "min_coefficient": res.certification.min_coefficient,
            "min_sampled_clearance": res.certification.min_sampled_clearance,
            "required_clearance": res.certification.required_clearance,
            "violations": [list(v) for v in res.certification.violations],
        },
        "wall_time_s": res.wall_time,
    }


def cmd_plan(args) -> int:
    try:
        obstacles, radius, eps = ([], 0.2, 0.05)
        if args.env:
            obstacles, radius, eps = _load_env(args.env)
        if args.eps is not None:
            eps = args.eps
        start, goal = _parse_xy(args.start), _parse_xy(args.goal)
        delta = goal[:2] - start[:2]
        heading = math.atan2(delta[1], delta[0])
        x_start = start if len(start) == 3 else np.array([*start, heading])
        x_goal = goal if len(goal) == 3 else np.array([*goal, heading])
        problem = tr.PlanningProblem(
            x_start=x_start, x_goal=x_goal, obstacles=obstacles,
            robot_radius=radius, safety_margin=eps,
            n_intervals=args.n_intervals)
        planner = Planner(problem, PlannerConfig(variant=args.method))
    except (OSError, ValueError, KeyError, SplinesepError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT

    res = planner.plan()
    payload = _result_to_json(res, problem)
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(payload, fh, indent=2)
    else:
        json.dump(payload, sys.stdout, indent=2)
        print()
    print(f"status={res.status} T={res.T:.4f}s iters={res.trace.iterations}",
          file=sys.stderr)
    if res.status == "success":
        return EXIT_OK
    if res.certification is not None and not res.certification.ok:
        return EXIT_CERT
    return EXIT_SOLVER


def cmd_bench(args) -> int:
    try:
        counts = _parse_counts(args.obstacles)
        parallel = int(os.environ.get("SPLINESEP_THREADS", args.parallel))
        suite = bench.generate_suite(args.seed, counts, n_trials=args.trials)
    except (ValueError, SplinesepError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    os.makedirs(args.out_dir, exist_ok=True)
    for n, env in suite.environments.items():
        with open(os.path.join(args.out_dir, f"env_{n}.json"), "w") as fh:
            json.dump(env.to_json(), fh, indent=2)
    rows = bench.run_benchmark(suite, parallelism=parallel)
    summary = bench.report(rows, args.out_dir)
    _print_summary(summary)
    print(f"parallelism={parallel}", file=sys.stderr)
    return EXIT_OK


def _parse_counts(spec: str) -> list[int]:
    counts = []
    for part in spec.split(","):
        if "-" in part:
            a, b = part.split("-")
            counts.extend(range(int(a), int(b) + 1))
        else:
            counts.append(int(part))
    if not counts or any(not 1 <= c <= 10 for c in counts):
        raise ValueError("obstacle counts must lie in 1..10")
    return counts


def _print_summary(summary: dict) -> None:
    per = summary["per_obstacle_count"]
    methods = sorted({m for block in per.values() for m in block})
    print(f"{'N_o':>4} {'method':>10} {'succ%':>6} {'t_wall ms':>10} "
          f"{'iters':>6} {'T s':>8} {'|eps|%':>7}")
    for n in sorted(per, key=int):
        for m in methods:
            b = per[n][m]
            print(f"{n:>4} {m:>10} {100 * b['success_rate']:>6.1f} "
                  f"{b['median_t_wall_ms']:>10.1f} {b['median_iters']:>6.1f} "
                  f"{b['median_T_s']:>8.3f} {b['median_eps_move_pct']:>7.3f}")
        red = summary["reduction_pct"].get(n, math.nan)
        print(f"{n:>4} {'Reduction (%)':>10}: {red:.1f}")


def cmd_certify(args) -> int:
    try:
        with open(args.result) as fh:
            data = json.load(fh)
        if data.get("schema_version") != SCHEMA_VERSION:
            raise ValueError("unsupported or missing schema_version")
        obstacles, radius, eps = _load_env(args.env)
        coeffs = np.asarray(data["position_coeffs"], dtype=float)
        states = np.asarray(data["states"], dtype=float)
        schedule = None
        if data.get("schedule"):
            schedule = tr.HyperplaneSchedule(
                np.asarray(data["schedule"]["normals"], dtype=float),
                np.asarray(data["schedule"]["offsets"], dtype=float))
        problem = tr.PlanningProblem(
            x_start=states[0], x_goal=states[-1], obstacles=obstacles,
            robot_radius=radius, safety_margin=eps,
            n_intervals=coeffs.shape[0])
    except (OSError, ValueError, KeyError, SplinesepError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    cert = certify_arrays(coeffs, schedule, problem)
    print(json.dumps({
        "ok": cert.ok, "coeff_ok": cert.coeff_ok, "sampled_ok": cert.sampled_ok,
        "min_coefficient": cert.min_coefficient,
        "min_sampled_clearance": cert.min_sampled_clearance,
        "required_clearance": cert.required_clearance,
        "violations": [list(v) for v in cert.violations]}, indent=2))
    return EXIT_OK if cert.ok else EXIT_CERT


def cmd_plot(args) -> int:
    try:
        rows = bench.read_csv(args.results)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    os.makedirs(args.out_dir, exist_ok=True)
    for path in bench.write_plots(rows, args.out_dir):
        print(path)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="splinesep",
        description="Time-optimal collision-free trajectory planning with "
                    "separating hyperplanes")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan", help="plan a single trajectory")
    p.add_argument("--env", help="environment JSON file")
    p.add_argument("--start", required=True, help="x,y[,theta]")
    p.add_argument("--goal", required=True, help="x,y[,theta]")
    p.add_argument("--method", choices=[tr.DECOUPLED, tr.COUPLED],
                   default=tr.DECOUPLED)
    p.add_argument("--n-intervals", type=int, default=20)
    p.add_argument("--eps", type=float, default=None,
                   help="safety margin override")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="result JSON path (default stdout)")
    p.set_defaults(func=cmd_plan)

    b = sub.add_parser("bench", help="run the benchmark sweep")
    b.add_argument("--obstacles", default="1-8",
                   help="counts, e.g. '1-8' or '2,4,6'")
    b.add_argument("--trials", type=int, default=200)
    b.add_argument("--seed", type=int, default=42)
    b.add_argument("--parallel", type=int, default=1)
    b.add_argument("--out-dir", default="bench_out")
    b.set_defaults(func=cmd_bench)

    c = sub.add_parser("certify", help="re-certify a stored result")
    c.add_argument("result", help="plan result JSON")
    c.add_argument("env", help="environment JSON")
    c.set_defaults(func=cmd_certify)

    q = sub.add_parser("plot", help="re-plot stored benchmark results")
    q.add_argument("results", help="results CSV")
    q.add_argument("--out-dir", default="bench_out")
    q.set_defaults(func=cmd_plot)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
