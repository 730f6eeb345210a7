"""Benchmark harness: seeded random environments, perimeter start/goal
sweeps, both planner variants, and Table-style summary metrics.

Environments are axis-aligned rectangles (side 0.8-2.0 m) in a 10x10 m
arena with pairwise clearance >= 0.5 m and >= 0.7 m clearance from the
arena corners, generated by seeded rejection sampling.  Trials sweep the
start clockwise from (0,0) and the goal counter-clockwise from (10,10)
along the perimeter, uniformly by arc length.  Straight-line
initializations through obstacles are intentional: some trials fail.
"""
from __future__ import annotations

import concurrent.futures
import json
import math
import os
import statistics
import time
from dataclasses import dataclass, field

import numpy as np

from . import transcription as tr
from .errors import RejectedProblemError, SplinesepError
from .geometry import ConvexPolytope
from .planner import Planner, PlannerConfig

ARENA = (10.0, 10.0)
RECT_SIDE = (0.8, 2.0)
PAIR_CLEARANCE = 0.5
CORNER_CLEARANCE = 0.7
# Keep inflated obstacles off the arena boundary so every perimeter start and
# goal pose in the trial sweep is collision-free (robot radius + margin + slack).
BOUNDARY_CLEARANCE = 0.3
MAX_PLACEMENT_ATTEMPTS = 10_000
DEFAULT_TRIALS = 200

CSV_HEADER = ("n_obstacles,method,trial,t_wall_ms,iters,T_s,"
              "eps_move_pct,success,t_ls_ms,t_qp_ms")


class GenerationError(SplinesepError, RuntimeError):
    """Rejection sampling could not place the requested obstacles."""


@dataclass
class EnvironmentSpec:
    obstacle_count: int
    seed: int
    obstacles: list[ConvexPolytope]
    arena: tuple[float, float] = ARENA

    def to_json(self, robot_radius: float = 0.2, eps: float = 0.05) -> dict:
        return {
            "arena": list(self.arena),
            "obstacles": [{"vertices": obs.vertices.tolist()}
                          for obs in self.obstacles],
            "robot": {"radius": robot_radius, "eps": eps},
            "seed": self.seed,
        }

    @classmethod
    def from_json(cls, data: dict) -> "EnvironmentSpec":
        obstacles = [ConvexPolytope(np.asarray(o["vertices"], dtype=float))
                     for o in data["obstacles"]]
        return cls(obstacle_count=len(obstacles), seed=int(data["seed"]),
                   obstacles=obstacles, arena=tuple(data["arena"]))


@dataclass
class TrialSpec:
    index: int
    start: np.ndarray  # (x, y)
    goal: np.ndarray  # (x, y)


@dataclass
class BenchSuite:
    seed: int
    environments: dict[int, EnvironmentSpec]
    trials: list[TrialSpec]


@dataclass
class MetricsRow:
    n_obstacles: int
    method: str
    trial: int
    t_wall_ms: float
    iters: int
    T_s: float
    eps_move_pct: float  # NaN when undefined (a method failed on the trial)
    success: bool
    t_ls_ms: float
    t_qp_ms: float

    def to_csv(self) -> str:
        eps = "" if math.isnan(self.eps_move_pct) else f"{self.eps_move_pct:.6f}"
        return (f"{self.n_obstacles},{self.method},{self.trial},"
                f"{self.t_wall_ms:.3f},{self.iters},{self.T_s:.6f},"
                f"{eps},{str(self.success).lower()},"
                f"{self.t_ls_ms:.3f},{self.t_qp_ms:.3f}")

    @classmethod
    def from_csv(cls, line: str) -> "MetricsRow":
        f = line.split(",")
        return cls(int(f[0]), f[1], int(f[2]), float(f[3]), int(f[4]),
                   float(f[5]), float(f[6]) if f[6] else math.nan,
                   f[7] == "true", float(f[8]), float(f[9]))


# ----- suite generation ------------------------------------------------------

def _rect(cx: float, cy: float, w: float, h: float) -> ConvexPolytope:
    return ConvexPolytope(np.array([
        [cx - w / 2, cy - h / 2], [cx + w / 2, cy - h / 2],
        [cx + w / 2, cy + h / 2], [cx - w / 2, cy + h / 2]]))


def _rect_gap(a, b) -> float:
    """Axis-aligned clearance between two rectangles given as (cx, cy, w, h)."""
    dx = abs(a[0] - b[0]) - (a[2] + b[2]) / 2
    dy = abs(a[1] - b[1]) - (a[3] + b[3]) / 2
    if dx < 0 and dy < 0:
        return max(dx, dy)  # overlap, negative
    return math.hypot(max(dx, 0.0), max(dy, 0.0))


def _corner_gap(r, corner) -> float:
    dx = max(abs(corner[0] - r[0]) - r[2] / 2, 0.0)
    dy = max(abs(corner[1] - r[1]) - r[3] / 2, 0.0)
    return math.hypot(dx, dy)


def generate_environment(obstacle_count: int, seed: int) -> EnvironmentSpec:
    """Place axis-aligned rectangles by seeded rejection sampling."""
    if not 1 <= obstacle_count <= 10:
        raise ValueError("obstacle_count must be in 1..10")
    rng = np.random.default_rng(seed)
    wx, wy = ARENA
    corners = [(0, 0), (wx, 0), (wx, wy), (0, wy)]
    placed: list[tuple[float, float, float, float]] = []
    attempts = 0
    while len(placed) < obstacle_count:
        if attempts >= MAX_PLACEMENT_ATTEMPTS:
            raise GenerationError(
                f"could not place {obstacle_count} obstacles after "
                f"{MAX_PLACEMENT_ATTEMPTS} attempts (seed {seed})")
        attempts += 1
        w, h = rng.uniform(*RECT_SIDE, size=2)
        cx = rng.uniform(w / 2 + BOUNDARY_CLEARANCE, wx - w / 2 - BOUNDARY_CLEARANCE)
        cy = rng.uniform(h / 2 + BOUNDARY_CLEARANCE, wy - h / 2 - BOUNDARY_CLEARANCE)
        cand = (cx, cy, w, h)
        if any(_corner_gap(cand, c) < CORNER_CLEARANCE for c in corners):
            continue
        if any(_rect_gap(cand, p) < PAIR_CLEARANCE for p in placed):
            continue
        placed.append(cand)
    return EnvironmentSpec(obstacle_count=obstacle_count, seed=seed,
                           obstacles=[_rect(*r) for r in placed])


def _perimeter_point(t: float) -> np.ndarray:
    """Point at clockwise arc length t from (0,0): up, right, down, left."""
    wx, wy = ARENA
    per = 2 * (wx + wy)
    t = t % per
    if t < wy:
        return np.array([0.0, t])
    t -= wy
    if t < wx:
        return np.array([t, wy])
    t -= wx
    if t < wy:
        return np.array([wx, wy - t])
    t -= wy
    return np.array([wx - t, 0.0])


def generate_trials(n_trials: int = DEFAULT_TRIALS) -> list[TrialSpec]:
    """Uniform arc-length perimeter sweep; trial 0 is (0,0) -> (10,10)."""
    wx, wy = ARENA
    per = 2 * (wx + wy)
    half = per / 2  # clockwise arc position of (10, 10)
    step = per / n_trials
    trials = []
    for i in range(n_trials):
        start = _perimeter_point(step * i)
        goal_t = half - step * i
        goal = _perimeter_point(goal_t)
        if np.allclose(start, goal):
            # The sweeps cross twice per lap; nudge the goal half a step so
            # start != goal always holds.
            goal = _perimeter_point(goal_t - step / 2)
        trials.append(TrialSpec(index=i, start=start, goal=goal))
    return trials


def generate_suite(seed: int, obstacle_counts: list[int],
                   n_trials: int = DEFAULT_TRIALS) -> BenchSuite:
    envs = {}
    for n in obstacle_counts:
        # Derive a per-count seed so adding counts never reshuffles others.
        envs[n] = generate_environment(n, seed * 1000 + n)
    return BenchSuite(seed=seed, environments=envs,
                      trials=generate_trials(n_trials))


# ----- execution -------------------------------------------------------------

def build_problem(env: EnvironmentSpec, trial: TrialSpec,
                  n_intervals: int = 20) -> tr.PlanningProblem:
    delta = trial.goal - trial.start
    heading = math.atan2(delta[1], delta[0])
    return tr.PlanningProblem(
        x_start=np.array([*trial.start, heading]),
        x_goal=np.array([*trial.goal, heading]),
        obstacles=list(env.obstacles),
        t_min=0.1, t_max=100.0, n_intervals=n_intervals)


def run_trial(env: EnvironmentSpec, trial: TrialSpec, method: str) -> MetricsRow:
    """Solve one (environment, trial, method) cell; never raises."""
    t0 = time.perf_counter()
    try:
        problem = build_problem(env, trial)
        planner = Planner(problem, PlannerConfig(variant=method))
        res = planner.plan()
        wall_ms = (time.perf_counter() - t0) * 1e3
        return MetricsRow(
            n_obstacles=env.obstacle_count, method=method, trial=trial.index,
            t_wall_ms=wall_ms, iters=res.trace.iterations, T_s=res.T,
            eps_move_pct=math.nan, success=res.status == "success",
            t_ls_ms=res.timers.t_ls * 1e3, t_qp_ms=res.timers.t_qp * 1e3)
    except SplinesepError:
        # e.g. start or goal inside an obstacle: an unsuccessful row, not an
        # aborted sweep.
        wall_ms = (time.perf_counter() - t0) * 1e3
        return MetricsRow(
            n_obstacles=env.obstacle_count, method=method, trial=trial.index,
            t_wall_ms=wall_ms, iters=0, T_s=math.nan, eps_move_pct=math.nan,
            success=False, t_ls_ms=0.0, t_qp_ms=0.0)


def _run_cell(args):
    return run_trial(*args)


def run_benchmark(suite: BenchSuite,
                  methods: tuple[str, ...] = (tr.DECOUPLED, tr.COUPLED),
                  parallelism: int = 1) -> list[MetricsRow]:
    cells = [(env, trial, method)
             for n in sorted(suite.environments)
             for env in [suite.environments[n]]
             for trial in suite.trials
             for method in methods]
    if parallelism > 1:
        with concurrent.futures.ProcessPoolExecutor(parallelism) as pool:
            rows = list(pool.map(_run_cell, cells, chunksize=4))
    else:
        rows = [run_trial(*c) for c in cells]
    _fill_eps_move(rows)
    return rows


def _fill_eps_move(rows: list[MetricsRow]) -> None:
    """Relative motion-time error vs the COUPLED baseline on the same trial.

    Defined only where both methods succeeded; the baseline rows carry 0.
    """
    baseline = {(r.n_obstacles, r.trial): r for r in rows
                if r.method == tr.COUPLED and r.success}
    for r in rows:
        if not r.success:
            continue
        base = baseline.get((r.n_obstacles, r.trial))
        if base is None:
            continue
        if r.method == tr.COUPLED:
            r.eps_move_pct = 0.0
        else:
            r.eps_move_pct = 100.0 * (r.T_s - base.T_s) / base.T_s


# ----- reporting -------------------------------------------------------------

def _median(vals):
    vals = [v for v in vals if not math.isnan(v)]
    return statistics.median(vals) if vals else math.nan


def summarize(rows: list[MetricsRow]) -> dict:
    """Per-obstacle-count medians over successful trials, plus the
    decoupled-vs-coupled wall-time reduction row."""
    counts = sorted({r.n_obstacles for r in rows})
    methods = sorted({r.method for r in rows})
    summary: dict = {"per_obstacle_count": {}, "reduction_pct": {}}
    for n in counts:
        block = {}
        for m in methods:
            sub = [r for r in rows if r.n_obstacles == n and r.method == m]
            ok = [r for r in sub if r.success]
            block[m] = {
                "trials": len(sub),
                "success_rate": len(ok) / len(sub) if sub else math.nan,
                "median_t_wall_ms": _median([r.t_wall_ms for r in ok]),
                "median_iters": _median([float(r.iters) for r in ok]),
                "median_T_s": _median([r.T_s for r in ok]),
                "median_eps_move_pct": _median(
                    [abs(r.eps_move_pct) for r in ok]),
                "max_t_ls_ms": max([r.t_ls_ms for r in ok], default=math.nan),
                "max_t_qp_ms": max([r.t_qp_ms for r in ok], default=math.nan),
            }
        summary["per_obstacle_count"][str(n)] = block
        if tr.DECOUPLED in block and tr.COUPLED in block:
            tc = block[tr.COUPLED]["median_t_wall_ms"]
            td = block[tr.DECOUPLED]["median_t_wall_ms"]
            summary["reduction_pct"][str(n)] = (
                100.0 * (tc - td) / tc if tc and not math.isnan(tc) else math.nan)
    return summary


def write_csv(rows: list[MetricsRow], path: str) -> None:
    with open(path, "w") as fh:
        fh.write(CSV_HEADER + "\n")
        for r in rows:
            fh.write(r.to_csv() + "\n")


def read_csv(path: str) -> list[MetricsRow]:
    with open(path) as fh:
        lines = fh.read().strip().splitlines()
    if not lines or lines[0] != CSV_HEADER:
        raise ValueError(f"{path}: unexpected CSV header")
    return [MetricsRow.from_csv(line) for line in lines[1:]]


def _svg_boxplot(groups: dict[str, list[float]], title: str,
                 ylabel: str) -> str:
    """Minimal SVG box plot: one box per labelled group."""
    width, height = 640, 400
    left, right, top, bottom = 60, 20, 40, 50
    plot_w, plot_h = width - left - right, height - top - bottom
    labels = list(groups)
    finite = [v for vals in groups.values() for v in vals if not math.isnan(v)]
    vmax = max(finite) if finite else 1.0
    vmin = 0.0
    span = (vmax - vmin) or 1.0

    def ypix(v):
        return top + plot_h * (1 - (v - vmin) / span)

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
             f'height="{height}" font-family="sans-serif" font-size="11">',
             f'<text x="{width / 2}" y="20" text-anchor="middle" '
             f'font-size="14">{title}</text>',
             f'<text x="15" y="{height / 2}" text-anchor="middle" '
             f'transform="rotate(-90 15 {height / 2})">{ylabel}</text>',
             f'<rect x="{left}" y="{top}" width="{plot_w}" height="{plot_h}" '
             f'fill="none" stroke="black"/>']
    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        v = vmin + frac * span
        y = ypix(v)
        parts.append(f'<line x1="{left - 4}" y1="{y:.1f}" x2="{left}" '
                     f'y2="{y:.1f}" stroke="black"/>')
        parts.append(f'<text x="{left - 7}" y="{y + 4:.1f}" '
                     f'text-anchor="end">{v:.3g}</text>')
    slot = plot_w / max(len(labels), 1)
    box_w = min(40.0, slot * 0.5)
    for i, label in enumerate(labels):
        vals = sorted(v for v in groups[label] if not math.isnan(v))
        cx = left + slot * (i + 0.5)
        parts.append(f'<text x="{cx:.1f}" y="{height - bottom + 16}" '
                     f'text-anchor="middle">{label}</text>')
        if not vals:
            continue
        q1 = statistics.quantiles(vals, n=4)[0] if len(vals) >= 2 else vals[0]
        q3 = statistics.quantiles(vals, n=4)[2] if len(vals) >= 2 else vals[-1]
        med = statistics.median(vals)
        lo, hi = vals[0], vals[-1]
        x0, x1 = cx - box_w / 2, cx + box_w / 2
        parts.append(f'<line x1="{cx:.1f}" y1="{ypix(lo):.1f}" x2="{cx:.1f}" '
                     f'y2="{ypix(hi):.1f}" stroke="black"/>')
        for v in (lo, hi):
            parts.append(f'<line x1="{cx - box_w / 4:.1f}" y1="{ypix(v):.1f}" '
                         f'x2="{cx + box_w / 4:.1f}" y2="{ypix(v):.1f}" '
                         f'stroke="black"/>')
        parts.append(f'<rect x="{x0:.1f}" y="{ypix(q3):.1f}" '
                     f'width="{box_w:.1f}" '
                     f'height="{max(ypix(q1) - ypix(q3), 0.5):.1f}" '
                     f'fill="#cfe2f3" stroke="black"/>')
        parts.append(f'<line x1="{x0:.1f}" y1="{ypix(med):.1f}" '
                     f'x2="{x1:.1f}" y2="{ypix(med):.1f}" stroke="black" '
                     f'stroke-width="2"/>')
    parts.append("</svg>")
    return "\n".join(parts)


def write_plots(rows: list[MetricsRow], out_dir: str) -> list[str]:
    """SVG box plots of t_wall and t_wall per iteration, per (N_o, method)."""
    paths = []
    for metric, title, fname in (
            (lambda r: r.t_wall_ms, "Wall time per solve", "t_wall.svg"),
            (lambda r: r.t_wall_ms / max(r.iters, 1),
             "Wall time per iteration", "t_wall_per_iter.svg")):
        groups: dict[str, list[float]] = {}
        for n in sorted({r.n_obstacles for r in rows}):
            for m in sorted({r.method for r in rows}):
                groups[f"{n}/{m[:4]}"] = [
                    metric(r) for r in rows
                    if r.n_obstacles == n and r.method == m and r.success]
        path = os.path.join(out_dir, fname)
        with open(path, "w") as fh:
            fh.write(_svg_boxplot(groups, title, "ms"))
        paths.append(path)
    return paths


def report(rows: list[MetricsRow], out_dir: str) -> dict:
    """Write CSV, summary JSON and SVG plots; returns the summary dict."""
    os.makedirs(out_dir, exist_ok=True)
    write_csv(rows, os.path.join(out_dir, "results.csv"))
    summary = summarize(rows)
    with open(os.path.join(out_dir, "summary.json"), "w") as fh:
        json.dump(summary, fh, indent=2)
    write_plots(rows, out_dir)
    return summary
