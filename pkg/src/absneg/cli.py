"""Command-line entry point.

Every run writes one data file. CSV files carry '#' metadata lines (tool
version, resolved config, seed, wall-clock duration) above a header row;
JSON files carry the same under "meta". Angles are reported in units of pi.

Exit codes: 0 success, 2 a self-check against published values failed,
1 runtime error.

Examples:
  absneg --command hierarchy-table --m 3 --out table.csv
  absneg --command quadruplet-curve --r 1 --theta-steps 241 --out curve.csv
  absneg --command radius-threshold --out threshold.json --format json
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
from dataclasses import asdict, replace

import numpy as np

from . import __version__
from .annealing import (
    FREE_THRESHOLD,
    AnnealConfig,
    quadruplet_curve,
    radius_threshold,
    set_threads,
    triplet_scan,
)
from .estimation import CostParams, cost_bound_report
from .free_geometry import quadruplet_bloch, solve_critical_angles
from .hierarchy import PUBLISHED_COUNTS, build_rotation_set, convergence_report, hierarchy_curve
from .quantifiers import NEGATIVITY_SCALE, ROBUSTNESS_SCALE
from .quantum_core import MultiObject, random_povm, random_state, random_su2

DEFAULT_SEED = 42
COMMANDS = ("hierarchy-table", "quadruplet-curve", "hierarchy-curve", "triplet-scan",
            "radius-threshold", "cost-bounds", "critical-angles")

PUBLISHED_RATIO = 1 + math.sqrt(3)
PUBLISHED_DECAY = 0.627
THRESHOLD_WINDOW = (0.7325, 0.7425)
# published critical angles over pi
PUBLISHED_ANGLES = (0.203171, math.acos(-1 / 3) / math.pi, 0.710499)

# per-command theta grids (units of pi) when the flags are not given
_THETA_DEFAULTS = {
    "quadruplet-curve": (0.0, 1.0, 241),
    "hierarchy-curve": (0.0, 1.0, 241),
    "triplet-scan": (0.05, 1.0, 20),
    "radius-threshold": (0.40, 0.47, 141),
}


def default_seed() -> int:
    env = os.environ.get("ABSNEG_SEED")
    return int(env) if env not in (None, "") else DEFAULT_SEED


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="absneg", description=__doc__,
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--command", required=True, choices=COMMANDS)
    p.add_argument("--r", type=float, default=1.0, help="Bloch radius of the quadruplet")
    p.add_argument("--theta-min", type=float, default=None, help="grid start, units of pi")
    p.add_argument("--theta-max", type=float, default=None, help="grid end, units of pi")
    p.add_argument("--theta-steps", type=int, default=None, help="number of grid points")
    p.add_argument("--m", type=str, default=None,
                   help="max step for hierarchy-table, comma list for hierarchy-curve")
    p.add_argument("--seed", type=int, default=None, help="RNG seed (default $ABSNEG_SEED or 42)")
    p.add_argument("--restarts", type=int, default=None, help="annealing chains per point")
    p.add_argument("--out", type=str, default="-", help="output file, '-' for stdout")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--threads", type=int, default=None, help="cap on parallel chains")
    return p


# output

def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".12g")
    return str(x)


def render(columns, rows, meta: dict, fmt: str, extra: dict | None = None) -> str:
    if fmt == "json":
        doc = {"meta": meta, "columns": list(columns),
               "rows": [[_py(v) for v in row] for row in rows]}
        if extra:
            doc.update(_py(extra))
        return json.dumps(doc, indent=2, sort_keys=False) + "\n"
    buf = io.StringIO()
    for k, v in meta.items():
        buf.write(f"# {k}: {json.dumps(_py(v), sort_keys=True)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _py(x):
    """Plain Python types for json."""
    if isinstance(x, dict):
        return {str(k): _py(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_py(v) for v in x]
    if isinstance(x, np.ndarray):
        return _py(x.tolist())
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    return x


def write_text(path: str, text: str):
    if path == "-":
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def _summary_path(out: str) -> str | None:
    return None if out == "-" else os.path.splitext(out)[0] + ".summary.json"


# commands; each returns (columns, rows, extra, failures)

def _theta_grid(args) -> np.ndarray:
    lo, hi, n = _THETA_DEFAULTS.get(args.command, (0.0, 1.0, 241))
    lo = lo if args.theta_min is None else args.theta_min
    hi = hi if args.theta_max is None else args.theta_max
    n = n if args.theta_steps is None else args.theta_steps
    if not 0 <= lo <= hi <= 1 or n < 1:
        raise ValueError("theta grid must satisfy 0 <= min <= max <= 1 (units of pi) with steps >= 1")
    return np.linspace(lo, hi, n) * np.pi


def cmd_hierarchy_table(args, cfg):
    max_m = 3 if args.m is None else int(args.m)
    if not 0 <= max_m <= 4:
        raise ValueError("hierarchy-table supports m in [0, 4]")
    rows, failures = [], []
    for m in range(max_m + 1):
        o, u = build_rotation_set(m).counts
        rows.append((m, o, u, o / u))
        if m <= 2 and (o, u) != PUBLISHED_COUNTS[m]:
            failures.append(f"m={m}: computed {(o, u)}, published {PUBLISHED_COUNTS[m]}")
    extra = {"published": {str(m): PUBLISHED_COUNTS[m] for m in range(max_m + 1)}}
    return ("m", "O_count", "U_count", "ratio"), rows, extra, failures


def _curve_rows(curve):
    return [(p.theta / np.pi, p.mean_robustness, p.mean_sum_negativity, p.ratio, *p.quaternion)
            for p in curve]


def _free_windows(theta_pi, vals):
    """Maximal runs of grid points with value below the free threshold."""
    free = vals < FREE_THRESHOLD
    runs, start = [], None
    for i, f in enumerate(free):
        if f and start is None:
            start = i
        if start is not None and (not f or i == len(free) - 1):
            end = i if f else i - 1
            runs.append((float(theta_pi[start]), float(theta_pi[end])))
            start = None
    return runs


def cmd_quadruplet_curve(args, cfg):
    theta = _theta_grid(args)
    curve = quadruplet_curve(theta, args.r, cfg)
    rows = _curve_rows(curve)
    vals = np.array([p.mean_robustness for p in curve])
    ratios = np.array([p.ratio for p in curve])
    tp = theta / np.pi
    windows = _free_windows(tp, vals)
    failures = []
    summary = {"free_windows_over_pi": windows,
               "ratio_expected": NEGATIVITY_SCALE / ROBUSTNESS_SCALE,
               "ratio_published": PUBLISHED_RATIO}
    defined = ratios[np.isfinite(ratios)]
    if len(defined):
        summary["ratio_min"], summary["ratio_max"] = float(defined.min()), float(defined.max())
        if np.max(np.abs(defined - NEGATIVITY_SCALE / ROBUSTNESS_SCALE)) > 1e-6:
            failures.append("ratio column is not constant")
    if args.r == 1.0 and len(tp) > 1:
        ca = solve_critical_angles().as_pi()
        step = float(tp[1] - tp[0])
        expected = [(0.0, ca[0]), (ca[1], ca[2])]
        summary["critical_windows_over_pi"] = expected
        summary["grid_step_over_pi"] = step
        inside = [w for w in windows if w[1] < 1 - step / 2]  # theta = pi is an isolated free point
        summary["window_match"] = len(inside) == 2 and all(
            abs(a - ea) <= step + 1e-12 and abs(b - eb) <= step + 1e-12
            for (a, b), (ea, eb) in zip(inside, expected))
        if not summary["window_match"]:
            failures.append(f"free windows {windows} differ from {expected} by more than a grid step")
    cols = ("theta_over_pi", "mean_robustness", "mean_sum_negativity", "ratio",
            "best_quaternion_w", "best_quaternion_x", "best_quaternion_y", "best_quaternion_z")
    return cols, rows, {"summary": summary}, failures


def cmd_hierarchy_curve(args, cfg):
    ms = [1, 2, 3] if args.m is None else [int(s) for s in args.m.split(",") if s.strip()]
    if not ms or any(not 1 <= m <= 4 for m in ms):
        raise ValueError("hierarchy-curve steps must lie in 1..4")
    theta = _theta_grid(args)
    bloch = quadruplet_bloch(theta, args.r)
    annealed = np.array([p.mean_robustness for p in quadruplet_curve(theta, args.r, cfg)])
    curves = [hierarchy_curve(bloch, m)[0] for m in ms]
    failures = []
    slack = {str(m): float(np.min(c - annealed)) for m, c in zip(ms, curves)}
    for m, s in slack.items():
        if s < -1e-9:
            failures.append(f"m={m} bound dips below the annealed curve by {-s:.3g}")
    for (m1, a), (m2, b) in zip(zip(ms, curves), zip(ms[1:], curves[1:])):
        if m2 > m1 and np.min(a - b) < -1e-9:
            failures.append(f"bound m={m1} is below m={m2} somewhere")
    report = {"min_slack_vs_annealed": slack}
    if len(ms) >= 2:
        report.update(convergence_report(curves, annealed, theta, ms))
        report["published_rate"] = PUBLISHED_DECAY
    rows = [(t / np.pi, a, *[c[i] for c in curves]) for i, (t, a) in enumerate(zip(theta, annealed))]
    cols = ("theta_over_pi", "annealed", *[f"bound_m{m}" for m in ms])
    return cols, rows, {"convergence": report}, failures


def cmd_triplet_scan(args, cfg):
    thetas = _theta_grid(args)
    phi2s = np.linspace(np.pi / 6, 2 * np.pi / 3, 4)
    recs = triplet_scan(thetas, phi2s, 4, cfg)
    rows = [(r.theta / np.pi, r.phi2 / np.pi, r.phi3 / np.pi, r.best_value, r.resourceful) for r in recs]
    extra = {"n_resourceful": sum(r.resourceful for r in recs), "free_threshold": FREE_THRESHOLD}
    return ("theta_over_pi", "phi2_over_pi", "phi3_over_pi", "best_value", "resourceful"), rows, extra, []


def cmd_radius_threshold(args, cfg):
    res = radius_threshold(cfg, _theta_grid(args))
    rows = [(r, v, th / np.pi) for r, v, th in res.history]
    failures = []
    if not THRESHOLD_WINDOW[0] <= res.threshold <= THRESHOLD_WINDOW[1]:
        failures.append(f"threshold {res.threshold:.6f} outside {THRESHOLD_WINDOW}")
    extra = {"threshold": res.threshold, "bracket": [res.lower, res.upper],
             "published": 0.7375, "accepted_window": THRESHOLD_WINDOW}
    return ("radius", "max_value", "argmax_theta_over_pi"), rows, extra, failures


def cmd_cost_bounds(args, cfg):
    rng = np.random.default_rng(cfg.rng_seed)
    n_objects = 10 if args.m is None else int(args.m)
    n_u = 20
    rows, failures = [], []
    for k in range(n_objects):
        n = int(rng.integers(1, 5))
        mo = MultiObject(tuple((random_state(rng, 2), random_povm(rng, 2, int(rng.integers(2, 5))))
                               for _ in range(n)))
        rep = cost_bound_report(mo, [random_su2(rng) for _ in range(n_u)], CostParams(0.1, 0.05))
        for rec in rep["records"]:
            rows.append((k, n, *rec["quaternion"], rec["identity_lhs"], rec["identity_rhs"],
                         rec["measurement_slack"], rec["combined_slack"]))
        if rep["max_identity_error"] > 1e-9:
            failures.append(f"object {k}: forward identity off by {rep['max_identity_error']:.3g}")
        if min(rep["min_measurement_slack"], rep["min_combined_slack"]) < -1e-9:
            failures.append(f"object {k}: negative bound slack")
    cols = ("object", "n", "q_w", "q_x", "q_y", "q_z", "identity_lhs", "identity_rhs",
            "measurement_slack", "combined_slack")
    return cols, rows, {}, failures


def cmd_critical_angles(args, cfg):
    ca = solve_critical_angles().as_pi()
    failures = []
    tol = (1e-4, 1e-12, 1e-4)
    rows = []
    for i, (v, pub, t) in enumerate(zip(ca, PUBLISHED_ANGLES, tol), start=1):
        rows.append((f"theta{i}", v, pub))
        if abs(v - pub) > t:
            failures.append(f"theta{i} = {v:.8f} pi, published {pub:.8f} pi")
    return ("name", "value_over_pi", "published_over_pi"), rows, {}, failures


_DISPATCH = {
    "hierarchy-table": cmd_hierarchy_table,
    "quadruplet-curve": cmd_quadruplet_curve,
    "hierarchy-curve": cmd_hierarchy_curve,
    "triplet-scan": cmd_triplet_scan,
    "radius-threshold": cmd_radius_threshold,
    "cost-bounds": cmd_cost_bounds,
    "critical-angles": cmd_critical_angles,
}


def resolve_config(args) -> AnnealConfig:
    seed = default_seed() if args.seed is None else args.seed
    cfg = replace(AnnealConfig(), rng_seed=seed)
    if args.restarts is not None:
        cfg = replace(cfg, restarts=args.restarts)
    return cfg


def run(args) -> int:
    set_threads(args.threads)
    cfg = resolve_config(args)
    t0 = time.perf_counter()
    cols, rows, extra, failures = _DISPATCH[args.command](args, cfg)
    resolved = {k: v for k, v in vars(args).items() if k not in ("out", "format")}
    meta = {"tool": f"absneg {__version__}", "command": args.command, "seed": cfg.rng_seed,
            "config": {"cli": resolved, "anneal": asdict(cfg)},
            "duration_s": round(time.perf_counter() - t0, 3),
            "validation": "fail" if failures else "pass"}
    if failures:
        meta["failures"] = failures
    write_text(args.out, render(cols, rows, meta, args.format, extra if args.format == "json" else None))
    side = _summary_path(args.out)
    if extra and args.format == "csv" and side is not None:
        write_text(side, json.dumps(_py({"meta": meta, **extra}), indent=2) + "\n")
    for f in failures:
        print(f"validation: {f}", file=sys.stderr)
    return 2 if failures else 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return run(args)
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"absneg: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
