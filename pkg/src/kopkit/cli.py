"""Command-line front end.

Every subcommand prints a one-line JSON summary on standard output; files it
writes depend only on the flags, so identical invocations give identical
bytes.  Exit codes: 1 for input or validation errors, 2 for an infeasible
budget, 3 when the exact solver's size guard trips.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from importlib import resources
from pathlib import Path

import numpy as np

from . import lns
from .dubins import dubins_cost_matrix, turning_radius
from .kinematics import NoCommonDuration
from .orienteering import (InfeasibleBudget, Instance, SearchSpaceTooLarge, export_milp, parse_instance,
                           read_solution, solution_record, solve_exact)
from .steering_cost import AxisLimitPolicy, Discretization, build_cost_matrix, tour_trajectory

BUILTIN_PREFIX = "builtin:"
TRAJ_HEADER = "t,x,y,vx,vy,ax,ay"


class UsageError(ValueError):
    pass


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("KOPKIT_THREADS", "1")))
    except ValueError:
        raise UsageError("KOPKIT_THREADS must be an integer") from None


def load_instance(spec: str, budget: float) -> Instance:
    """Read an instance file, or a bundled data set named ``builtin:<name>``."""
    if spec.startswith(BUILTIN_PREFIX):
        name = spec[len(BUILTIN_PREFIX):]
        ref = resources.files("kopkit") / "data" / f"{name}.txt"
        if not ref.is_file():
            raise UsageError(f"no bundled instance {name!r}")
        text = ref.read_text()
    else:
        name = Path(spec).stem
        text = Path(spec).read_text()
    return parse_instance(text, budget, name)


def parse_sweep(text: str) -> list[float]:
    """``start:stop:step`` with both ends included."""
    try:
        start, stop, step = (float(p) for p in text.split(":"))
    except ValueError:
        raise UsageError(f"sweep must be start:stop:step, got {text!r}") from None
    if not step > 0 or stop < start:
        raise UsageError(f"empty sweep {text!r}")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + i * step, 12) for i in range(count)]


def _positive(name: str, value: float) -> None:
    if not value > 0:
        raise UsageError(f"{name} must be positive, got {value}")


def _discretization(args, v_ref: float, speed: float | None) -> Discretization:
    if args.headings < 1 or args.velocities < 1:
        raise UsageError("headings and velocities must be at least 1")
    return Discretization.uniform(args.headings, args.velocities, v_ref, speed)


def _start_states(disc: Discretization, policy: str) -> list[int] | None:
    if policy == "free":
        return None
    rest = [k * disc.speeds + g for k in range(disc.headings) for g, v in enumerate(disc.speed_values) if v == 0]
    if not rest:
        raise UsageError("start policy 'rest' needs a zero speed level")
    return rest


def _lns_config(args) -> lns.LnsConfig:
    return lns.LnsConfig(args.phase1_iters, args.phase1_destroy, args.phase2_iters, args.phase2_destroy,
                         args.seed, args.endpoint_opt)


def _write_text(path: str | None, text: str) -> None:
    if path:
        with open(path, "w", newline="\n") as fh:
            fh.write(text)


def trajectory_csv(samples: np.ndarray) -> str:
    lines = [TRAJ_HEADER]
    lines += [",".join("%.9g" % v for v in row) for row in samples]
    return "\n".join(lines) + "\n"


def _kop_run(args, instance: Instance, speed: float | None):
    policy = AxisLimitPolicy(args.policy)
    limits = policy.axis_limits(args.vmax, args.amax)
    disc = _discretization(args, limits.v_max, speed)
    matrix = build_cost_matrix(instance.locations, disc, policy, args.vmax, args.amax, workers=_threads())
    starts = _start_states(disc, args.start)
    if args.exact:
        sol = solve_exact(instance, matrix, start_states=starts)
    else:
        sol = lns.solve(instance, matrix, _lns_config(args), start_states=starts)
    config = {
        "solver": "exact" if args.exact else "lns",
        "cmax": args.cmax, "vmax": args.vmax, "amax": args.amax,
        "headings": disc.headings, "speed_values": list(disc.speed_values),
        "policy": policy.value, "start": args.start,
    }
    if not args.exact:
        config.update(endpoint_opt=args.endpoint_opt, phases=[[args.phase1_iters, args.phase1_destroy],
                                                               [args.phase2_iters, args.phase2_destroy]])
    return sol, disc, (limits, limits), config


def cmd_solve(args) -> int:
    for name in ("vmax", "amax"):
        _positive(name, getattr(args, name))
    instance = load_instance(args.instance, args.cmax)
    t0 = time.perf_counter()
    if args.sweep:
        if args.velocities != 1:
            raise UsageError("--sweep applies to a single speed level (--velocities 1)")
        v_ref = AxisLimitPolicy(args.policy).axis_limits(args.vmax, args.amax).v_max
        speeds = [f * v_ref for f in parse_sweep(args.sweep)]
    else:
        speeds = [args.speed]
    best = None
    runs = []
    for speed in speeds:
        try:
            sol, disc, limits, config = _kop_run(args, instance, speed)
        except InfeasibleBudget:
            if not args.sweep:
                raise
            # too slow to even fly depot to depot: record and keep sweeping
            runs.append({"speed": speed, "objective": None, "total_time": None})
            continue
        runs.append({"speed": speed, "objective": sol.objective, "total_time": sol.total_time})
        # ties keep the earlier (slower) speed
        if best is None or sol.objective > best[0].objective:
            best = (sol, disc, limits, config)
    if best is None:
        raise InfeasibleBudget(f"no swept speed admits a depot-to-depot flight within {args.cmax}")
    sol, disc, limits, config = best
    _write_text(args.out, solution_record(sol, instance, None if args.exact else args.seed, config))
    if args.traj_out:
        samples = tour_trajectory(sol.tour, instance.locations, disc, limits, args.dt)
        _write_text(args.traj_out, trajectory_csv(samples))
    summary = {"objective": sol.objective, "total_time": sol.total_time,
               "runtime": time.perf_counter() - t0}
    if args.sweep:
        summary["runs"] = runs
    print(json.dumps(summary))
    return 0


def _dop_one(job):
    instance, headings, v_const, amax, config = job
    matrix = dubins_cost_matrix(instance.locations, headings, v_const, amax)
    try:
        return lns.solve(instance, matrix, config)
    except InfeasibleBudget:
        return None


def cmd_dop(args) -> int:
    for name in ("vmax", "amax"):
        _positive(name, getattr(args, name))
    if args.headings < 1:
        raise UsageError("headings must be at least 1")
    instance = load_instance(args.instance, args.cmax)
    if args.sweep:
        speeds = [f * args.vmax for f in parse_sweep(args.sweep)]
    elif args.speed is not None:
        speeds = [args.speed]
    else:
        raise UsageError("give --speed or --sweep")
    for v in speeds:
        _positive("speed", v)
    t0 = time.perf_counter()
    config = _lns_config(args)
    jobs = [(instance, args.headings, v, args.amax, config) for v in speeds]
    workers = min(_threads(), len(jobs))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            sols = list(pool.map(_dop_one, jobs))
    else:
        sols = [_dop_one(j) for j in jobs]
    runs = [{"v_const": v, "r": turning_radius(v, args.amax), "objective": s and s.objective,
             "total_time": s and s.total_time} for v, s in zip(speeds, sols)]
    ok = [i for i, s in enumerate(sols) if s is not None]
    if not ok:
        raise InfeasibleBudget(f"no speed admits a depot-to-depot flight within {args.cmax}")
    b = max(ok, key=lambda i: (sols[i].objective, -i))
    rec_config = {"solver": "dop-lns", "cmax": args.cmax, "vmax": args.vmax, "amax": args.amax,
                  "headings": args.headings, "v_const": speeds[b], "endpoint_opt": args.endpoint_opt}
    _write_text(args.out, solution_record(sols[b], instance, args.seed, rec_config))
    print(json.dumps({"objective": sols[b].objective, "total_time": sols[b].total_time,
                      "v_const": speeds[b], "runs": runs, "runtime": time.perf_counter() - t0}))
    return 0


def cmd_export_milp(args) -> int:
    instance = load_instance(args.instance, args.cmax)
    policy = AxisLimitPolicy(args.policy)
    limits = policy.axis_limits(args.vmax, args.amax)
    disc = _discretization(args, limits.v_max, args.speed)
    matrix = build_cost_matrix(instance.locations, disc, policy, args.vmax, args.amax, workers=_threads())
    text = export_milp(instance, matrix)
    if args.out:
        _write_text(args.out, text)
    else:
        sys.stdout.write(text)
        return 0
    print(json.dumps({"rows": text.count("\n"), "out": args.out}))
    return 0


def cmd_cost_matrix(args) -> int:
    instance = load_instance(args.instance, 0.0)
    policy = AxisLimitPolicy(args.policy)
    limits = policy.axis_limits(args.vmax, args.amax)
    disc = _discretization(args, limits.v_max, args.speed)
    t0 = time.perf_counter()
    matrix = build_cost_matrix(instance.locations, disc, policy, args.vmax, args.amax, workers=_threads())
    elapsed = time.perf_counter() - t0
    if args.format == "json":
        _write_text(args.out, matrix.to_json())
    else:
        with open(args.out, "wb") as fh:
            fh.write(matrix.to_bytes())
    print(json.dumps({"shape": list(matrix.shape), "runtime": elapsed}))
    return 0


def cmd_traj(args) -> int:
    _positive("dt", args.dt)
    rec, tour = read_solution(Path(args.solution).read_text())
    cfg = rec["config"]
    instance = load_instance(args.instance, cfg.get("cmax", 0.0))
    policy = AxisLimitPolicy(cfg["policy"])
    limits = policy.axis_limits(cfg["vmax"], cfg["amax"])
    disc = Discretization(cfg["headings"], tuple(cfg["speed_values"]))
    if any(s.location >= instance.n for s in tour):
        raise UsageError("solution refers to locations missing from the instance")
    samples = tour_trajectory(tour, instance.locations, disc, (limits, limits), args.dt)
    _write_text(args.out, trajectory_csv(samples))
    print(json.dumps({"samples": len(samples), "duration": float(samples[-1, 0])}))
    return 0


def _common(p: argparse.ArgumentParser, budget: bool = True) -> None:
    p.add_argument("--instance", required=True, help="instance file or builtin:<name>")
    if budget:
        p.add_argument("--cmax", type=float, required=True, help="flight-time budget [s]")
    p.add_argument("--vmax", type=float, default=3.0)
    p.add_argument("--amax", type=float, default=1.5)
    p.add_argument("--headings", type=int, default=8)


def _kop_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--velocities", type=int, default=6, help="number of speed levels")
    p.add_argument("--speed", type=float, default=None, help="speed when --velocities is 1")
    p.add_argument("--policy", choices=[m.value for m in AxisLimitPolicy], default="scaled")


def _lns_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--phase1-iters", type=int, default=100)
    p.add_argument("--phase1-destroy", type=float, default=0.5)
    p.add_argument("--phase2-iters", type=int, default=100)
    p.add_argument("--phase2-destroy", type=float, default=0.2)
    p.add_argument("--endpoint-opt", choices=lns.ENDPOINT_MODES, default="neighbors")
    p.add_argument("--sweep", default=None, help="start:stop:step speed fractions")


class _Parser(argparse.ArgumentParser):
    """Argument parser that reports usage errors with exit code 1."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="kopkit", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="kinematic orienteering solve (LNS or exact)")
    _common(p)
    _kop_flags(p)
    _lns_flags(p)
    p.add_argument("--exact", action="store_true")
    p.add_argument("--start", choices=["free", "rest"], default="free")
    p.add_argument("--out", help="solution JSON path")
    p.add_argument("--traj-out", help="trajectory CSV path")
    p.add_argument("--dt", type=float, default=0.02)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("dop", help="Dubins orienteering LNS at constant speed")
    _common(p)
    _lns_flags(p)
    p.add_argument("--speed", type=float, default=None)
    p.add_argument("--out", help="solution JSON path of the best run")
    p.set_defaults(func=cmd_dop)

    p = sub.add_parser("export-milp", help="write the routing model in LP format")
    _common(p)
    _kop_flags(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_export_milp)

    p = sub.add_parser("cost-matrix", help="build and store a cost tensor")
    _common(p, budget=False)
    _kop_flags(p)
    p.add_argument("--format", choices=["bin", "json"], default="bin")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_cost_matrix)

    p = sub.add_parser("traj", help="sample the trajectory of a stored solution")
    p.add_argument("--solution", required=True)
    p.add_argument("--instance", required=True)
    p.add_argument("--dt", type=float, default=0.02)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_traj)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InfeasibleBudget as exc:
        print(f"kopkit: infeasible budget: {exc}", file=sys.stderr)
        return 2
    except SearchSpaceTooLarge as exc:
        print(f"kopkit: {exc}", file=sys.stderr)
        return 3
    except (OSError, ValueError, KeyError, NoCommonDuration) as exc:
        print(f"kopkit: {exc}", file=sys.stderr)
        return 1
