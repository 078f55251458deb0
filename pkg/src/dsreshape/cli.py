"""Batch command line: learn a reshaping controller, roll out, benchmark.

Exit codes: 0 success, 2 parse error in input files, 3 numerical failure,
4 bad flags or missing paths.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import dataset as ds_io
from . import metrics as met
from . import sim
from .gp import (
    DEFAULT_HYPER,
    FitError,
    GpField,
    GpModel,
    Hyperparameters,
    NumericalError,
    fit_hyperparameters,
)
from .reshaper import ClockParams, ReshapedSystem, default_clock, extract_training_pairs
from .systems import DimensionMismatchError, LinearGain, from_dict as system_from_dict

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_NUMERICAL = 3
EXIT_BAD_FLAGS = 4

DEFAULT_PORT = 8787


class CliParser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_BAD_FLAGS)


def _parse_vector(text):
    try:
        return np.array([float(v) for v in text.split(",")], dtype=float)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated vector: {text!r}")


def _parse_hyper(text):
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("--hyper wants sk2,l,sn2")
    try:
        return Hyperparameters(*(float(p) for p in parts))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _parse_hold(text):
    try:
        t, dur = text.split(":")
        return sim.Hold(float(t), float(dur))
    except ValueError:
        raise argparse.ArgumentTypeError(f"--hold wants t:duration, got {text!r}")


def _load_original(spec, goal, parser):
    """--original accepts 'linear:GAIN' (goal required) or a JSON file path."""
    if spec.startswith("linear"):
        _, _, gain = spec.partition(":")
        if goal is None:
            parser.error("--original linear:GAIN needs --goal")
        return LinearGain(float(gain) if gain else 3.0, goal)
    path = Path(spec)
    if not path.exists():
        parser.error(f"original system spec not found: {spec}")
    return system_from_dict(json.loads(path.read_text()))


def _demo_files(directory):
    return sorted(p for p in Path(directory).iterdir()
                  if p.suffix in (".csv", ".json") and p.name != "motion.json")


def _preprocess(demos, subsample_to, truncate_k):
    out = []
    for d in demos:
        if subsample_to:
            d = ds_io.subsample(d, subsample_to)
        if truncate_k:
            d = ds_io.truncate_near_goal(d, truncate_k)
        out.append(d)
    return out


def _pooled_pairs(demos, original):
    xs, ys = [], []
    for d in demos:
        X, Lam = extract_training_pairs(d, original)
        xs.append(X)
        ys.append(Lam)
    return np.vstack(xs), np.vstack(ys)


def cmd_learn(args, parser):
    demo_dir = Path(args.demos)
    if not demo_dir.is_dir():
        parser.error(f"demonstration directory not found: {args.demos}")
    files = _demo_files(demo_dir)
    if not files:
        print(f"no demonstration files in {args.demos}", file=sys.stderr)
        return EXIT_PARSE
    demos = _preprocess([ds_io.load_demonstration(p) for p in files],
                        args.subsample, args.truncate_goal)
    original = _load_original(args.original, args.goal, parser)

    hyper = args.hyper or DEFAULT_HYPER
    if args.fit_hyper:
        X, Lam = _pooled_pairs(demos, original)
        hyper = fit_hyperparameters(X, Lam, hyper, budget=args.fit_budget)
        print(f"fitted hyper: sk2={hyper.signal_variance:.6g} "
              f"l={hyper.length_scale:.6g} sn2={hyper.noise_variance:.6g}")

    t_f = args.tf if args.tf is not None else default_clock(demos[-1].duration).t_f
    rs = ReshapedSystem(original, ClockParams(t_f, args.alpha), args.cbar, hyper=hyper)
    if not rs.gas_guaranteed:
        print("warning: original stability is unknown; convergence after t_f "
              "is not guaranteed", file=sys.stderr)
    total = [0, 0]
    for path, demo in zip(files, demos):
        res = rs.learn_increment(demo)
        total[0] += res.accepted
        total[1] += res.rejected
        print(f"{path.name}: accepted={res.accepted} rejected={res.rejected}")
    print(f"total: accepted={total[0]} rejected={total[1]} "
          f"(threshold {args.cbar}, {len(demos)} demos)")

    Path(args.out).write_text(json.dumps(rs.to_dict()) + "\n")
    print(f"model written to {args.out}")
    if args.fig:
        _learn_figure(rs, demos, args.fig)
    return EXIT_OK


def _learn_figure(rs, demos, path):
    if rs.dimension != 2:
        print("figure rendering skipped (2-D only)", file=sys.stderr)
        return
    from . import plots
    box = np.vstack([d.bounding_box() for d in demos] + [np.stack([rs.goal, rs.goal], 1)])
    lo = box[:, 0].reshape(-1, 2).min(axis=0)
    hi = box[:, 1].reshape(-1, 2).max(axis=0)
    pad = 0.15 * max(float(np.max(hi - lo)), 1e-6)
    bounds = np.stack([lo - pad, hi + pad], axis=1)
    grid = sim.vector_field_grid(rs, 1.0, bounds, (22, 22))
    plots.save_field_figure(grid, path, demo=demos[0], title="learned field (s=1)")
    print(f"figure written to {path}")


def _default_goal_tolerance(rs, x0):
    if not rs.controller.is_empty:
        pts = rs.controller.inputs
        diag = float(np.linalg.norm(pts.max(axis=0) - pts.min(axis=0)))
        if diag > 0:
            return 1e-3 * diag
    return max(1e-3 * float(np.linalg.norm(x0 - rs.goal)), 1e-9)


def cmd_rollout(args, parser):
    model_path = Path(args.model)
    if not model_path.exists():
        parser.error(f"model file not found: {args.model}")
    rs = ReshapedSystem.from_dict(json.loads(model_path.read_text()))
    x0 = args.start
    tol = args.goal_tolerance or _default_goal_tolerance(rs, x0)
    cfg = sim.RolloutConfig(
        dt=args.dt,
        max_time=args.max_time if args.max_time is not None else rs.clock.t_f + 10.0,
        goal_tolerance=tol,
        integrator=args.integrator,
        perturbations=tuple(args.hold or ()),
    )
    traj = sim.rollout(rs, x0, cfg)
    print(f"terminated_by: {traj.terminated_by} at t={traj.t[-1]:.3f} "
          f"(goal error {traj.goal_error():.3e})")
    max_speed = float(np.linalg.norm(traj.xdot, axis=1).max())
    eps = args.stall_eps if args.stall_eps is not None else 1e-3 * max_speed
    if len(traj) >= 2:
        for st in sim.detect_stall(traj, eps, args.stall_window):
            center = ", ".join(f"{v:.4g}" for v in st.x_stall)
            print(f"stall: t=[{st.t_enter:.3f}, {st.t_exit:.3f}] near ({center})")
    traj.to_csv(args.out)
    print(f"trajectory written to {args.out}")
    if args.json:
        Path(args.json).write_text(json.dumps(traj.to_dict()) + "\n")
    if args.fig:
        from . import plots
        plots.save_trajectory_figure(traj, args.fig)
        print(f"figure written to {args.fig}")
    return EXIT_OK


def _bench_original(kind, motion, hyper):
    if kind.startswith("linear"):
        _, _, gain = kind.partition(":")
        return LinearGain(float(gain) if gain else 3.0, motion.goal)
    if kind == "gp":
        X = np.vstack([d.pos for d in motion.demos])
        V = np.vstack([d.vel for d in motion.demos])
        return GpField(GpModel.from_data(X, V, hyper), motion.goal)
    raise ValueError(f"unknown original kind {kind!r}")


def cmd_bench(args, parser):
    data_dir = Path(args.dataset)
    if not data_dir.is_dir():
        parser.error(f"dataset directory not found: {args.dataset}")
    motions = ds_io.load_dataset(data_dir)
    if not motions:
        print(f"no motions found under {args.dataset}", file=sys.stderr)
        return EXIT_PARSE
    wanted = set(args.metrics.split(","))
    unknown = wanted - {"sea", "vrmse"}
    if unknown:
        parser.error(f"unknown metrics: {sorted(unknown)}")

    report = met.MetricReport()
    figdir = Path(args.figdir) if args.figdir else None
    if figdir:
        figdir.mkdir(parents=True, exist_ok=True)
    for motion in motions:
        demos = motion.demos[: args.max_demos] if args.max_demos else motion.demos
        demos = _preprocess(demos, args.subsample, args.truncate_goal)
        original = _bench_original(args.original, motion,
                                   args.original_hyper or DEFAULT_HYPER)
        hyper = args.hyper or DEFAULT_HYPER
        if args.fit_hyper:
            X, Lam = _pooled_pairs(demos, original)
            hyper = fit_hyperparameters(X, Lam, hyper, budget=args.fit_budget)
        t_f = default_clock(max(d.duration for d in demos)).t_f
        rs = ReshapedSystem(original, ClockParams(t_f), args.cbar, hyper=hyper)
        for demo in demos:
            rs.learn_increment(demo)
        trajs = []
        for demo in demos:
            sea = vr = None
            tol = 1e-3 * max(demo.bbox_diagonal(), 1e-12)
            if "sea" in wanted:
                cfg = sim.RolloutConfig(dt=args.dt, max_time=demo.duration,
                                        goal_tolerance=tol)
                traj = sim.rollout(rs, demo.start, cfg)
                trajs.append(traj)
                resampled = met.resample_equidistant(traj.x, len(demo))
                sea = met.swept_error_area(resampled, demo.pos)
            if "vrmse" in wanted:
                vr = met.velocity_rmse(demo, rs)
            report.add(motion.name, demo.name, sea=sea, v_rmse=vr)
        if figdir and motion.goal.size == 2:
            from . import plots
            box = np.vstack([d.pos for d in demos])
            lo, hi = box.min(axis=0), box.max(axis=0)
            pad = 0.15 * float(np.max(hi - lo))
            grid = sim.vector_field_grid(rs, 1.0, np.stack([lo - pad, hi + pad], 1),
                                         (22, 22))
            plots.save_field_figure(grid, figdir / f"{motion.name}.png",
                                    traj=trajs[0] if trajs else None,
                                    demo=demos[0], title=motion.name)

    table = report.to_table(label=f"{args.original}+reshape")
    breakdown = report.per_motion_table()
    Path(args.out).write_text(table + "\n" + breakdown)
    sys.stdout.write(table)
    print(f"table written to {args.out}")
    if args.csv:
        lines = ["motion,demo,sea,v_rmse"] + [
            f"{r.motion},{r.demo},{'' if r.sea is None else repr(r.sea)},"
            f"{'' if r.v_rmse is None else repr(r.v_rmse)}"
            for r in report.rows
        ]
        Path(args.csv).write_text("\n".join(lines) + "\n")
    if args.json:
        Path(args.json).write_text(json.dumps(report.to_dict()) + "\n")
    if figdir:
        from . import plots
        plots.save_bench_figure(report, figdir / "summary.png")
        print(f"figures written to {figdir}")
    return EXIT_OK


def cmd_serve(args, parser):
    from .service import serve_forever

    port = args.port if args.port is not None else int(os.environ.get("RDS_PORT", DEFAULT_PORT))
    serve_forever(args.host, port)
    return EXIT_OK


def build_parser() -> CliParser:
    parser = CliParser(prog="dsreshape",
                       description="Reshape dynamical systems from demonstrations.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("learn", help="learn a reshaping controller from demos")
    p.add_argument("--original", required=True,
                   help="system JSON file, or linear[:GAIN] with --goal")
    p.add_argument("--goal", type=_parse_vector, default=None)
    p.add_argument("--demos", required=True, help="directory of demonstration files")
    p.add_argument("--cbar", type=float, required=True,
                   help="acceptance threshold in velocity units")
    p.add_argument("--tf", type=float, default=None,
                   help="control cutoff time (default 1.25x last demo duration)")
    p.add_argument("--alpha", type=float, default=10.0)
    p.add_argument("--hyper", type=_parse_hyper, default=None, help="sk2,l,sn2")
    p.add_argument("--fit-hyper", action="store_true",
                   help="maximize marginal likelihood before learning")
    p.add_argument("--fit-budget", type=int, default=90)
    p.add_argument("--subsample", type=int, default=None)
    p.add_argument("--truncate-goal", type=int, default=0)
    p.add_argument("--out", required=True, help="output model JSON path")
    p.add_argument("--fig", default=None, help="optional field figure (2-D)")

    p = sub.add_parser("rollout", help="integrate a learned model")
    p.add_argument("--model", required=True)
    p.add_argument("--start", type=_parse_vector, required=True)
    p.add_argument("--dt", type=float, default=0.005)
    p.add_argument("--max-time", type=float, default=None)
    p.add_argument("--goal-tolerance", type=float, default=None)
    p.add_argument("--integrator", choices=("euler", "rk4"), default="rk4")
    p.add_argument("--hold", type=_parse_hold, action="append",
                   help="freeze state: t:duration (repeatable)")
    p.add_argument("--stall-eps", type=float, default=None)
    p.add_argument("--stall-window", type=float, default=0.1)
    p.add_argument("--out", required=True, help="output trajectory CSV")
    p.add_argument("--json", default=None)
    p.add_argument("--fig", default=None)

    p = sub.add_parser("bench", help="metric tables over a motion dataset")
    p.add_argument("--dataset", required=True)
    p.add_argument("--original", default="linear",
                   help="linear[:GAIN] or gp (learned from the demos)")
    p.add_argument("--original-hyper", type=_parse_hyper, default=None)
    p.add_argument("--metrics", default="sea,vrmse")
    p.add_argument("--cbar", type=float, default=0.0,
                   help="0 keeps every sample (no sparsification)")
    p.add_argument("--hyper", type=_parse_hyper, default=None)
    p.add_argument("--fit-hyper", action="store_true")
    p.add_argument("--fit-budget", type=int, default=90)
    p.add_argument("--subsample", type=int, default=None)
    p.add_argument("--truncate-goal", type=int, default=0)
    p.add_argument("--max-demos", type=int, default=None)
    p.add_argument("--dt", type=float, default=0.005)
    p.add_argument("--out", required=True, help="output table path")
    p.add_argument("--csv", default=None, help="per-demo metric rows")
    p.add_argument("--json", default=None)
    p.add_argument("--figdir", default=None)

    p = sub.add_parser("serve", help="run the teaching HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=None,
                   help="default: RDS_PORT env var or 8787")

    return parser


_COMMANDS = {
    "learn": cmd_learn,
    "rollout": cmd_rollout,
    "bench": cmd_bench,
    "serve": cmd_serve,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args, parser)
    except ds_io.ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except json.JSONDecodeError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (NumericalError, FitError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (DimensionMismatchError, ValueError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
