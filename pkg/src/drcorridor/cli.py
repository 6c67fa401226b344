"""Command-line front end: plan, benchmark, validate.

Exit codes: 0 success, 1 config/validation error, 2 infeasible problem.
Every failure also produces a machine-readable ``error.json`` in the
output directory (stderr when no directory is writable), and every output
file is written atomically (temp file + rename) so partial artifacts
never persist.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile

import numpy as np

from . import __version__
from .bezier import basis_matrix, derivative_control_points
from .config import ConfigError, ambiguity_specs_for, benchmark_cases, load_config
from .corridor import DimensionMismatchError, validate
from .qp import PlanningError, QpInfeasibleError, SolverStalledError, plan
from .robustness import run_benchmark
from .svg import plan_overlay, violation_histogram
from .tightening import LOWER, UPPER, TighteningInfeasibleError, tighten

ENV_OUT_DIR = "DRCORRIDOR_OUT"

TRAJECTORY_SCHEMA = "drcorridor/trajectory v1"
TIGHTENED_SCHEMA = "drcorridor/tightened-bounds v1"


def atomic_write(path: str, text: str):
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit_error(out_dir: str | None, error_class: str, message: str, details=None):
    record = {"error_class": error_class, "message": message}
    if details:
        record["details"] = details
    text = json.dumps(record, indent=2, sort_keys=True)
    if out_dir:
        try:
            atomic_write(os.path.join(out_dir, "error.json"), text + "\n")
        except OSError:
            pass
    print(text, file=sys.stderr)


def _resolve_out_dir(args, config) -> str:
    if getattr(args, "out", None):
        return args.out
    if config is not None and config.output.directory:
        return config.output.directory
    return os.environ.get(ENV_OUT_DIR, "out")


def _axis_names(m: int) -> list[str]:
    return ["x", "y", "z"][:m]


def _trajectory_csv(traj, intervals_per_segment: int) -> str:
    m = traj.dimension
    axes = _axis_names(m)
    header = (
        ["t"]
        + axes
        + [f"v{a}" for a in axes]
        + [f"a{a}" for a in axes]
    )
    lines = [f"# schema: {TRAJECTORY_SCHEMA}", ",".join(header)]
    ss = np.linspace(0.0, 1.0, intervals_per_segment + 1)
    bounds = traj.boundary_times
    for i, seg in enumerate(traj.segments):
        pos = basis_matrix(seg.degree, ss) @ seg.control_points
        vel = basis_matrix(seg.degree - 1, ss) @ derivative_control_points(seg, 1, physical=True)
        acc = basis_matrix(seg.degree - 2, ss) @ derivative_control_points(seg, 2, physical=True)
        times = bounds[i] + ss * seg.duration
        start = 1 if i > 0 else 0
        for r in range(start, len(ss)):
            row = [repr(float(times[r]))]
            row += [repr(float(v)) for v in pos[r]]
            row += [repr(float(v)) for v in vel[r]]
            row += [repr(float(v)) for v in acc[r]]
            lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def _tightened_csv(corridor, tightened) -> str:
    lines = [
        f"# schema: {TIGHTENED_SCHEMA}",
        "region,dim,nominal_lower,nominal_upper,tightened_lower,tightened_upper,"
        "lower_risk_lower_side,lower_risk_upper_side",
    ]
    for i, region in enumerate(corridor.regions):
        for mu in range(corridor.dimension):
            lines.append(
                f"{i + 1},{mu},{region.lower[mu]!r},{region.upper[mu]!r},"
                f"{tightened.effective_lower[i, mu]!r},{tightened.effective_upper[i, mu]!r},"
                f"{tightened.lower_risks[(i, LOWER)]!r},{tightened.lower_risks[(i, UPPER)]!r}"
            )
    return "\n".join(lines) + "\n"


def cmd_plan(args) -> int:
    try:
        config = load_config(args.config)
    except ConfigError as exc:
        _emit_error(args.out, "config", str(exc))
        return 1
    out_dir = _resolve_out_dir(args, config)
    if config.corridor is None:
        _emit_error(out_dir, "config", "config needs corridor and path sections for planning")
        return 1
    mode = args.mode
    ambiguity = None
    if mode == "drscc":
        if config.ambiguity is None:
            _emit_error(out_dir, "config", "drscc mode needs an ambiguity section")
            return 1
        try:
            ambiguity = ambiguity_specs_for(config.ambiguity, config.corridor)
        except ConfigError as exc:
            _emit_error(out_dir, "config", str(exc))
            return 1

    try:
        result = plan(config.corridor, config.path, config.snap, mode=mode, ambiguity=ambiguity)
    except TighteningInfeasibleError as exc:
        _emit_error(
            out_dir, "infeasible", str(exc),
            details={"stage": "tightening",
                     "crossings": [{"region": i + 1, "dim": mu} for i, mu in exc.crossings]},
        )
        return 2
    except QpInfeasibleError as exc:
        _emit_error(out_dir, "infeasible", str(exc),
                    details={"stage": "qp", "rows": exc.row_descriptions})
        return 2
    except SolverStalledError as exc:
        _emit_error(out_dir, "solver", str(exc), details={"stage": "qp"})
        return 2
    except (ValueError, DimensionMismatchError, PlanningError) as exc:
        _emit_error(out_dir, "validation", str(exc))
        return 1

    atomic_write(
        os.path.join(out_dir, "trajectory.csv"),
        _trajectory_csv(result.trajectory, config.output.resolution),
    )
    if result.tightened is not None:
        atomic_write(
            os.path.join(out_dir, "tightened.csv"),
            _tightened_csv(config.corridor, result.tightened),
        )
    sol = result.solution
    summary = {
        "schema": "drcorridor/plan-summary v1",
        "version": __version__,
        "mode": mode,
        "status": sol.status,
        "objective": sol.objective,
        "kkt": {
            "stationarity": sol.stationarity,
            "feasibility": sol.feasibility,
            "complementarity": sol.complementarity,
        },
        "iterations": sol.iterations,
        "wall_time_s": sol.wall_time,
        "segments": result.trajectory.num_segments,
        "degree": result.trajectory.degree,
        "dimension": result.trajectory.dimension,
    }
    atomic_write(os.path.join(out_dir, "summary.json"),
                 json.dumps(summary, indent=2, sort_keys=True) + "\n")
    atomic_write(
        os.path.join(out_dir, "plan.svg"),
        plan_overlay(config.corridor, result.tightened, config.path, result.trajectory),
    )
    print(f"optimal: objective={sol.objective:.6g}, wall_time={sol.wall_time:.3f}s, out={out_dir}")
    return 0


def cmd_benchmark(args) -> int:
    try:
        config = load_config(args.config)
        if config.benchmark is None:
            raise ConfigError("benchmark", "config has no benchmark section")
        cases = benchmark_cases(config)
    except ConfigError as exc:
        _emit_error(args.out, "config", str(exc))
        return 1
    out_dir = _resolve_out_dir(args, config)

    bench = config.benchmark
    spec = bench.spec
    if args.seed is not None or args.instances is not None:
        from dataclasses import replace

        spec = replace(
            spec,
            seed=args.seed if args.seed is not None else spec.seed,
            instances_per_alpha=args.instances if args.instances is not None else spec.instances_per_alpha,
        )
    report = run_benchmark(
        cases,
        spec=spec,
        families=bench.families,
        radii=bench.radii,
        risks=bench.risks,
        snap=config.snap,
        workers=args.threads,
    )
    atomic_write(os.path.join(out_dir, "summary.csv"), report.to_csv())
    atomic_write(os.path.join(out_dir, "table.txt"), report.text_table())
    atomic_write(os.path.join(out_dir, "timings.csv"), report.timings_csv())
    for case in report.cases:
        for block in case.blocks:
            for cell in block.cells:
                if cell.status != "ok":
                    continue
                name = f"{case.case_name}_{block.family_label}_{cell.label}".replace(
                    " ", ""
                ).replace("(", "_").replace(")", "").replace(",", "_").replace("=", "")
                svg = violation_histogram(
                    spec.alphas, cell.per_alpha, spec.instances_per_alpha,
                    f"{case.case_name} / {block.family_label} / {cell.label}",
                )
                atomic_write(os.path.join(out_dir, "histograms", f"{name}.svg"), svg)
    print(report.text_table())
    print(f"wrote {out_dir}/summary.csv, table.txt, timings.csv, histograms/")
    return 0


def cmd_validate(args) -> int:
    try:
        config = load_config(args.config)
    except ConfigError as exc:
        _emit_error(None, "config", str(exc))
        return 1
    if config.corridor is None:
        _emit_error(None, "config", "config needs corridor and path sections to validate")
        return 1
    try:
        issues = validate(config.corridor, config.path)
    except DimensionMismatchError as exc:
        _emit_error(None, "validation", str(exc))
        return 1
    for issue in issues:
        print(f"violation: {issue}")
    crossings = []
    if config.ambiguity is not None:
        try:
            specs = ambiguity_specs_for(config.ambiguity, config.corridor)
        except ConfigError as exc:
            _emit_error(None, "config", str(exc))
            return 1
        tightened = tighten(config.corridor, specs)
        crossings = list(tightened.crossings)
        for i, mu in crossings:
            print(f"tightening infeasible: region {i + 1}, dim {mu}")
    if issues or crossings:
        return 1
    print("valid: corridor/path invariants hold"
          + ("" if config.ambiguity is None else " and tightening preview is feasible"))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="drcorridor",
        description="Minimum-snap Bezier planning through safe corridors with "
        "Wasserstein-robust bound tightening.",
    )
    parser.add_argument("--version", action="version", version=f"drcorridor {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_plan = sub.add_parser("plan", help="plan one trajectory and write CSV/SVG artifacts")
    p_plan.add_argument("config", help="YAML configuration file")
    p_plan.add_argument("--mode", choices=["nominal", "drscc"], default="nominal")
    p_plan.add_argument("--out", default=None, help=f"output directory (or ${ENV_OUT_DIR})")
    p_plan.set_defaults(func=cmd_plan)

    p_bench = sub.add_parser("benchmark", help="run the perturbation benchmark grid")
    p_bench.add_argument("config", help="YAML configuration file with a benchmark section")
    p_bench.add_argument("--out", default=None)
    p_bench.add_argument("--seed", type=int, default=None, help="override benchmark seed")
    p_bench.add_argument("--instances", type=int, default=None,
                         help="override instances per mixture weight")
    p_bench.add_argument("--threads", type=int, default=1,
                         help="worker threads for instance evaluation")
    p_bench.set_defaults(func=cmd_benchmark)

    p_val = sub.add_parser("validate", help="check corridor/path invariants and tightening")
    p_val.add_argument("config")
    p_val.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
