"""Command line front end.

Every subcommand reads a system JSON file and prints one report object to
standard output.  Failures print a single-line JSON error object to
standard error and exit with 1 (bad input), 2 (violated precondition) or
3 (exhausted budget).
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time

import numpy as np

from . import geometry as geo
from .control_set import approximate_control_set, boundedness_classifier
from .errors import AnalysisError, ParseError, SpecError
from .oracle import (
    DEFAULT_BUDGET,
    OracleConfig,
    discretization_sweep,
    sweep_diagnostics,
)
from .potential import parse_potential
from .pressure import (
    SpanningConstructionConfig,
    invariance_entropy,
    invariance_pressure_formula,
    spanning_construction,
    upper_bound_via_periodic,
)
from .reachability import control_k, reach_k, system_from_json
from .spectral import (
    DEFAULT_TOL_CENTER,
    classify_global_controllability,
    kalman_controllable,
    spectral_report,
    spectral_split,
)

SCHEMA = "1"
Q_SHRINK = 1e-6


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise SpecError(f"{self.prog}: {message}")


def _clean(obj):
    """Plain JSON types; non-finite floats become null."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(obj) else None
    return obj


def _load_system(path):
    try:
        with open(path) as fh:
            obj = json.load(fh)
    except OSError as exc:
        raise SpecError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise SpecError(f"{path} is not valid JSON: {exc.msg} at line {exc.lineno}") from None
    return obj, system_from_json(obj)


def _box_arg(text, dim, name):
    try:
        lo, hi = json.loads(text)
        P = geo.box(lo, hi)
    except (ValueError, TypeError) as exc:
        raise SpecError(f"--{name} must be [[lower...], [upper...]]: {exc}") from None
    if P.dim != dim:
        raise SpecError(f"--{name} must live in R^{dim}")
    return P


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])


def _control_set(system, split, args):
    return approximate_control_set(system, split, k_max=args.horizon, conv_tol=args.tol)


def _shrunk(D):
    normals, offsets = D.halfspaces
    return geo.clip(D, normals, offsets - Q_SHRINK)


def cmd_analyze(system, args):
    split = spectral_split(system.A, args.center_tol)
    out = spectral_report(system.A, system.B, split)
    out["controllable"] = kalman_controllable(system.A, system.B)["controllable"]
    out["class"] = classify_global_controllability(system.A, system.B, split).value
    out["bounded_prediction"] = boundedness_classifier(split)
    warnings = [] if split.hyperbolic else ["A is not hyperbolic; the control set is unbounded"]
    return out, warnings, None


def cmd_reach(system, args):
    P = control_k(system, args.steps) if args.controllable else reach_k(system, args.steps)
    out = {"k": args.steps, "set": "controllable" if args.controllable else "reachable",
           "vertices": P.vertices}
    return out, [], ([f"x{i}" for i in range(system.d)], P.vertices)


def cmd_control_set(system, args):
    split = spectral_split(system.A, args.center_tol)
    approx = _control_set(system, split, args)
    warnings = []
    if not approx.bounded_prediction:
        warnings.append("A is not hyperbolic; the control set is unbounded")
    elif not approx.converged:
        warnings.append(f"not converged after {approx.horizon} steps")
    out = approx.to_json()
    out["deltas"] = approx.deltas
    out["inradii"] = approx.inradii
    return out, warnings, ([f"x{i}" for i in range(system.d)], approx.inner.vertices)


def cmd_entropy(system, args):
    split = spectral_split(system.A, args.center_tol)
    return {"entropy": invariance_entropy(system, split)}, [], None


def cmd_pressure(system, args):
    split = spectral_split(system.A, args.center_tol)
    p = parse_potential(args.potential, system.d, system.m)
    out = invariance_pressure_formula(system, p, split, args.grid, args.refine).to_json()
    warnings = []
    if args.upper_bound:
        approx = _control_set(system, split, args)
        if not approx.converged:
            warnings.append("control set not converged; periodic bound uses the last iterate")
        bound = upper_bound_via_periodic(system, p, approx.inner, split, args.tau_max,
                                         args.samples, args.seed, args.grid, args.refine)
        out["periodic_bound"] = bound.to_json()
        if not bound.found:
            warnings.append("no admissible periodic orbit found")
    return out, warnings, None


def cmd_spanning(system, args):
    split = spectral_split(system.A, args.center_tol)
    p = parse_potential(args.potential, system.d, system.m)
    approx = _control_set(system, split, args)
    cfg = SpanningConstructionConfig(args.tau0, args.m, args.xi, args.delta, args.b0,
                                     samples=args.samples, seed=args.seed)
    ss = spanning_construction(system, approx.inner, cfg, p, split)
    if args.controls_out:
        ss.dump_controls(args.controls_out)
    warnings = [] if approx.converged else ["control set not converged"]
    return ss.to_json(), warnings, None


def cmd_oracle(system, args):
    p = parse_potential(args.potential, system.d, system.m)
    warnings = []
    if args.q_box:
        Q = _box_arg(args.q_box, system.d, "q-box")
    else:
        approx = _control_set(system, spectral_split(system.A, args.center_tol), args)
        if not approx.converged:
            warnings.append("control set not converged; Q is the last iterate")
        Q = _shrunk(approx.inner)
    if args.k_box:
        K = _box_arg(args.k_box, system.d, "k-box")
    else:
        c = Q.centroid()
        K = geo.translate(geo.scale(geo.translate(Q, -c), 0.5), c)
    taus = [int(t) for t in args.taus.split(",")] if args.taus else [args.tau]
    cfg = OracleConfig(taus[0], args.control_grid, args.state_grid, Q, K, args.total, args.budget)
    estimates = discretization_sweep(system, cfg, p, taus)
    for e in estimates:
        if not e.exact:
            warnings.append(f"tau={e.chosen_set.tau}: greedy cover, a_tau within factor {e.cover_gap:.4g}")
    out = dict(estimates[0].to_json()) if len(estimates) == 1 else {}
    if len(estimates) > 1:
        out["estimates"] = [e.to_json() for e in estimates]
        out["sweep"] = sweep_diagnostics(estimates)
    out["Q"] = Q.to_json()
    out["K"] = K.to_json()
    rows = [(e.chosen_set.tau, e.rate) for e in estimates]
    return out, warnings, (["tau", "rate"], rows)


COMMANDS = {
    "analyze": cmd_analyze,
    "reach": cmd_reach,
    "control-set": cmd_control_set,
    "entropy": cmd_entropy,
    "pressure": cmd_pressure,
    "spanning": cmd_spanning,
    "oracle": cmd_oracle,
}


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("system", help="system JSON file with A, B and U")
    common.add_argument("--output", choices=["json", "csv"], default="json",
                        help="csv also writes a point cloud to --csv-path")
    common.add_argument("--csv-path", default=None, help="CSV destination (default <command>.csv)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--tol", type=float, default=1e-3, help="control-set convergence tolerance")
    common.add_argument("--center-tol", type=float, default=DEFAULT_TOL_CENTER,
                        help="band around the unit circle counted as center spectrum")
    common.add_argument("--horizon", type=int, default=25, help="maximal control-set sweep length")
    common.add_argument("--timing", action="store_true", help="add wall_time to the report")

    parser = _Parser(prog="invariance-pressure",
                     description="Controllability and invariance pressure of linear control systems.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("analyze", parents=[common], help="spectrum, controllability, boundedness")
    sp = sub.add_parser("reach", parents=[common], help="reachable set R_k(0)")
    sp.add_argument("--steps", type=int, required=True)
    sp.add_argument("--controllable", action="store_true", help="controllable set C_k(0) instead")
    sub.add_parser("control-set", parents=[common], help="polytope approximation of the control set")
    sub.add_parser("entropy", parents=[common], help="invariance entropy of the control set")

    sp = sub.add_parser("pressure", parents=[common], help="invariance pressure by the closed form")
    sp.add_argument("--potential", default="0")
    sp.add_argument("--grid", type=int, default=33)
    sp.add_argument("--refine", type=int, default=10)
    sp.add_argument("--upper-bound", action="store_true", help="also search periodic orbits")
    sp.add_argument("--tau-max", type=int, default=None)
    sp.add_argument("--samples", type=int, default=64)

    sp = sub.add_parser("spanning", parents=[common], help="explicit spanning set")
    sp.add_argument("--tau0", type=int, required=True)
    sp.add_argument("--m", type=int, required=True)
    sp.add_argument("--xi", type=float, required=True)
    sp.add_argument("--delta", type=float, default=None)
    sp.add_argument("--b0", type=float, default=None)
    sp.add_argument("--potential", default="0")
    sp.add_argument("--samples", type=int, default=200)
    sp.add_argument("--controls-out", default=None, help="write the controls to this JSON file")

    sp = sub.add_parser("oracle", parents=[common], help="brute-force grid estimate")
    sp.add_argument("--tau", type=int, default=None)
    sp.add_argument("--taus", default=None, help="comma separated horizons")
    sp.add_argument("--control-grid", type=int, required=True)
    sp.add_argument("--state-grid", type=int, required=True)
    sp.add_argument("--potential", default="0")
    sp.add_argument("--total", action="store_true", help="total pressure with state potentials")
    sp.add_argument("--budget", type=float, default=DEFAULT_BUDGET)
    sp.add_argument("--q-box", default=None, help="Q as [[lower...], [upper...]]")
    sp.add_argument("--k-box", default=None, help="K as [[lower...], [upper...]]")
    return parser


def report_argv(report: dict, system_path: str) -> list:
    """Command line that reproduces ``report`` with the system stored at ``system_path``."""
    argv = [report["command"], system_path]
    for key, value in report["parameters"].items():
        if key == "system" or value is None or value is False:
            continue
        flag = "--" + key.replace("_", "-")
        argv += [flag] if value is True else [flag, str(value)]
    return argv


def _error_object(exc):
    out = {"error": type(exc).__name__, "message": str(exc),
           "exit_code": getattr(exc, "exit_code", 1)}
    if isinstance(exc, SpecError) and exc.pointer:
        out["pointer"] = exc.pointer
    if isinstance(exc, ParseError):
        out["offset"] = exc.offset
        if exc.expected:
            out["expected"] = sorted(exc.expected)
    return out


def run(argv=None) -> dict:
    """Parse ``argv``, run the subcommand and return the report."""
    args = build_parser().parse_args(argv)
    if args.command == "oracle" and args.tau is None and args.taus is None:
        raise SpecError("oracle needs --tau or --taus")
    if args.command == "oracle" and args.taus:
        try:
            [int(t) for t in args.taus.split(",")]
        except ValueError:
            raise SpecError("--taus must be comma separated integers") from None
    start = time.perf_counter()
    raw, system = _load_system(args.system)
    results, warnings, cloud = COMMANDS[args.command](system, args)
    params = {k: v for k, v in vars(args).items()
              if k not in ("command", "system", "output", "csv_path", "timing")}
    params["system"] = raw
    report = {
        "schema": SCHEMA,
        "command": args.command,
        "parameters": params,
        "results": results,
        "warnings": warnings,
    }
    if args.timing:
        report["wall_time"] = time.perf_counter() - start
    if args.output == "csv" and cloud is not None:
        _write_csv(args.csv_path or f"{args.command}.csv", *cloud)
    return _clean(report)


def main(argv=None) -> int:
    try:
        report = run(argv)
    except AnalysisError as exc:
        err = _error_object(exc)
    except ValueError as exc:
        err = _error_object(SpecError(str(exc)))
    except Exception as exc:  # noqa: BLE001 - keep the one-line error contract
        err = {"error": type(exc).__name__, "message": str(exc), "exit_code": 2}
    else:
        json.dump(report, sys.stdout, indent=2)
        sys.stdout.write("\n")
        return 0
    print(json.dumps(err), file=sys.stderr)
    return err["exit_code"]

