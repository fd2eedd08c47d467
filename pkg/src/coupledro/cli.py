"""Command line entry point: ``coupledro <command> ...``."""

from __future__ import annotations

import argparse
import json
import logging
import sys

import numpy as np

from . import experiments as ex
from . import polyhedra as ph
from . import solvers as sv
from .errors import (
    AssumptionViolated,
    GeometryError,
    IterationLimit,
    NonPolyhedralAtomInRC,
    NotNested,
    ParseError,
    SolverFailure,
    VertexBudgetExceeded,
)
from .lp_core import MalformedProgram
from .robust_model import problem_from_json
from .shrinkage import compute_coeff_factors, compute_rhs_factors, translate_by_symmetry_point

EXIT_OK = 0
EXIT_BOUND = 2
EXIT_PARSE = 3
EXIT_SOLVER = 4

log = logging.getLogger("coupledro")


def _load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"{path}: {exc}") from exc


def _load_spec(obj):
    try:
        return ph.spec_from_json(obj)
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"bad set JSON: {exc}") from exc


def _load_set_pair(path):
    """{"U": ..., "Ubar": ...}, {"Ubar": ...} or a bare set (then U drops the coupling)."""
    obj = _load_json(path)
    if isinstance(obj, dict) and "Ubar" in obj:
        Ubar = _load_spec(obj["Ubar"])
        U = _load_spec(obj["U"]) if "U" in obj else Ubar.uncoupled()
    else:
        Ubar = _load_spec(obj)
        U = Ubar.uncoupled()
    return U, Ubar


def _floats(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ParseError(f"bad number list {text!r}") from exc


def _dump(obj):
    def default(o):
        if isinstance(o, np.ndarray):
            return o.tolist()
        if isinstance(o, np.generic):
            return o.item()
        return str(o)

    print(json.dumps(obj, indent=2, default=default))


# ---------------------------------------------------------------- commands


def cmd_shrinkage(args):
    U, Ubar = _load_set_pair(args.sets)
    if args.blocks is not None and any(ln != args.blocks for _, ln in Ubar.blocks):
        raise ParseError(f"--blocks {args.blocks} does not match the set's block widths")
    if args.coeff:
        U_t, Ubar_t, shift = translate_by_symmetry_point(U, Ubar)
        rep = compute_coeff_factors(U_t, Ubar_t)
        out = rep.as_dict()
        out["shift"] = np.asarray(shift).tolist()
    else:
        out = compute_rhs_factors(U, Ubar).as_dict()
    _dump(out)
    return EXIT_OK


def _method_kwargs(args, method):
    if method == "cutting-plane":
        return {"tol": args.tol, "max_iter": args.max_iter}
    if method == "benders":
        return {"tol": args.tol, "max_iter": args.max_iter, "seed": args.seed, "starts": args.starts}
    if method == "scenarios":
        return {"seed": args.seed, "count": args.count}
    return {}


def cmd_solve(args):
    prob = problem_from_json(_load_json(args.problem))
    res = sv.solve(prob, args.method, **_method_kwargs(args, args.method))
    _dump(res.to_json())
    return EXIT_OK


def cmd_experiment(args):
    methods = None if args.methods is None else [m for m in args.methods.split(",") if m]
    sweep_values = _floats(args.values) if args.values else ()
    if args.sweep and not sweep_values:
        raise ParseError("--sweep needs --values")
    try:
        cfg = ex.ExperimentConfig(args.family, args.size, seed=args.seed, instances=args.seeds,
                                  methods=methods, alpha=args.alpha, gamma=args.gamma,
                                  sweep=args.sweep, sweep_values=sweep_values, adaptive=args.adaptive,
                                  tol=args.tol, max_iter=args.max_iter, starts=args.starts,
                                  scenario_count=args.count, threads=args.threads)
    except ValueError as exc:
        raise ParseError(str(exc)) from exc
    rows = ex.run_experiment(cfg, csv_path=args.out, plot_path=args.plot)
    for (method, x), (mean, std, lb, ub, n) in ex.aggregate(rows).items():
        print(f"{method}\tx={x:g}\tmean={mean:.6g}\tstd={std:.3g}\tbounds=[{lb:.6g}, {ub:.6g}]\tn={n}")
    errors = [r for r in rows if r.error]
    for r in errors:
        log.warning("seed %d %s: %s", r.seed, r.method, r.error)
    if any(r.verdict == "fail" for r in rows):
        print("bound violation in at least one row", file=sys.stderr)
        return EXIT_BOUND
    return EXIT_OK


def cmd_verify_bounds(args):
    if args.problem:
        prob = problem_from_json(_load_json(args.problem))
    else:
        prob = problem_from_json(ex.load_fixture())
    U = None
    if args.cw_set:
        U = _load_spec(_load_json(args.cw_set))
        if U.coupling_atoms:
            raise ParseError("--cw-set must not contain coupling atoms")
    report = ex.verify_bounds(prob, U, tol=args.bound_tol)
    print("factors: " + ", ".join(f"{k}={report['factors'][k]:.6g}"
                                  for k in ("rho_ro", "gamma_ro", "rho_aro", "gamma_aro", "rho_adapt")))
    for k, v in report["objectives"].items():
        print(f"{k} = {v:.10g}")
    for k, v in report["ratios"].items():
        print(f"{k} = {v:.10g}")
    for line in report["lines"]:
        print(line)
    return EXIT_OK if report["passed"] else EXIT_BOUND


def cmd_sample(args):
    obj = _load_json(args.set)
    S = _load_spec(obj["Ubar"] if isinstance(obj, dict) and "Ubar" in obj else obj)
    pts = ph.hit_and_run_sample(S, args.count, args.seed, rescale_to_boundary=args.boundary)
    for p in pts:
        print(",".join(repr(float(v)) for v in p))
    return EXIT_OK


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=float, default=sv.DEFAULT_TOL, help="solver tolerance")
    common.add_argument("--max-iter", type=int, default=sv.DEFAULT_MAX_ITER)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=int, default=1, help="worker threads for experiment instances")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="coupledro", description="Robust LPs under coupled uncertainty.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("shrinkage", parents=[common], help="shrinkage factors of a set pair")
    s.add_argument("--sets", required=True, help='JSON with "U" and "Ubar", or a single coupled set')
    s.add_argument("--coeff", action="store_true", help="coefficient-uncertainty factors")
    s.add_argument("--blocks", type=int, default=None, help="expected block width")
    s.set_defaults(func=cmd_shrinkage)

    s = sub.add_parser("solve", parents=[common], help="solve one problem file")
    s.add_argument("--problem", required=True)
    s.add_argument("--method", required=True, choices=sorted(sv.METHODS))
    s.add_argument("--starts", type=int, default=sv.DEFAULT_STARTS)
    s.add_argument("--count", type=int, default=200, help="scenario count")
    s.set_defaults(func=cmd_solve)

    s = sub.add_parser("experiment", parents=[common], help="run a generator sweep")
    s.add_argument("family", choices=ex.FAMILIES)
    s.add_argument("--size", type=int, required=True)
    s.add_argument("--seeds", type=int, default=20, help="instances per sweep value")
    s.add_argument("--out", default=None, help="CSV path")
    s.add_argument("--plot", default=None, help="plot-data TSV path")
    s.add_argument("--methods", default=None, help="comma separated method names")
    s.add_argument("--sweep", choices=("alpha", "gamma", "size"), default=None)
    s.add_argument("--values", default=None, help="comma separated sweep values")
    s.add_argument("--alpha", type=float, default=None)
    s.add_argument("--gamma", type=float, default=None)
    s.add_argument("--adaptive", action="store_true")
    s.add_argument("--starts", type=int, default=sv.DEFAULT_STARTS)
    s.add_argument("--count", type=int, default=100, help="scenario count")
    s.set_defaults(func=cmd_experiment)

    s = sub.add_parser("verify-bounds", parents=[common], help="check the factor sandwiches on a problem")
    s.add_argument("--problem", default=None, help="problem JSON (default: shipped intro fixture)")
    s.add_argument("--cw-set", default=None, help="constraint-wise set JSON (default: drop coupling)")
    s.add_argument("--bound-tol", type=float, default=1e-6)
    s.set_defaults(func=cmd_verify_bounds)

    s = sub.add_parser("sample", parents=[common], help="hit-and-run samples of a set")
    s.add_argument("--set", required=True)
    s.add_argument("--count", type=int, required=True)
    s.add_argument("--boundary", action="store_true", help="push samples onto the boundary")
    s.set_defaults(func=cmd_sample)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (NotNested, AssumptionViolated) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_BOUND
    except (SolverFailure, IterationLimit, VertexBudgetExceeded, MalformedProgram, NonPolyhedralAtomInRC,
            GeometryError) as exc:
        print(f"solver failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
