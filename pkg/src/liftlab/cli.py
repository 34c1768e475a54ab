"""Command-line interface: meshing, solving, lift curves, the zero-lift
search, instability estimation, shape optimization, plotting, and the
acceptance suites. Every run appends a record to the JSON-lines store.

Exit codes: 0 success, 2 config error, 3 numerical failure, 4 acceptance
failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time

import numpy as np

from . import acceptance
from .config import (
    DEFAULT_CONFIG,
    build_body_class,
    build_flow_class,
    build_gamma_config,
    build_pair,
    build_rect,
    build_shape_opt_config,
    build_solver_config,
    build_trapezium,
    build_zero_lift_config,
    load_config,
    resolved_store_path,
)
from .errors import ConfigError, LiftLabError
from .geometry import body_family
from .lift import LiftCurve, lift_curve, lift_volume
from .mesh import Mesh, generate_mesh
from .ns_solver import BoundaryData, solve_steady_ns
from .runrecord import RunRecord, append_record
from .stability import HomotopyPath, gamma_estimate, optimize_body, \
    zero_lift_search
from .svgplot import line_chart, profile_plot, shape_plot

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_ACCEPTANCE = 4


def _sha(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def _out_path(cfg: dict, name: str, explicit: str | None) -> str:
    if explicit:
        return explicit
    outdir = cfg["run"]["outdir"]
    os.makedirs(outdir, exist_ok=True)
    return os.path.join(outdir, name)


def _record(cfg: dict, command: str, fingerprints: dict, outputs: list,
            t0: float, stats: dict | None = None):
    rec = RunRecord(command=command, config=cfg, fingerprints=fingerprints,
                    outputs=outputs, wall_time_s=time.time() - t0,
                    solver_stats=stats or {})
    append_record(resolved_store_path(cfg), rec)
    return rec


def _build_mesh(cfg: dict):
    R = build_rect(cfg)
    body = None
    if cfg["geometry"]["trapezium"] is not None:
        body = body_family(0.0, build_trapezium(cfg))
    return generate_mesh(R, body, cfg["mesh"]["h"],
                         min_angle=cfg["mesh"]["min_angle"],
                         symmetric=cfg["mesh"]["symmetric"])


def cmd_mesh(cfg: dict, args) -> int:
    t0 = time.time()
    mesh = _build_mesh(cfg)
    out = _out_path(cfg, "mesh.json", args.out)
    text = mesh.to_json()
    with open(out, "w") as fh:
        fh.write(text)
    print(f"mesh: {mesh.num_nodes} nodes, {mesh.num_triangles} triangles -> {out}")
    _record(cfg, "mesh", {"mesh": _sha(text)}, [out], t0)
    return EXIT_OK


def cmd_solve(cfg: dict, args) -> int:
    t0 = time.time()
    mesh = _build_mesh(cfg)
    pair = build_pair(cfg)
    bd = BoundaryData(cfg["lift"]["lambda"], pair)
    field = solve_steady_ns(mesh, bd, build_solver_config(cfg))
    out = _out_path(cfg, "field.json", args.out)
    text = field.to_json()
    with open(out, "w") as fh:
        fh.write(text)
    print(f"solved lambda={bd.lam}: residual={field.residual_norm:.3e} -> {out}")
    for rec in field.log:
        print(f"  step={rec['step']} lambda={rec['lambda']:.4g} "
              f"it={rec['iteration']} residual={rec['residual']:.3e}")
    _record(cfg, "solve", {"mesh": _sha(mesh.to_json()),
                           "flow": _sha(pair.to_json())},
            [out], t0, {"residual": field.residual_norm,
                        "iterations": len(field.log)})
    return EXIT_OK


def cmd_lift_curve(cfg: dict, args) -> int:
    t0 = time.time()
    mesh = _build_mesh(cfg)
    pair = build_pair(cfg)
    grid = np.linspace(0.0, cfg["lift"]["lambda_max"], cfg["lift"]["samples"])
    curve = lift_curve(mesh, pair, grid, build_solver_config(cfg))
    out = _out_path(cfg, "lift_curve.csv", args.out)
    with open(out, "w") as fh:
        fh.write(curve.to_csv())
    outputs = [out]
    svg_path = args.svg or _out_path(cfg, "lift_curve.svg", None)
    with open(svg_path, "w") as fh:
        fh.write(line_chart([(curve.lambdas, curve.lifts, "lift")],
                            title="lift curve", xlabel="lambda", ylabel="lift"))
    outputs.append(svg_path)
    print(f"lift curve: {len(curve.lambdas)} samples, sup={curve.sup_norm():.6g} "
          f"-> {out}")
    if curve.failures:
        print("  truncated:", "; ".join(curve.failures))
    _record(cfg, "lift-curve", dict(curve.meta), outputs, t0)
    return EXIT_OK


def cmd_zero_lift(cfg: dict, args) -> int:
    t0 = time.time()
    zcfg = build_zero_lift_config(cfg)
    pair = build_pair(cfg)
    trap = build_trapezium(cfg)
    kind = cfg["zero_lift"]["path"]
    lam = cfg["lift"]["lambda"]
    if kind == "diagonal":
        path = HomotopyPath.diagonal(trap, pair, lam)
    elif kind == "body-only":
        path = HomotopyPath.body_only(trap, pair, lam)
    else:
        path = HomotopyPath.flow_only(pair, lam, trapezium=trap)
    res = zero_lift_search(path, zcfg)
    out = _out_path(cfg, "zero_lift.json", args.out)
    doc = {"eps": res.eps, "delta": res.delta, "t": res.t, "lift": res.lift,
           "lift_tol": res.lift_tol, "solves": res.solves,
           "verification_lift": res.verification_lift, "trace": res.trace}
    with open(out, "w") as fh:
        json.dump(doc, fh, indent=1)
    print(f"zero lift at eps={res.eps:.6f}, delta={res.delta:.6f}: "
          f"lift={res.lift:.3e} (tol {res.lift_tol:.3e}, {res.solves} solves) "
          f"-> {out}")
    _record(cfg, "zero-lift", {"flow": _sha(pair.to_json())}, [out], t0,
            {"solves": res.solves})
    return EXIT_OK


def cmd_gamma(cfg: dict, args) -> int:
    t0 = time.time()
    B = body_family(0.0, build_trapezium(cfg))
    est = gamma_estimate(B, build_flow_class(cfg), cfg["lift"]["lambda_max"],
                         build_gamma_config(cfg))
    out = _out_path(cfg, "gamma.json", args.out)
    doc = {"value": est.value, "argmax_lambda": est.argmax_lambda,
           "reeval_value": est.reeval_value,
           "argmax_pair": json.loads(est.argmax_pair.to_json()),
           "fingerprints": est.fingerprints,
           "trace": [{"value": t["value"], "lambda": t["lambda"],
                      "theta": t["theta"].tolist()} for t in est.trace]}
    with open(out, "w") as fh:
        json.dump(doc, fh, indent=1)
    print(f"gamma estimate: {est.value:.6g} at lambda={est.argmax_lambda:.4g} "
          f"({len(est.trace)} evaluations) -> {out}")
    _record(cfg, "gamma", est.fingerprints, [out], t0,
            {"evaluations": len(est.trace)})
    return EXIT_OK


def cmd_optimize(cfg: dict, args) -> int:
    t0 = time.time()
    bc = build_body_class(cfg)
    res = optimize_body(bc, build_flow_class(cfg), cfg["lift"]["lambda_max"],
                        build_shape_opt_config(cfg))
    out = _out_path(cfg, "optimize.json", args.out)
    doc = {"gamma": res.gamma_value,
           "best_body": json.loads(res.best_body.to_json()),
           "history": res.history, "feasibility": res.feasibility,
           "trace": res.trace}
    with open(out, "w") as fh:
        json.dump(doc, fh, indent=1)
    outputs = [out]
    svg_path = args.svg or _out_path(cfg, "optimize.svg", None)
    with open(svg_path, "w") as fh:
        fh.write(shape_plot([(res.best_body.vertices, "optimal body")],
                            channel=build_rect(cfg), confinement=bc.D,
                            title="optimized shape"))
    outputs.append(svg_path)
    print(f"optimized gamma={res.gamma_value:.6g} over "
          f"{res.feasibility.get('evaluations', res.feasibility.get('candidates'))} "
          f"evaluations -> {out}")
    _record(cfg, "optimize", {"body": _sha(res.best_body.to_json())},
            outputs, t0)
    return EXIT_OK


def cmd_validate(cfg: dict, args) -> int:
    t0 = time.time()
    results = acceptance.run_suite(args.suite)
    _record(cfg, f"validate --suite {args.suite}", {},
            [], t0, {"passed": sum(r.passed for r in results),
                     "total": len(results)})
    if all(r.passed for r in results):
        print(f"suite {args.suite}: all {len(results)} criteria passed")
        return EXIT_OK
    print(f"suite {args.suite}: "
          f"{sum(not r.passed for r in results)} criteria FAILED")
    return EXIT_ACCEPTANCE


def cmd_plot(cfg: dict, args) -> int:
    t0 = time.time()
    src = args.input
    out = args.out or (os.path.splitext(src)[0] + ".svg")
    if src.endswith(".csv"):
        with open(src) as fh:
            curve = LiftCurve.from_csv(fh.read())
        svg = line_chart([(curve.lambdas, curve.lifts, "lift")],
                         title="lift curve", xlabel="lambda", ylabel="lift")
    elif src.endswith(".json"):
        with open(src) as fh:
            doc = json.load(fh)
        if "best_body" in doc:
            verts = np.array(doc["best_body"])
            svg = shape_plot([(verts, "body")], channel=build_rect(cfg))
        elif "lambdas" in doc:
            svg = line_chart([(np.array(doc["lambdas"]), np.array(doc["lifts"]),
                               "lift")], title="lift curve",
                             xlabel="lambda", ylabel="lift")
        else:
            print(f"don't know how to plot {src}", file=sys.stderr)
            return EXIT_CONFIG
    else:
        print(f"unsupported plot input {src}", file=sys.stderr)
        return EXIT_CONFIG
    with open(out, "w") as fh:
        fh.write(svg)
    print(f"plot -> {out}")
    _record(cfg, "plot", {"input": src}, [out], t0)
    return EXIT_OK


def cmd_print_config(cfg: dict, args) -> int:
    print(json.dumps(cfg, indent=2, sort_keys=True))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="liftlab",
        description="steady channel flow past convex bodies: lift, zero-lift "
                    "homotopies, and shape stability")
    parser.add_argument("--config", help="JSON config file (defaults apply)")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, helptext in [
        ("mesh", "generate and export the mesh"),
        ("solve", "solve one boundary-value problem and export the field"),
        ("lift-curve", "sample the lift over flow magnitudes (CSV + SVG)"),
        ("zero-lift", "run the Bolzano zero-lift search"),
        ("gamma", "estimate the instability measure"),
        ("optimize", "minimize the instability measure over shapes"),
    ]:
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--out", help="output path")
        p.add_argument("--svg", help="SVG output path")

    p = sub.add_parser("validate", help="run an acceptance suite")
    p.add_argument("--suite", default="trivial",
                   choices=sorted(acceptance.SUITES))

    p = sub.add_parser("plot", help="re-render an SVG from stored CSV/JSON")
    p.add_argument("--input", required=True)
    p.add_argument("--out")

    sub.add_parser("print-config", help="print the resolved configuration")
    return parser


_COMMANDS = {
    "mesh": cmd_mesh,
    "solve": cmd_solve,
    "lift-curve": cmd_lift_curve,
    "zero-lift": cmd_zero_lift,
    "gamma": cmd_gamma,
    "optimize": cmd_optimize,
    "validate": cmd_validate,
    "plot": cmd_plot,
    "print-config": cmd_print_config,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config)
    except ConfigError as err:
        print(str(err), file=sys.stderr)
        return EXIT_CONFIG
    threads = os.environ.get("LIFTLAB_THREADS", cfg["run"]["threads"])
    if threads:
        os.environ.setdefault("OPENBLAS_NUM_THREADS", str(threads))
        os.environ.setdefault("OMP_NUM_THREADS", str(threads))
    try:
        return _COMMANDS[args.command](cfg, args)
    except ConfigError as err:
        print(str(err), file=sys.stderr)
        return EXIT_CONFIG
    except LiftLabError as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
