"""Command-line interface: ``matevo analyze | symmetry | groupoid``.

Exit codes: 0 success, 1 a checked groupoid violates an axiom, 2 bad input
(model, grid, scenario or file), 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import groupoid as gd
from .dsl import ModelError, ResponseModel, parse_response
from .jets import EvaluationError
from .morphogenesis import GRID, STENCIL
from .report import (GridError, GridSpec, analyze, symmetry_csv, symmetry_table, write_csv,
                     write_json)
from .scenarios import DEFAULT_DET_FLOOR, SCENARIOS, builtin_scenario

EXIT_OK, EXIT_VIOLATION, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2, 3


class InputError(Exception):
    """Bad user input; reported with exit code 2."""


def _floats(text: str, n: int, what: str) -> list[float]:
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise InputError(f"{what}: expected {n} comma-separated numbers, got {text!r}") from None
    if len(vals) != n:
        raise InputError(f"{what}: expected {n} comma-separated numbers, got {text!r}")
    return vals


def _load_model(args) -> ResponseModel:
    if args.model is not None:
        try:
            text = Path(args.model).read_text()
        except OSError as exc:
            raise InputError(f"cannot read model file: {exc}") from None
        return parse_response(text, name=Path(args.model).stem)
    return builtin_scenario(args.scenario)


def _grid(args) -> GridSpec:
    x1_range = None
    if args.x1_range is not None:
        lo, hi, n = _floats(args.x1_range, 3, "--x1-range")
        if n != int(n):
            raise InputError("--x1-range: step count must be an integer")
        x1_range = (lo, hi, int(n))
    x = tuple(_floats(args.x, 3, "--x")) if args.x is not None else (0.0, 0.0, 0.0)
    return GridSpec(t_min=args.t_min, t_max=args.t_max, t_steps=args.t_steps, x=x,
                    x1_range=x1_range, seed=args.seed, samples=args.samples,
                    rel_tol=args.tol, det_floor=args.det_floor,
                    frame_derivative=getattr(args, "frame_derivative", STENCIL)).validate()


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def cmd_analyze(args) -> int:
    model, grid = _load_model(args), _grid(args)
    report = analyze(model, grid, jobs=args.jobs)
    _emit(write_csv(report["nodes"]) if args.format == "csv" else write_json(report), args.out)
    if args.out is not None:
        v = report["verdicts"]
        print(f"{model.name}: {v['evolution']}, {v['morphogenesis']} -> {args.out}", file=sys.stderr)
    return EXIT_OK


def cmd_symmetry(args) -> int:
    table = symmetry_table(_load_model(args), _grid(args), jobs=args.jobs)
    _emit(symmetry_csv(table) if args.format == "csv" else json.dumps(table, indent=2) + "\n", args.out)
    return EXIT_OK


def _load_pair(args):
    G = gd.load_groupoid(args.file)
    check = gd.validate_groupoid(G)
    if not check.ok:
        raise InputError(f"{args.file}: not a groupoid ({check.violations[0].message})")
    try:
        H = gd.load_subgroupoid(G, args.subfile)
    except KeyError as exc:
        raise InputError(f"{args.subfile}: {exc.args[0]}") from None
    sub = gd.validate_subgroupoid(H)
    if not sub.ok:
        raise InputError(f"{args.subfile}: not a subgroupoid ({sub.violations[0].message})")
    return G, H


def _print_json(data) -> None:
    print(json.dumps(data, indent=2))


def cmd_groupoid_check(args) -> int:
    G = gd.load_groupoid(args.file)
    res = gd.validate_groupoid(G)
    _print_json({"ok": res.ok, "objects": len(G.objects), "arrows": len(G.arrows),
                 "violations": [{"axiom": v.axiom, "witness": list(v.witness), "message": v.message}
                                for v in res.violations]})
    return EXIT_OK if res.ok else EXIT_VIOLATION


def cmd_groupoid_normal(args) -> int:
    G, H = _load_pair(args)
    w = gd.normality_witness(G, H)
    out = {"normal": w is None}
    if w is not None:
        g, h, c = (G.arrows[i].id for i in w)
        out["witness"] = {"g": g, "h": h, "conjugate": c}
    _print_json(out)
    return EXIT_OK


def cmd_groupoid_normalizoid(args) -> int:
    G, H = _load_pair(args)
    N = gd.normalizoid(G, H)
    if args.out is not None:
        Path(args.out).write_text(json.dumps(gd.subgroupoid_to_dict(N), indent=2) + "\n")
    _print_json({"arrows": len(N), "transitive": gd.is_transitive(N),
                 "orbits": gd.orbits(N), "contains_subgroupoid": H.arrows <= N.arrows,
                 "out": args.out})
    return EXIT_OK


def cmd_groupoid_example(args) -> int:
    G, H = gd.counterexample()
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "groupoid.json").write_text(json.dumps(gd.groupoid_to_dict(G), indent=2) + "\n")
    (out / "subgroupoid.json").write_text(json.dumps(gd.subgroupoid_to_dict(H), indent=2) + "\n")
    print(f"wrote {out / 'groupoid.json'} and {out / 'subgroupoid.json'}")
    return EXIT_OK


def _model_grid_args(p: argparse.ArgumentParser) -> None:
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--scenario", help=f"built-in model: {', '.join(SCENARIOS)}")
    src.add_argument("--model", metavar="FILE", help="response model in the expression language")
    p.add_argument("--t-min", type=float, default=-1.0)
    p.add_argument("--t-max", type=float, default=1.0)
    p.add_argument("--t-steps", type=int, default=41)
    pos = p.add_mutually_exclusive_group()
    pos.add_argument("--x", metavar="A,B,C", help="fixed particle (default 0,0,0)")
    pos.add_argument("--x1-range", metavar="LO,HI,N", help="full-body sweep along x1")
    p.add_argument("--samples", type=int, default=40, help="number of sampled deformations K")
    p.add_argument("--tol", type=float, default=1e-8, help="relative singular-value threshold")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--det-floor", type=float, default=DEFAULT_DET_FLOOR)
    p.add_argument("--out", metavar="PATH", help="output file (default stdout)")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--jobs", type=int, default=1, help="worker threads (output is unaffected)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="matevo", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="symmetry, evolution and morphogenesis over a grid")
    _model_grid_args(p)
    p.add_argument("--frame-derivative", choices=(STENCIL, GRID), default=STENCIL,
                   help="time derivative of symmetry frames (default: stencil)")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("symmetry", help="symmetry dimension and basis per node")
    _model_grid_args(p)
    p.set_defaults(func=cmd_symmetry)

    p = sub.add_parser("groupoid", help="finite groupoid algebra")
    gsub = p.add_subparsers(dest="groupoid_command", required=True)
    q = gsub.add_parser("check", help="verify the groupoid axioms")
    q.add_argument("file")
    q.set_defaults(func=cmd_groupoid_check)
    q = gsub.add_parser("normal", help="is the subgroupoid normal?")
    q.add_argument("file")
    q.add_argument("subfile")
    q.set_defaults(func=cmd_groupoid_normal)
    q = gsub.add_parser("normalizoid", help="largest subgroupoid in which SUBFILE is normal")
    q.add_argument("file")
    q.add_argument("subfile")
    q.add_argument("--out", metavar="PATH")
    q.set_defaults(func=cmd_groupoid_normalizoid)
    q = gsub.add_parser("example", help="write the non-normal two-object S3 example")
    q.add_argument("--out-dir", default=".")
    q.set_defaults(func=cmd_groupoid_example)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "jobs", 1) < 1:
        print("error: --jobs must be at least 1", file=sys.stderr)
        return EXIT_INPUT
    try:
        return args.func(args)
    except (ModelError, GridError, InputError, gd.GroupoidFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (EvaluationError, ArithmeticError, np.linalg.LinAlgError, ValueError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
