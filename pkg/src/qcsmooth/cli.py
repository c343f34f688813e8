"""Command-line driver: ``qcsmooth {smooth,quality,place,oracle,validate}``.

Exit status is 0 on success, 1 on parse or validation failure and 2 on a
usage error. Every command writes JSON (or CSV for ``quality --format csv``)
with fixed key order and ``repr`` float formatting, so identical inputs give
byte-identical output.
"""

import argparse
import csv
import io
import json
import math
import sys

import numpy as np

from .criteria import CRITERION_NAMES, parse_criteria
from .errors import (DegenerateElementError, EmptyDomainError, ParseError, QCSmoothError,
                     UsageError, ValidationError)
from .formats import load_patch, read_mesh, write_mesh
from .mesh import (SmoothConfig, laplacian_smooth, place, quality_report, sweep, validate)
from .qcp import grid_oracle

EXIT_OK, EXIT_INVALID, EXIT_USAGE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _clean(obj):
    """JSON-safe copy: numpy scalars/arrays to Python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj) + 0.0  # drop negative zero
        if math.isfinite(v):
            return v
        return "nan" if math.isnan(v) else ("inf" if v > 0 else "-inf")
    return obj


def _dumps(obj):
    return json.dumps(_clean(obj), indent=2) + "\n"


def _emit(out, obj):
    out.write(_dumps(obj))


def _add_mesh_args(p):
    p.add_argument("--node", required=True, help=".node file")
    p.add_argument("--ele", required=True, help=".ele file")


def build_parser():
    parser = _Parser(prog="qcsmooth", description="Optimal vertex placement for mesh smoothing.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    crit_help = f"NAME[:WEIGHT][,NAME[:WEIGHT]...]; names: {', '.join(CRITERION_NAMES)}"

    p = sub.add_parser("smooth", help="smooth a mesh and write the result")
    _add_mesh_args(p)
    p.add_argument("--criterion", default="min-angle", help=crit_help)
    p.add_argument("--passes", type=int, default=5)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--out", required=True, help="output prefix (writes .node, .ele, .json)")
    p.add_argument("--laplacian", action="store_true", help="guarded Laplacian baseline")
    p.add_argument("--unguarded-laplacian", action="store_true",
                   help="plain Laplacian; may invert elements")
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("quality", help="per-criterion element quality report")
    _add_mesh_args(p)
    p.add_argument("--criterion", default="min-angle", help=crit_help)
    p.add_argument("--format", choices=("json", "csv"), default="json")

    p = sub.add_parser("place", help="optimal placement for one patch fixture")
    p.add_argument("--patch", required=True)
    p.add_argument("--criterion", default="min-angle", help=crit_help)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("oracle", help="grid-refinement oracle for one patch fixture")
    p.add_argument("--patch", required=True)
    p.add_argument("--criterion", default="min-angle", help=crit_help)
    p.add_argument("--levels", type=int, default=3)

    p = sub.add_parser("validate", help="mesh validity report")
    _add_mesh_args(p)
    return parser


def _cmd_smooth(args, out):
    if args.laplacian and args.unguarded_laplacian:
        raise UsageError("--laplacian and --unguarded-laplacian are exclusive")
    if args.passes < 0:
        raise UsageError("--passes must be nonnegative")
    config = SmoothConfig(parse_criteria(args.criterion), passes=args.passes, tol=args.tol,
                          seed=args.seed)
    mesh = read_mesh(args.node, args.ele)
    if args.laplacian or args.unguarded_laplacian:
        method = "laplacian" if args.laplacian else "unguarded-laplacian"
        stats = laplacian_smooth(mesh, config, guarded=args.laplacian)
    else:
        _ = config.special  # mixed mixtures are a usage error
        method = "optimize"
        stats = sweep(mesh, config)
    write_mesh(mesh, args.out + ".node", args.out + ".ele")
    report = {"method": method, "criteria": args.criterion, **stats.as_dict(),
              "valid": validate(mesh).ok}
    with open(args.out + ".json", "w", encoding="utf-8") as fh:
        fh.write(_dumps(report))
    _emit(out, report)
    return EXIT_OK


def _cmd_quality(args, out):
    crits = parse_criteria(args.criterion)
    mesh = read_mesh(args.node, args.ele)
    rep = quality_report(mesh, crits)
    if args.format == "json":
        _emit(out, rep)
        return EXIT_OK
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["criterion", "unit", "sense", "min", "max", "mean", "degenerate"])
    for name, r in rep.items():
        w.writerow([name, r["unit"], r["sense"],
                    *(_clean(r[k]) for k in ("min", "max", "mean")), r["degenerate"]])
    out.write(buf.getvalue())
    return EXIT_OK


def _patch_summary(data, crits):
    return {"element_kind": data["element_kind"], "dimension": data["dimension"],
            "criteria": [{"name": c.kind, "weight": c.weight} for c in crits]}


def _cmd_place(args, out):
    crits = parse_criteria(args.criterion)
    patch, data = load_patch(args.patch)
    config = SmoothConfig(crits, tol=args.tol, seed=args.seed)
    method = "special" if config.special else "qcp"
    try:
        x, t = place(patch, config)
    except EmptyDomainError as exc:
        raise ValidationError(str(exc)) from None
    _emit(out, {**_patch_summary(data, crits), "method": method,
                "point": list(x), "objective": t})
    return EXIT_OK


def _cmd_oracle(args, out):
    crits = parse_criteria(args.criterion)
    if args.levels < 0:
        raise UsageError("--levels must be nonnegative")
    patch, data = load_patch(args.patch)
    res = grid_oracle(patch.program(crits), levels=args.levels)
    if res.status == "empty_domain":
        raise ValidationError("patch kernel is empty")
    _emit(out, {**_patch_summary(data, crits), "method": "grid_oracle", "levels": args.levels,
                "point": list(res.x), "objective": res.t,
                "grid_points": res.iterations})
    return EXIT_OK


def _cmd_validate(args, out):
    mesh = read_mesh(args.node, args.ele)
    rep = validate(mesh)
    _emit(out, {"kind": mesh.kind, "vertices": len(mesh.points),
                "elements": len(mesh.elements), **rep.as_dict()})
    return EXIT_OK if rep.ok else EXIT_INVALID


COMMANDS = {"smooth": _cmd_smooth, "quality": _cmd_quality, "place": _cmd_place,
            "oracle": _cmd_oracle, "validate": _cmd_validate}


def main(argv=None, out=None, err=None):
    out = sys.stdout if out is None else out
    err = sys.stderr if err is None else err
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args, out)
    except UsageError as exc:
        err.write(f"qcsmooth: usage error: {exc}\n")
        return EXIT_USAGE
    except ValidationError as exc:
        if exc.report is not None:
            _emit(out, exc.report.as_dict())
        err.write(f"qcsmooth: {exc}\n")
        return EXIT_INVALID
    except (ParseError, DegenerateElementError) as exc:
        err.write(f"qcsmooth: {exc}\n")
        return EXIT_INVALID
    except QCSmoothError as exc:
        err.write(f"qcsmooth: {exc}\n")
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
