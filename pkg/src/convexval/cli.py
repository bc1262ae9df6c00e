"""``convexval`` command line."""
from __future__ import annotations

import argparse
import csv
import json
import sys

from . import scalar as sc
from .errors import ConvexValError


def _add_common(p):
    p.add_argument("--tolerance", type=float, default=None, help="override task tolerances")
    p.add_argument("--seed", type=int, default=None, help="seed for stochastic tasks")
    p.add_argument("--mode", choices=sc.MODES, default=sc.RATIONAL, help="scalar mode")
    p.add_argument("--threads", type=int, default=1, help="worker threads for independent tasks")
    p.add_argument("--out", default=None, help="write the JSON report here instead of stdout")


def _emit(report, out):
    from .scene import dump_report

    text = dump_report(report)
    if out:
        with open(out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _valuation_spec(text, dim):
    """``euler``, ``volume`` or ``intrinsic:J``."""
    if text == "euler":
        return {"euler": dim}
    if text == "volume":
        return {"volume": dim}
    if text.startswith("intrinsic:"):
        return {"intrinsic": [dim, int(text.split(":", 1)[1])]}
    raise ConvexValError(f"unknown valuation {text!r} (euler, volume, intrinsic:J)")


def _body_dim(spec):
    if "vertices" in spec:
        return len(spec["vertices"][0])
    if "box" in spec:
        return len(spec["box"][0])
    raise ConvexValError("inline bodies need 'vertices' or 'box'")


def cmd_eval(args):
    from .scene import Scene, run_scene

    body = json.loads(args.body)
    dim = _body_dim(body)
    if args.valuation.startswith("intrinsic:"):
        # exact intrinsic volume of the polytope rather than a generator approximation
        data = {"mode": args.mode, "bodies": {"K": body},
                "tasks": [{"id": "eval", "op": "intrinsic_volume",
                           "args": {"body": "K", "j": int(args.valuation.split(":", 1)[1])}}]}
    else:
        data = {"mode": args.mode, "bodies": {"K": body},
                "valuations": {"phi": _valuation_spec(args.valuation, dim)},
                "tasks": [{"id": "eval", "op": "eval", "args": {"valuation": "phi", "body": "K"}}]}
    if args.expect is not None:
        data["tasks"][0]["expect"] = args.expect
    report, code = run_scene(Scene(data), _overrides(args))
    _emit(report, args.out)
    return code


def cmd_product(args):
    from .scene import Scene, run_scene

    body = json.loads(args.body)
    dim = _body_dim(body)
    data = {"mode": args.mode, "bodies": {"K": body},
            "valuations": {"phi": _valuation_spec(args.left, dim),
                           "psi": _valuation_spec(args.right, dim)},
            "tasks": [{"id": "product", "op": "product",
                       "args": {"left": "phi", "right": "psi", "body": "K"}}]}
    if args.expect is not None:
        data["tasks"][0]["expect"] = args.expect
    report, code = run_scene(Scene(data), _overrides(args))
    _emit(report, args.out)
    return code


def cmd_check(args):
    from .suites import SUITES, run_suite

    names = args.suites or sorted(SUITES)
    seed = 0 if args.seed is None else args.seed
    results = []
    for name in names:
        for res in run_suite(name, seed=seed):
            results.append(res)
            print(res.line(), file=sys.stderr)
    passed = all(r.passed for r in results)
    report = {"header": {"suites": names, "seed": seed}, "results": [r.to_dict() for r in results],
              "passed": passed}
    _emit(report, args.out)
    return 0 if passed else 1


def cmd_approx(args):
    import math

    import numpy as np

    from .bodies import ball, circle_directions, inscribed_polytope
    from .intrinsic import intrinsic_volume

    sides = [int(s) for s in args.sides.split(",")]
    rows = []
    for m in sides:
        p = inscribed_polytope(ball(1.0), circle_directions(m))
        rows.append({"m": m, "V1_error": abs(float(intrinsic_volume(p, 1)) - math.pi),
                     "V2_error": abs(float(intrinsic_volume(p, 2)) - math.pi)})
    orders = {}
    for key in ("V1_error", "V2_error"):
        slope = np.polyfit(np.log(sides), np.log([r[key] for r in rows]), 1)[0]
        orders[key.split("_")[0]] = -float(slope)
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=["m", "V1_error", "V2_error"])
            w.writeheader()
            w.writerows(rows)
    passed = all(o >= args.min_order for o in orders.values())
    _emit({"rows": rows, "orders": orders, "min_order": args.min_order, "passed": passed}, args.out)
    return 0 if passed else 1


def cmd_scene(args):
    from .scene import Scene, run_scene

    scene = Scene.load(args.path, args.mode)
    report, code = run_scene(scene, _overrides(args), threads=args.threads)
    _emit(report, args.out or scene.output)
    return code


def _overrides(args):
    return {"tolerance": args.tolerance, "seed": args.seed}


def build_parser():
    parser = argparse.ArgumentParser(prog="convexval",
                                     description="Valuations on convex bodies and their products.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eval", help="evaluate a valuation on a body")
    p.add_argument("--body", required=True, help='JSON body, e.g. \'{"box": [[0,0],[1,1]]}\'')
    p.add_argument("--valuation", required=True, help="euler, volume or intrinsic:J")
    p.add_argument("--expect", default=None, help="expected value (makes the task tolerance-bearing)")
    _add_common(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("product", help="evaluate the product of two valuations on a body")
    p.add_argument("--body", required=True)
    p.add_argument("--left", required=True)
    p.add_argument("--right", required=True)
    p.add_argument("--expect", default=None)
    _add_common(p)
    p.set_defaults(func=cmd_product)

    p = sub.add_parser("check", help="run named invariant suites")
    p.add_argument("suites", nargs="*", help="suite names (default: all)")
    _add_common(p)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("approx", help="polygon approximation convergence study")
    p.add_argument("--sides", default="8,16,32,64,128")
    p.add_argument("--min-order", type=float, default=1.9)
    p.add_argument("--csv", default=None, help="also write the error table as CSV")
    _add_common(p)
    p.set_defaults(func=cmd_approx)

    p = sub.add_parser("scene", help="run a JSON scene file")
    p.add_argument("path")
    _add_common(p)
    p.set_defaults(func=cmd_scene)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConvexValError as exc:
        print(f"convexval: error: {exc}", file=sys.stderr)
        return 2
    except json.JSONDecodeError as exc:
        print(f"convexval: error: invalid JSON argument: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
