"""JSON scene files: named bodies, densities, valuations and charts plus a task list."""
from __future__ import annotations

import json
import time
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction

from . import scalar as sc
from .bodies import ball_surrogate, parse_preset
from .density import Density
from .errors import SceneError
from .polytope import Polytope, convex_hull
from .valuation import GeneratorValuation, Term, euler_generator, evaluate, intrinsic_generator

STOCHASTIC_OPS = {"suite"}


def _num(x, mode):
    if isinstance(x, str) or isinstance(x, (int, Fraction)):
        return sc.to_scalar(sc.to_rational(x), mode)
    return sc.to_scalar(x, mode)


def _out(x):
    if isinstance(x, Fraction):
        return str(x) if x.denominator != 1 else x.numerator
    if isinstance(x, float):
        return float(repr(x))
    return x


class Scene:
    def __init__(self, data, mode=sc.RATIONAL, source=None):
        if not isinstance(data, dict):
            raise SceneError("scene must be a JSON object")
        self.data = data
        self.source = source
        self.mode = data.get("mode", mode)
        sc.check_mode(self.mode)
        self.tolerance = float(data.get("tolerance", 1e-9))
        self.seed = data.get("seed")
        self.output = data.get("output")
        self.tasks = data.get("tasks", [])
        self.bodies = {}
        self.densities = {}
        self.valuations = {}
        self.charts = {}
        self._validate_references()
        self._build()

    # -- loading ---------------------------------------------------------
    @classmethod
    def load(cls, path, mode=sc.RATIONAL):
        with open(path) as fh:
            text = fh.read()
        return cls.parse(text, mode, source=str(path))

    @classmethod
    def parse(cls, text, mode=sc.RATIONAL, source=None):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise SceneError(f"parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
        return cls(data, mode, source)

    # -- validation ------------------------------------------------------
    def _validate_references(self):
        names = {kind: set(self.data.get(kind, {})) for kind in
                 ("bodies", "densities", "valuations", "charts")}

        def need(kind, ref, where):
            if ref not in names[kind]:
                raise SceneError(f"unresolved {kind[:-1] if kind != 'bodies' else 'body'} "
                                 f"reference {ref!r} in {where}")

        for vid, spec in self.data.get("valuations", {}).items():
            for t in spec.get("terms", []) if isinstance(spec, dict) else []:
                for b in t.get("bodies", []):
                    need("bodies", b, f"valuation {vid!r}")
                if "density" in t and t["density"] not in ("lebesgue",):
                    need("densities", t["density"], f"valuation {vid!r}")
            if isinstance(spec, dict) and "sum" in spec:
                for ref in spec["sum"]:
                    need("valuations", ref, f"valuation {vid!r}")
        seen = set()
        for i, task in enumerate(self.tasks):
            tid = task.get("id", f"task{i}")
            if tid in seen:
                raise SceneError(f"duplicate task id {tid!r}")
            seen.add(tid)
            op = task.get("op")
            if op not in OPS:
                raise SceneError(f"task {tid!r}: unknown operation {op!r}")
            if op in STOCHASTIC_OPS and task.get("seed", self.seed) is None:
                raise SceneError(f"task {tid!r}: stochastic operation needs a seed")
            for key, kind in OPS[op][1].items():
                if key not in task.get("args", {}):
                    raise SceneError(f"task {tid!r}: missing argument {key!r}")
                refs = task["args"][key]
                for ref in refs if isinstance(refs, list) else [refs]:
                    need(kind, ref, f"task {tid!r}")

    # -- construction ----------------------------------------------------
    def _build(self):
        for bid, spec in self.data.get("bodies", {}).items():
            self.bodies[bid] = self._body(spec)
        for did, spec in self.data.get("densities", {}).items():
            self.densities[did] = self._density(spec)
        pending = dict(self.data.get("valuations", {}))
        while pending:
            progress = False
            for vid, spec in list(pending.items()):
                refs = spec.get("sum", []) if isinstance(spec, dict) else []
                if all(r in self.valuations for r in refs):
                    self.valuations[vid] = self._valuation(spec)
                    del pending[vid]
                    progress = True
            if not progress:
                raise SceneError(f"cyclic valuation references among {sorted(pending)}")
        from .charts import Chart

        for cid, spec in self.data.get("charts", {}).items():
            self.charts[cid] = Chart.parse(spec)

    def _body(self, spec):
        if isinstance(spec, str):
            return parse_preset(spec, {k: v for k, v in self.bodies.items() if isinstance(v, Polytope)})
        if "vertices" in spec:
            return convex_hull([tuple(_num(c, self.mode) for c in v) for v in spec["vertices"]],
                               self.mode)
        if "box" in spec:
            lo, hi = spec["box"]
            return Polytope.box([_num(c, self.mode) for c in lo], [_num(c, self.mode) for c in hi],
                                self.mode)
        if "surrogate" in spec:
            dim, m = spec["surrogate"]
            return ball_surrogate(dim, m, self.mode)
        raise SceneError(f"cannot build body from {spec!r}")

    def _density(self, spec):
        if spec == "lebesgue":
            return None
        if isinstance(spec, dict) and "terms" in spec:
            return Density.from_terms(spec["dim"], [(tuple(e), sc.to_rational(c))
                                                    for e, c in spec["terms"]])
        if isinstance(spec, dict) and "named" in spec:
            from .bodies import named_density

            return named_density(spec["named"], spec["dim"])
        raise SceneError(f"cannot build density from {spec!r}")

    def _valuation(self, spec):
        if isinstance(spec, dict) and "euler" in spec:
            return euler_generator(spec["euler"], mode=self.mode)
        if isinstance(spec, dict) and "volume" in spec:
            return GeneratorValuation.volume(spec["volume"])
        if isinstance(spec, dict) and "intrinsic" in spec:
            dim, j = spec["intrinsic"]
            return intrinsic_generator(dim, j, mode=self.mode)
        if isinstance(spec, dict) and "sum" in spec:
            out = self.valuations[spec["sum"][0]]
            for ref in spec["sum"][1:]:
                out = out + self.valuations[ref]
            return out
        if isinstance(spec, dict) and "terms" in spec:
            dim = spec["dim"]
            terms = []
            for t in spec["terms"]:
                dens = self.densities.get(t.get("density")) if t.get("density") else None
                dens = Density.lebesgue(dim) if dens is None else dens
                weight = sc.to_scalar(sc.to_rational(t.get("weight", 1)), self.mode)
                terms.append(Term(weight, dens, tuple(self.bodies[b] for b in t.get("bodies", []))))
            return GeneratorValuation(dim, terms)
        raise SceneError(f"cannot build valuation from {spec!r}")


# -- operations ------------------------------------------------------------------
# each returns (value, method, error, residual-or-None)

def _op_volume(scene, args):
    p = scene.bodies[args["body"]]
    return p.volume(), _method(p.volume()), 0.0, None


def _op_intrinsic_volume(scene, args):
    from .intrinsic import intrinsic_volume

    v = intrinsic_volume(scene.bodies[args["body"]], int(args["j"]))
    return v, _method(v), 0.0, None


def _op_eval(scene, args):
    res = evaluate(scene.valuations[args["valuation"]], scene.bodies[args["body"]])
    return res.value, res.method, res.error, None


def _op_product(scene, args):
    from .product import product_eval

    res = product_eval(scene.valuations[args["left"]], scene.valuations[args["right"]],
                       scene.bodies[args["body"]], args.get("mode", "auto"))
    return res.value, res.method, res.error, None


def _op_unit_law(scene, args):
    from .product import product_eval

    worst = 0.0
    for vid in args["valuations"]:
        v = scene.valuations[vid]
        chi = euler_generator(v.dim)
        for bid in args["bodies"]:
            k = scene.bodies[bid]
            exact = float(evaluate(v, k).value)
            got = float(product_eval(chi, v, k).value)
            worst = max(worst, abs(got - exact) / max(abs(exact), 1.0))
    return worst, "numeric", 0.0, worst


def _op_steiner(scene, args):
    from .tube import steiner_residual

    r = steiner_residual(scene.bodies[args["body"]], scene.bodies[args["ball"]],
                         sc.to_rational(args.get("lam", 1)))
    return r, "exact", 0.0, abs(r)


def _op_gauss_bonnet(scene, args):
    import math

    from .normal_cycle import gauss_form, integrate_form, normal_cycle

    p = scene.bodies[args["body"]]
    val = integrate_form(normal_cycle(p.to_float() if p.mode == sc.RATIONAL else p), gauss_form(p.dim))
    return val, "numeric", 0.0, abs(val - (2 * math.pi if p.dim == 2 else 4 * math.pi))


def _op_pushforward_eval(scene, args):
    from .charts import pushforward_eval

    v = pushforward_eval(scene.valuations[args["valuation"]], scene.charts[args["chart"]],
                         scene.bodies[args["body"]])
    return v, _method(v), 0.0, None


def _op_slice_identity(scene, args):
    from .charts import slice_identity_check

    x0 = tuple(sc.to_rational(c) for c in args["x0"])
    r = slice_identity_check(scene.bodies[args["T"]], scene.bodies[args["A"]],
                             scene.bodies[args["B"]], x0)
    return r, _method(r), 0.0, r


def _op_suite(scene, args, seed=0):
    from .suites import run_suite

    results = run_suite(args["name"], seed=seed)
    ok = all(r.passed for r in results)
    return [r.to_dict() for r in results], "numeric", 0.0, 0.0 if ok else float("inf")


def _method(v):
    return "exact" if isinstance(v, (int, Fraction)) else "numeric"


OPS = {
    "volume": (_op_volume, {"body": "bodies"}),
    "intrinsic_volume": (_op_intrinsic_volume, {"body": "bodies"}),
    "eval": (_op_eval, {"valuation": "valuations", "body": "bodies"}),
    "product": (_op_product, {"left": "valuations", "right": "valuations", "body": "bodies"}),
    "unit_law": (_op_unit_law, {"valuations": "valuations", "bodies": "bodies"}),
    "steiner": (_op_steiner, {"body": "bodies", "ball": "bodies"}),
    "gauss_bonnet": (_op_gauss_bonnet, {"body": "bodies"}),
    "pushforward_eval": (_op_pushforward_eval, {"valuation": "valuations", "chart": "charts",
                                                "body": "bodies"}),
    "slice_identity": (_op_slice_identity, {"T": "bodies", "A": "bodies", "B": "bodies"}),
    "suite": (_op_suite, {}),
}


def _run_task(scene, index, task, tolerance, seed):
    tid = task.get("id", f"task{index}")
    op = task["op"]
    fn = OPS[op][0]
    tol = float(task.get("tolerance", tolerance))
    t0 = time.perf_counter()
    try:
        if op in STOCHASTIC_OPS:
            value, method, err, residual = fn(scene, task.get("args", {}),
                                              seed=task.get("seed", seed))
        else:
            value, method, err, residual = fn(scene, task.get("args", {}))
    except SceneError:
        raise
    except Exception as exc:
        raise SceneError(f"task {tid!r} failed: {type(exc).__name__}: {exc}") from exc
    record = {"id": tid, "op": op, "value": _out(value) if not isinstance(value, list) else value,
              "method": method, "error": float(err)}
    passed = None
    if "expect" in task:
        expect = sc.to_rational(task["expect"])
        diff = abs(sc.to_rational(value) - expect) if method == "exact" else abs(float(value) - float(expect))
        passed = bool(diff <= tol)
        record["expect"] = _out(expect)
        record["deviation"] = _out(diff) if isinstance(diff, Fraction) else float(diff)
    elif residual is not None:
        passed = bool(float(residual) <= tol)
        record["residual"] = _out(residual) if isinstance(residual, Fraction) else float(residual)
    if passed is not None:
        record["tolerance"] = tol
        record["passed"] = passed
    record["seconds"] = round(time.perf_counter() - t0, 6)
    return record


def run_scene(scene, overrides=None, threads=1):
    """Execute all tasks; returns ``(report, exit_code)``."""
    overrides = overrides or {}
    tolerance = overrides.get("tolerance")
    tolerance = scene.tolerance if tolerance is None else float(tolerance)
    seed = overrides.get("seed", scene.seed)
    seed = 0 if seed is None else int(seed)
    tasks = list(enumerate(scene.tasks))
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            records = list(pool.map(lambda it: _run_task(scene, it[0], it[1], tolerance, seed), tasks))
    else:
        records = [_run_task(scene, i, t, tolerance, seed) for i, t in tasks]
    passed = all(r.get("passed", True) for r in records)
    report = {
        "header": {"scene": scene.source, "mode": scene.mode, "tolerance": tolerance, "seed": seed,
                   "overrides": {k: v for k, v in sorted(overrides.items()) if v is not None}},
        "tasks": records,
        "passed": passed,
    }
    return report, 0 if passed else 1


def dump_report(report):
    return json.dumps(report, indent=2, sort_keys=True)
