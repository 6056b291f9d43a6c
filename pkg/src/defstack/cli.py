"""Command-line front end.

Exit codes: 0 success, 1 a verdict differs from the expected one, 2 bad input,
3 an enumeration budget was exceeded.
"""
from __future__ import annotations

import argparse
import json
import os
import random
import sys
from pathlib import Path

from . import artin, catalog, defun, gdstack, schema, site
from . import linalg as la
from .errors import BudgetError, DefstackError
from .field import GF, Field

EXIT_OK, EXIT_CHECK, EXIT_INPUT, EXIT_BUDGET = 0, 1, 2, 3


class InputError(Exception):
    pass


# input helpers ------------------------------------------------------------------------------


def load(arg):
    """Inline JSON, a path to a JSON file, or a bare string (a name)."""
    if arg is None:
        return None
    text = arg.strip()
    if text[:1] in "{[\"" or text in ("true", "false", "null") or text.lstrip("-").isdigit():
        try:
            return json.loads(text)
        except json.JSONDecodeError as ex:
            raise InputError(f"invalid inline JSON: {ex}") from None
    p = Path(arg)
    if p.exists():
        try:
            return json.loads(p.read_text())
        except json.JSONDecodeError as ex:
            raise InputError(f"{arg}: invalid JSON: {ex}") from None
    if text.endswith(".json"):
        raise InputError(f"{arg}: no such file")
    return text


def require(args, name):
    value = getattr(args, name, None)
    if value is None:
        raise InputError(f"--{name.replace('_', '-')} is required")
    return load(value)


def parse_field(text: str | None) -> Field:
    if text is None:
        return GF(2)
    try:
        return Field.from_json(text)
    except ValueError:
        raise InputError(f"--field must be Q or Fp:<p>, got {text!r}") from None


# ring -----------------------------------------------------------------------------------------


def ring_make(args, F):
    doc = require(args, "input")
    if isinstance(doc, dict) and "table" in doc:
        G = schema.field_from_json(doc.get("field"), F)
        res = artin.try_make_algebra(G, doc["table"]["labels"], doc["table"]["mult"])
        if isinstance(res, artin.ValidationFailure):
            return {"input": doc, "valid": False, "failure": res.to_json()}, False
        A = res
    else:
        A = schema.algebra_from_json(doc, F)
    return {"input": doc, "valid": True, "algebra": A.to_json(), "dim": A.dim, "labels": list(A.labels),
            "nilpotency_degree": A.nilpotency_degree, "embedding_dim": len(artin.generators(A))}, True


def ring_fiber(args, F):
    p1 = schema.hom_from_json(require(args, "first"), F)
    p2 = schema.hom_from_json(require(args, "second"), F, target=p1.target)
    fp = artin.fiber_product(p1, p2)
    B = fp.algebra
    return {"dim": B.dim, "expected_dim": p1.source.dim + p2.source.dim - p1.target.dim,
            "algebra": B.to_json(), "first": fp.first.images(), "second": fp.second.images()}, \
        B.dim == p1.source.dim + p2.source.dim - p1.target.dim


def ring_tensor(args, F):
    p1 = schema.hom_from_json(require(args, "first"), F)
    p2 = schema.hom_from_json(require(args, "second"), F, source=p1.source)
    C, j1, j2 = artin.tensor_product(p1, p2)
    return {"dim": C.dim, "algebra": C.to_json(), "first": j1.images(), "second": j2.images()}, True


def ring_square(args, F):
    doc = require(args, "input")
    sq = schema.square_from_json(doc, F)
    out = {"input": doc}
    if args.pushforward:
        spec = load(args.pushforward)
        if isinstance(spec, dict):
            f = schema.hom_from_json(spec, F, source=sq.source)
        else:
            f = schema.substitution_quotient(sq.source, spec)
        out["pushforward"] = f.images()
        sq = artin.pushforward_square(sq, f)
        out["square"] = schema.square_to_json(sq)
    v = artin.is_schlessinger_square(sq)
    out.update(v.to_json())
    return out, v.holds


def ring_classify(args, F):
    p = schema.hom_from_json(require(args, "input"), F)
    ext = artin.classify_extension(p)
    chain = artin.factor_into_tiny(p) if ext.kernel_dim else []
    return dict(ext.to_json(), tiny_chain=[e.to_json() for e in chain]), ext.small


def ring_random(args, F):
    """Fiber and tensor round trips on random surjective pairs."""
    rng = random.Random(args.seed)
    G = F if F.is_finite else GF(2)
    ok = 0
    failures = []
    for i in range(args.count):
        pair = catalog.random_surjective_pair(G, rng, args.max_dim)
        q1, q2 = pair.first, pair.second
        fp = artin.fiber_product(q1, q2)
        back = artin.tensor_product(fp.first, fp.second).algebra
        good = artin.find_isomorphism(back, q1.target) is not None
        good &= fp.algebra.dim == q1.source.dim + q2.source.dim - q1.target.dim
        if good:
            ok += 1
        else:
            failures.append(i)
    return {"seed": args.seed, "count": args.count, "passed": ok, "failures": failures}, not failures


# functor --------------------------------------------------------------------------------------


def _problem(args, F):
    doc = require(args, "problem")
    return doc, schema.problem_from_json(doc, F)


def functor_h(args, F):
    doc, P = _problem(args, F)
    which = args.action
    if which == "h1":
        p1 = schema.hom_from_json(require(args, "first"), F)
        p2 = schema.hom_from_json(require(args, "second"), F, target=p1.target)
        r = defun.check_h1(P, p1, p2)
    elif which == "h2":
        algs = None
        if args.algebras:
            algs = [schema.algebra_from_json(a, P.field) for a in load(args.algebras)]
        r = defun.check_h2(P, algs)
    else:
        p = schema.hom_from_json(require(args, "map"), F)
        r = (defun.check_h4 if which == "h4" else defun.h4_via_aut)(P, p)
    return dict(schema.jsonable(r.to_json()), problem=doc), r.result


def functor_tangent(args, F):
    doc, P = _problem(args, F)
    T = defun.tangent_space(P, args.d)
    return dict(T.to_json(), problem=doc), T.is_vector_space


def functor_aut(args, F):
    doc, P = _problem(args, F)
    G = defun.aut_space(P, args.d)
    return dict(schema.jsonable(G.to_json()), problem=doc), True


def functor_tensor(args, F):
    doc, P = _problem(args, F)
    r = defun.tensor_decomposition_check(P, args.d)
    return dict(r.to_json(), problem=doc), r.ok


def functor_torsor(args, F):
    doc, P = _problem(args, F)
    ext = artin.classify_extension(schema.hom_from_json(require(args, "map"), F))
    rows = []
    ok = True
    for eta in P.fiber(ext.target).reps:
        t = defun.lift_torsor(P, eta, ext)
        brute = defun.lift_exists(P, eta, ext.map)
        ok &= t.is_pseudotorsor and (len(t.elements) > 0) == brute
        rows.append(dict(t.to_json(), eta=schema.jsonable(P.describe(ext.target, eta)), lift_exists=brute))
    return {"problem": doc, "extension": ext.to_json(), "torsors": rows}, ok


def functor_bounds(args, F):
    if args.prorep is not None:
        R = schema.prorep_from_json(load(args.prorep), F)
    elif args.krull is not None:
        R = args.krull
    else:
        raise InputError("--prorep or --krull is required")
    if args.tangent is None:
        raise InputError("--tangent is required")
    obs = [int(x) for x in args.obstructions.split(",")] if args.obstructions else []
    r = defun.dim_bounds_report(args.tangent, obs, R)
    return r.to_json(), r.holds


# cohomology -----------------------------------------------------------------------------------


def _space_sheaf(args, F):
    X = schema.space_from_json(require(args, "space"))
    doc = load(args.sheaf) if args.sheaf else {"constant": 1}
    S = schema.sheaf_from_json(X, doc, F)
    return X, S


def _opens(X, doc):
    if doc in (None, "minimal"):
        return [X.minimal_open(x) for x in X.minimal_points(X.whole)]
    return [frozenset(U) for U in doc]


def cohomology_run(args, F):
    X, S = _space_sheaf(args, F)
    which = args.action
    out = {"space": X.to_json(), "sheaf": S.to_json()}
    if which == "godement":
        H = site.godement_cohomology(S, args.degree)
        out["dims"] = H.dims
        return out, True
    if which == "cech":
        opens = _opens(X, load(args.cover) if args.cover else None)
        out["cover"] = [list(X.sort(U)) for U in opens]
        out["dims"] = site.cech_h(S, opens, args.degree)
        return out, True
    cover = schema.cover2_from_json(X, load(args.cover) if args.cover else "minimal")
    out["cover"] = cover.to_json()
    if which == "hyper":
        H = site.hyper_h2(cover, S)
        out["h2"] = H.dim
        out["godement_h2"] = site.godement_cohomology(S, 2).dims[2]
        return out, True
    if which == "comparison":
        C = site.Comparison(cover, S)
        M = C.matrix()
        out["matrix"] = schema.jsonable(M)
        out["h2_cover"], out["h2"] = int(M.shape[1]), int(M.shape[0])
        out["rank"] = int(la.rank(S.field, M)) if M.size else 0
        out["well_defined"] = C.check_well_defined(seed=args.seed)
        return out, out["well_defined"]
    if which == "refine":
        fine = schema.cover2_from_json(X, require(args, "fine"))
        R = site.refine_cover2(cover, fine, S)
        out["fine"] = fine.to_json()
        out["pi"] = schema.jsonable(R.refinement.pi)
        out["matrix"] = schema.jsonable(R.matrix)
        Ccoarse, Cfine = site.Comparison(cover, S), site.Comparison(fine, S)
        lhs = S.field.reduce(Cfine.matrix() @ R.matrix) if R.matrix.size else R.matrix
        compatible = bool((lhs == Ccoarse.matrix()).all()) if lhs.size else True
        out["compatible_with_comparison"] = compatible
        return out, compatible
    raise InputError(f"unknown cohomology action {which!r}")


# gd -------------------------------------------------------------------------------------------


def _geometric(args, F):
    doc = require(args, "problem")
    space = load(args.space) if args.space else None
    if isinstance(doc, dict) and "local_problem" in doc:
        return doc, schema.geometric_from_json(doc, F, space=space)
    if space is None:
        raise InputError("--space is required when the problem is pointwise")
    full = {"space": space, "local_problem": doc}
    if args.twist:
        full["twist"] = load(args.twist)
    return full, schema.geometric_from_json(full, F)


def _sheaf_json(sh: gdstack.LocalSheaf) -> dict:
    S = sh.sheaf
    return {"stalks": dict(S.stalks), "sheaf": S.to_json(), "presheaf_is_sheaf": sh.presheaf_is_sheaf,
            "global_sections": S.global_sections().dim}


def gd_run(args, F):
    doc, gp = _geometric(args, F)
    which = args.action
    out = {"problem": doc}
    if which == "sheaves":
        out["A"] = _sheaf_json(gdstack.sheaf_A(gp, args.d))
        out["T"] = _sheaf_json(gdstack.sheaf_T(gp, args.d))
        return schema.jsonable(out), True
    if which == "exact":
        r = gdstack.exact_sequence_check(gp)
        out.update(schema.jsonable(r.to_json()))
        return out, r.exact
    if which == "ladder":
        X = gp.space
        top = gp.local(X.whole)
        if args.extension:
            exts = [artin.classify_extension(schema.hom_from_json(load(args.extension), F))]
        else:
            exts = gdstack.small_extensions(gp.field, args.max_dim)
        rows = []
        ok = True
        for ext in exts:
            for eta in top.fiber(ext.target).reps:
                L = gdstack.obstruction_ladder(gp, eta, ext)
                ok &= L.consistent
                rows.append(dict(schema.jsonable(L.to_json()), extension=ext.to_json()))
        out["ladders"] = rows
        out["consistent"] = ok
        return out, ok
    if which == "report":
        R = schema.prorep_from_json(load(args.prorep), F) if args.prorep else None
        r = gdstack.gd_report(gp, R)
        out.update(schema.jsonable(r.to_json()))
        good = r.h1_check.result and r.h2_check.result and r.exact_sequence.exact
        if r.bounds is not None:
            good &= r.bounds.holds
        return out, good
    raise InputError(f"unknown gd action {which!r}")


# worked-example suite ---------------------------------------------------------------------------------


def paper_suite(args, F):
    from .suite import run_suite

    results = run_suite(args.only)
    rows = [r.to_json() for r in results]
    for r in rows:
        r.pop("seconds")
    return {"examples": schema.jsonable(rows), "passed": sum(r["passed"] for r in rows), "total": len(rows)}, \
        all(r["passed"] for r in rows)


# output ---------------------------------------------------------------------------------------

_NOTATION = {"h1_A": "H^1(A)", "h2_A": "H^2(A)", "h0_A": "H^0(A)", "h0_T": "H^0(T)", "h1_T": "H^1(T)",
             "h0_Ob": "H^0(Ob)", "dim_T": "dim T_S"}


def render_text(command: str, report: dict) -> str:
    lines = []
    if "examples" in report:
        for r in report["examples"]:
            lines.append(f"{'PASS' if r['passed'] else 'FAIL'}  {r['name']}")
        lines.append(f"{report['passed']}/{report['total']} passed")
        return "\n".join(lines)
    if command == "gd" and "dims" in report and isinstance(report["dims"], list):
        a1, t, t0, a2 = report["dims"]
        lines.append(f"0 -> H^1(A) [{a1}] -> T_S [{t}] -> H^0(T) [{t0}] -> H^2(A) [{a2}]"
                     f"   {'exact' if report.get('exact') else 'NOT exact'}")
    for key, value in report.items():
        if key in ("input", "problem", "space", "sheaf", "square", "algebra", "cover", "fine"):
            continue
        label = _NOTATION.get(key, key)
        if isinstance(value, dict) and key == "dims":
            value = ", ".join(f"{_NOTATION.get(k, k)}={v}" for k, v in value.items())
        elif isinstance(value, (dict, list)):
            value = json.dumps(value)
        lines.append(f"{label}: {value}")
    return "\n".join(lines)


# parser ---------------------------------------------------------------------------------------


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--field", default=argparse.SUPPRESS, help="Q or Fp:<p> (default Fp:2)")
    p.add_argument("--budget-objects", type=int, default=argparse.SUPPRESS)
    p.add_argument("--budget-dim", type=int, default=argparse.SUPPRESS)
    p.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    p.add_argument("--format", choices=("json", "text"), default=argparse.SUPPRESS)
    p.add_argument("--expect", choices=("true", "false"), default=argparse.SUPPRESS,
                   help="exit 1 when the main verdict differs")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="defstack", parents=[common],
                                     description="Deformation functors, finite-space cohomology and gd-stacks.")
    sub = parser.add_subparsers(dest="command", required=True)

    ring = sub.add_parser("ring", parents=[common], help="algebras, fiber and tensor products, squares")
    ring.add_argument("action", choices=("make", "validate", "fiber", "tensor", "square", "classify", "random"))
    ring.add_argument("--input")
    ring.add_argument("--first")
    ring.add_argument("--second")
    ring.add_argument("--pushforward", help="var:value substitutions or a map JSON")
    ring.add_argument("--count", type=int, default=100)
    ring.add_argument("--max-dim", type=int, default=5)

    fun = sub.add_parser("functor", parents=[common], help="hypotheses, tangent and aut spaces, torsors, bounds")
    fun.add_argument("action", choices=("h1", "h2", "h4", "h4-aut", "tangent", "aut", "tensor", "torsor", "bounds"))
    fun.add_argument("--problem")
    fun.add_argument("--first")
    fun.add_argument("--second")
    fun.add_argument("--map")
    fun.add_argument("--algebras")
    fun.add_argument("--d", type=int, default=1)
    fun.add_argument("--tangent", type=int)
    fun.add_argument("--obstructions")
    fun.add_argument("--krull", type=int)
    fun.add_argument("--prorep")

    coh = sub.add_parser("cohomology", parents=[common], help="sheaf cohomology on finite spaces")
    coh.add_argument("action", choices=("godement", "cech", "hyper", "comparison", "refine"))
    coh.add_argument("--space")
    coh.add_argument("--sheaf")
    coh.add_argument("--cover")
    coh.add_argument("--fine")
    coh.add_argument("--degree", type=int, default=2)

    gd = sub.add_parser("gd", parents=[common], help="local systems on finite spaces")
    gd.add_argument("action", choices=("sheaves", "exact", "ladder", "report"))
    gd.add_argument("--space")
    gd.add_argument("--problem")
    gd.add_argument("--twist")
    gd.add_argument("--extension")
    gd.add_argument("--max-dim", type=int, default=3)
    gd.add_argument("--prorep")
    gd.add_argument("--d", type=int, default=1)

    ps = sub.add_parser("paper-suite", parents=[common], help="run the worked examples")
    ps.add_argument("--only", action="append")
    return parser


_DISPATCH = {
    ("ring", "make"): ring_make, ("ring", "validate"): ring_make, ("ring", "fiber"): ring_fiber,
    ("ring", "tensor"): ring_tensor, ("ring", "square"): ring_square, ("ring", "classify"): ring_classify,
    ("ring", "random"): ring_random,
    ("functor", "h1"): functor_h, ("functor", "h2"): functor_h, ("functor", "h4"): functor_h,
    ("functor", "h4-aut"): functor_h, ("functor", "tangent"): functor_tangent, ("functor", "aut"): functor_aut,
    ("functor", "tensor"): functor_tensor, ("functor", "torsor"): functor_torsor,
    ("functor", "bounds"): functor_bounds,
}


def _budget(args):
    objects = getattr(args, "budget_objects", None)
    if objects is None and os.environ.get("DEFSTACK_BUDGET_OBJECTS"):
        try:
            objects = int(os.environ["DEFSTACK_BUDGET_OBJECTS"])
        except ValueError:
            raise InputError("DEFSTACK_BUDGET_OBJECTS must be an integer") from None
    dim = getattr(args, "budget_dim", None)
    for name, v in (("--budget-objects", objects), ("--budget-dim", dim)):
        if v is not None and v <= 0:
            raise InputError(f"{name} must be positive")
    return objects, dim


def execute(argv) -> tuple[int, dict, argparse.Namespace | None]:
    """Parse and run; returns (exit code, report, parsed arguments)."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as ex:
        return (EXIT_OK if ex.code == 0 else EXIT_INPUT), {}, None
    for name, default in (("seed", 0), ("format", "json"), ("field", None), ("expect", None)):
        if not hasattr(args, name):
            setattr(args, name, default)
    try:
        F = parse_field(args.field)
        objects, dim = _budget(args)
        with defun.budget_scope(objects=objects, dim=dim):
            if args.command == "cohomology":
                report, verdict = cohomology_run(args, F)
            elif args.command == "gd":
                report, verdict = gd_run(args, F)
            elif args.command == "paper-suite":
                report, verdict = paper_suite(args, F)
            else:
                report, verdict = _DISPATCH[(args.command, args.action)](args, F)
    except BudgetError as ex:
        return EXIT_BUDGET, {"error": "budget", "message": str(ex), "details": schema.jsonable(ex.details)}, args
    except (InputError, DefstackError, KeyError, TypeError, ValueError) as ex:
        details = schema.jsonable(getattr(ex, "details", {}))
        return EXIT_INPUT, {"error": type(ex).__name__, "message": str(ex), "details": details}, args
    echoed = {k: report.pop(k) for k in ("input", "problem") if k in report}
    report = schema.jsonable(dict(report, **echoed))
    if args.command == "paper-suite" and not verdict:
        return EXIT_CHECK, report, args
    if args.expect is not None and verdict != (args.expect == "true"):
        return EXIT_CHECK, report, args
    return EXIT_OK, report, args


def run(argv=None, stdout=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    out = stdout or sys.stdout
    code, report, args = execute(argv)
    if report:
        if args is not None and args.format == "text" and "error" not in report:
            print(render_text(args.command, report), file=out)
        else:
            print(json.dumps(report, indent=2), file=out)
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
