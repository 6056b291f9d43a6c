"""Worked examples with verdicts that are known in advance, run by ``defstack paper-suite``.

Each entry is deterministic; ``run_suite`` returns one record per example.
"""
from __future__ import annotations

import itertools
import time
from dataclasses import dataclass
from typing import Callable

from . import artin, catalog, defun, fixtures, gdstack, site
from .artin import (
    fiber_product, find_isomorphism, is_schlessinger_square, k_of_V, monomial_quotient,
    pushforward_square, residue_map, sigma, tensor_product,
)
from .field import GF

F2 = GF(2)


@dataclass
class SuiteResult:
    name: str
    passed: bool
    detail: dict
    seconds: float

    def to_json(self) -> dict:
        return {"name": self.name, "passed": self.passed, "detail": self.detail, "seconds": round(self.seconds, 3)}


EXAMPLES: list[tuple[str, Callable[[], tuple[bool, dict]]]] = []


def example(name):
    def deco(fn):
        EXAMPLES.append((name, fn))
        return fn
    return deco


# algebras and squares -----------------------------------------------------------------------


@example("algebra k[x,t]/(x^2,t^2,xt) has dim 3")
def _alg_a():
    A = fixtures.pullback_square().source
    return A.dim == 3, {"labels": list(A.labels)}


@example("algebra k[y,t]/(y^2,t^2) has basis 1,y,t,yt")
def _alg_a2():
    A2 = fixtures.pullback_square().second.target
    return set(A2.labels) == {"1", "y", "t", "yt"} or set(A2.labels) == {"1", "y", "t", "y*t"}, {"labels": list(A2.labels)}


@example("algebra k[x,y]/(x^2,xy,y^2) has dim 3")
def _alg_b():
    A = fixtures.eps_square().source
    return A.dim == 3, {"labels": list(A.labels)}


@example("k[e] x_k k[e] is k[x,y]/(x^2,xy,y^2)")
def _eps_fp():
    e = k_of_V(F2, 1)
    fp = fiber_product(residue_map(e), residue_map(e))
    target = fixtures.eps_square().source
    return find_isomorphism(fp.algebra, target) is not None, {"dim": fp.algebra.dim}


@example("k[e] tensored over k[e] x_k k[e] with k[e] is k")
def _roundtrip():
    e = k_of_V(F2, 1)
    fp = fiber_product(residue_map(e), residue_map(e))
    C = tensor_product(fp.first, fp.second).algebra
    return C.dim == 1, {"dim": C.dim}


@example("pullback square is a Schlessinger square")
def _sq1():
    v = is_schlessinger_square(fixtures.pullback_square())
    return v.holds, v.to_json()


@example("pushforward of the pullback square along t -> 0 fails injectivity")
def _sq1_push():
    ps = pushforward_square(fixtures.pullback_square(), fixtures.pullback_pushforward())
    v = is_schlessinger_square(ps)
    x_image = ps.second.images().get("x")
    shapes = ps.first.target.dim == 1 and ps.second.target.dim == 2 and x_image == "0"
    return (not v.holds) and v.failed_clause == "injectivity" and shapes, dict(v.to_json(), x_image=x_image)


@example("eps square is a Schlessinger square")
def _sq2():
    v = is_schlessinger_square(fixtures.eps_square())
    return v.holds, v.to_json()


@example("pushforward of the eps square into k[x,t]/(x^2,t^2) fails injectivity")
def _sq2_push():
    v = is_schlessinger_square(pushforward_square(fixtures.eps_square(), fixtures.eps_pushforward()))
    return (not v.holds) and v.failed_clause == "injectivity", v.to_json()


@example("sigma on k[e] x_k k[e] adds the e-coefficients")
def _sigma():
    F = GF(3)
    e = k_of_V(F, 1)
    fp, s = sigma(e, [e.basis(1)])
    ok = True
    for a, b, c in itertools.product(range(3), repeat=3):
        if a == 0:
            continue
        img = s(fp.pair((a, b), (a, c)))
        ok &= img == (a, (b + c) % 3)
    return ok, {}


# deformation functors ----------------------------------------------------------------------


def _tiny(max_dim=4):
    return catalog.tiny_extensions(catalog.standard_algebras(F2), max_dim)


@example("module problem over k[u]/u^2 satisfies H1 on tiny extensions")
def _h1():
    P = fixtures.module_u2()
    bad = []
    for p in _tiny():
        for p1 in (p, artin.identity(p.target)):
            if not defun.check_h1(P, p1, p):
                bad.append(repr(p))
    return not bad, {"failures": bad}


@example("module problem satisfies H2")
def _h2():
    r = defun.check_h2(fixtures.module_u2())
    return r.result, {"budget_used": r.budget_used}


@example("quotient problem satisfies H4 on tiny extensions")
def _h4_quot():
    P = fixtures.quotient_line()
    res = [defun.check_h4(P, p).result for p in _tiny()]
    return all(res), {"count": len(res)}


@example("quotient problem: Aut surjectivity criterion holds")
def _h4_aut_quot():
    P = fixtures.quotient_line()
    res = [defun.h4_via_aut(P, p).result for p in _tiny()]
    return all(res), {"count": len(res)}


@example("gluing two objects over k[e] along k")
def _ast():
    P = fixtures.module_u2()
    e = k_of_V(F2, 1)
    objs = P.fiber(e).objects
    ok = True
    for a, b in itertools.product(objs, repeat=2):
        g = defun.ast_product(P, [a, b], [(residue_map(e), residue_map(e))])
        f = P.fiber
        ok &= f(e).iso(P.pushforward(g.projections[0], g.object), a) is not None
        ok &= f(e).iso(P.pushforward(g.projections[1], g.object), b) is not None
    return ok, {"pairs": len(objs) ** 2}


@example("module fiber product projects to its inputs")
def _mfp():
    from .probmod import module_fiber_product

    P = fixtures.module_u2()
    e = k_of_V(F2, 1)
    ok = True
    for a, b in itertools.product(P.fiber(e).objects, repeat=2):
        fp, N = module_fiber_product(P, a, b, residue_map(e), residue_map(e))
        ok &= N.is_free
        ok &= P.fiber(e).iso(P.pushforward(fp.first, N.action), a) is not None
        ok &= P.fiber(e).iso(P.pushforward(fp.second, N.action), b) is not None
    return ok, {}


@example("quotient problem has trivial infinitesimal automorphisms")
def _aut_quot():
    G = defun.aut_space(fixtures.quotient_line(), 1)
    return len(G.elements) == 1, {"size": len(G.elements)}


@example("quotient problem: every automorphism group is trivial")
def _aut_all_quot():
    P = fixtures.quotient_line()
    ok = True
    for A in catalog.standard_algebras(F2):
        if A.dim > 4:
            continue
        f = P.fiber(A)
        ok &= all(len(f.stabilizer(o)) == 1 for o in f.reps)
    return ok, {}


@example("dim A over k[V] is d times dim A")
def _aut_tensor():
    P = fixtures.module_u2()
    a1 = defun.aut_space(P, 1).dim
    dims = {d: defun.aut_space(P, d).dim for d in (2, 3)}
    return all(dims[d] == d * a1 for d in dims), {"dim_A": a1, "dims": dims}


@example("T = 0 gives a single class over every k[V]")
def _t_zero():
    P = fixtures.module_free(F2, 1)
    sizes = {d: len(defun.tangent_space(P, d).elements) for d in (1, 2, 3)}
    return all(s == 1 for s in sizes.values()), {"sizes": sizes}


@example("automorphisms lifting a fixed one form a pseudotorsor")
def _aut_torsor():
    P = fixtures.module_u2()
    x3 = monomial_quotient(F2, ["x"], ["x^3"])
    x2 = monomial_quotient(F2, ["x"], ["x^2"])
    p = artin.hom_from_images(x3, x2, {"x": "x"})
    ok = True
    n = 0
    for eta1 in P.fiber(x3).reps:
        eta = P.pushforward(p, eta1)
        for phi in P.fiber(x2).stabilizer(eta):
            t = defun.aut_torsor(P, eta1, p, phi)
            ok &= t.is_pseudotorsor
            n += 1
    return ok, {"instances": n}


@example("equality in the lower dimension bound is flagged as lci")
def _lci():
    r = defun.dim_bounds_report(1, [1], 0)
    return r.holds and r.lci_equality, r.to_json()


@example("free-module problem is unobstructed")
def _unobstructed():
    P = fixtures.module_free(F2, 1)
    th = defun.ObstructionTheory(P)
    vals = []
    for p in _tiny(3):
        for eta in P.fiber(p.target).reps:
            _, vec = defun.obstruction_evaluate(th, eta, p)
            vals.append(any(vec))
    return not any(vals), {"instances": len(vals)}


# cohomology ---------------------------------------------------------------------------------


@example("trivial second-level covers recover Cech H^2")
def _hyper_cech():
    ok = True
    out = {}
    for X in site.standard_spaces():
        S = site.constant_sheaf(X, F2, 1)
        opens = [X.minimal_open(x) for x in X.minimal_points(X.whole)]
        h = site.hyper_h2(site.trivial_cover2(X, opens), S).dim
        c = site.cech_h(S, opens, 2)[2]
        out[X.name] = [h, c]
        ok &= h == c
    return ok, out


@example("H^2 of a cover vanishes for flasque sheaves")
def _flasque():
    ok = True
    for X in site.standard_spaces():
        G, _ = site.godement_sheaf(site.constant_sheaf(X, F2, 1))
        ok &= site.hyper_h2(site.minimal_open_cover2(X), G).dim == 0
    return ok, {}


# gd-stacks ----------------------------------------------------------------------------------


@example("quotient-type local system has zero automorphism sheaf")
def _quot_A():
    gp = gdstack.LocalSystemProblem(site.circle(), fixtures.quotient_line())
    A = gdstack.sheaf_A(gp).sheaf
    return all(d == 0 for d in A.stalks.values()), {"stalks": dict(A.stalks)}


@example("quotient-type local system satisfies H4")
def _quot_h4():
    r = gdstack.gd_report(gdstack.LocalSystemProblem(site.circle(), fixtures.quotient_line()))
    return all(c.result for c in r.h4_checks), {}


@example("with A = 0 the tangent space is H^0 of the tangent sheaf")
def _h0h1():
    gp = gdstack.LocalSystemProblem(site.circle(), fixtures.quotient_line())
    es = gdstack.exact_sequence_check(gp)
    return es.dims[0] == 0 and es.dims[1] == es.dims[2] and es.exact, {"dims": list(es.dims)}


def run_suite(names: list[str] | None = None) -> list[SuiteResult]:
    out = []
    for name, fn in EXAMPLES:
        if names and not any(n in name for n in names):
            continue
        t = time.perf_counter()
        passed, detail = fn()
        out.append(SuiteResult(name, bool(passed), detail, time.perf_counter() - t))
    return out


__all__ = ["EXAMPLES", "SuiteResult", "run_suite"]
