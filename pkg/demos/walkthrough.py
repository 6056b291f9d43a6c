"""A guided tour: squares, tangent spaces, finite-space cohomology and a gd-stack.

Run with ``python demos/walkthrough.py``.
"""
from defstack import fixtures, gdstack, site
from defstack.artin import is_schlessinger_square, pushforward_square
from defstack.defun import ProRep, aut_space, tangent_space
from defstack.field import GF
from defstack.oracles import ext_dims_linear

F2 = GF(2)


def squares():
    print("== Squares of Artin rings")
    sq = fixtures.pullback_square()
    print("k[x,t]/(x^2,t^2,xt) -> k, k[y,t]/(y^2,t^2):", is_schlessinger_square(sq).to_json())
    pushed = pushforward_square(sq, fixtures.pullback_pushforward())
    # base change along t -> 0 kills x in both legs
    print("after t -> 0:", is_schlessinger_square(pushed).to_json())


def functors():
    print("\n== Deformations of M = k over B = F2[u,v]/(u,v)^2")
    P = fixtures.module_uv()
    T, A = tangent_space(P), aut_space(P)
    hom, ext1, ext2 = ext_dims_linear(F2, P.B, P.M)
    print(f"dim T = {T.dim} (Ext^1 oracle {ext1}), dim A = {A.dim} (Hom oracle {hom}), Ext^2 = {ext2}")


def cohomology():
    print("\n== Cohomology of finite models with constant coefficients")
    for X in (site.circle(), site.sphere(), site.wedge_of_circles()):
        dims = site.godement_cohomology(site.constant_sheaf(X, F2, 1), 2).dims
        print(f"{X.name:8s} {len(X.points)} points  H^0..H^2 = {dims}")


def stacks():
    print("\n== Rank-one local systems")
    for X in (site.circle(), site.sphere()):
        gp = gdstack.LocalSystemProblem(X, fixtures.rank1())
        es = gdstack.exact_sequence_check(gp)
        a1, t, t0, a2 = es.dims
        print(f"{X.name}: 0 -> H^1(A)={a1} -> T={t} -> H^0(T)={t0} -> H^2(A)={a2}  exact={es.exact}")
    r = gdstack.gd_report(gdstack.LocalSystemProblem(site.circle(), fixtures.rank1()),
                          ProRep(fixtures.pullback_pushforward().target, 1, 2))
    print("circle bounds:", r.bounds.to_json()["bounds"], r.bounds.status, "smooth:", r.smooth_criterion)


if __name__ == "__main__":
    squares()
    functors()
    cohomology()
    stacks()
