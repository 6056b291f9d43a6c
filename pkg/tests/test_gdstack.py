import pytest

from defstack import fixtures, gdstack, site
from defstack.artin import residue_map, k_of_V
from defstack.defun import ProRep, budget_scope
from defstack.errors import InvalidModule
from defstack.field import GF

F2, F3 = GF(2), GF(3)


def lsp(space, problem, twist=None):
    return gdstack.LocalSystemProblem(space, problem, twist)


# (space, pointwise problem) -> (h1_A, dim T, h0_T, h2_A)
EXACT = {
    "circle rank 1": (site.circle, fixtures.rank1, (1, 1, 0, 0)),
    "sphere rank 1": (site.sphere, fixtures.rank1, (0, 0, 0, 1)),
    "circle over k[u]/u^2": (site.circle, fixtures.module_u2, (1, 2, 1, 0)),
    "point over k[u]/u^2": (site.point_space, fixtures.module_u2, (0, 1, 1, 0)),
    "circle quotient": (site.circle, fixtures.quotient_line, (0, 1, 1, 0)),
}


@pytest.mark.parametrize("name", EXACT)
def test_exact_sequence(name):
    space, make, dims = EXACT[name]
    es = gdstack.exact_sequence_check(lsp(space(), make()))
    assert es.dims == dims
    assert es.exact and es.injective and es.cohomology_crosscheck


def test_sheaves_on_circle():
    gp = lsp(site.circle(), fixtures.rank1())
    A, T = gdstack.sheaf_A(gp), gdstack.sheaf_T(gp)
    assert all(d == 1 for d in A.sheaf.stalks.values())
    assert all(d == 0 for d in T.sheaf.stalks.values())
    assert A.restrictions_linear and A.presheaf_is_sheaf


def test_one_point_space_reduces_to_pointwise():
    from defstack.defun import aut_space, tangent_space

    P = fixtures.module_u2()
    gp = lsp(site.point_space(), P)
    r = gdstack.gd_report(gp)
    assert r.tangent_dim == tangent_space(P).dim
    assert r.dims["h0_A"] == aut_space(P).dim
    assert r.dims["h1_A"] == r.dims["h2_A"] == r.dims["h1_T"] == 0


def test_quotient_problem_has_zero_A():
    gp = lsp(site.circle(), fixtures.quotient_line())
    assert all(d == 0 for d in gdstack.sheaf_A(gp).sheaf.stalks.values())
    r = gdstack.gd_report(gp)
    assert r.h1_check.result and r.h2_check.result and all(c.result for c in r.h4_checks)
    assert r.tangent_dim == r.dims["h0_T"]


def test_mobius_twist_over_f3():
    with budget_scope(objects=20000):
        gp = lsp(site.circle(), fixtures.rank1(F3), {("a0", "b0"): [[2]]})
        es = gdstack.exact_sequence_check(gp)
    assert es.dims == (1, 1, 0, 0) and es.exact


def test_bad_twists_are_rejected():
    with pytest.raises(InvalidModule):
        lsp(site.circle(), fixtures.rank1(F3), {("a0", "a1"): [[2]]})  # not a Hasse edge
    with pytest.raises(InvalidModule):
        lsp(site.circle(), fixtures.quotient_line(), {("a0", "b0"): [[1]]})
    with pytest.raises(InvalidModule):
        lsp(site.circle(), fixtures.rank1(F3), {("a0", "b0"): [[0]]})


def test_obstruction_sheaf_modes():
    assert gdstack.obstruction_sheaf(lsp(site.circle(), fixtures.rank1())).global_sections().dim == 0
    assert gdstack.obstruction_sheaf(lsp(site.circle(), fixtures.module_u2())).global_sections().dim == 1


LADDER = {
    "circle rank 1": (site.circle, fixtures.rank1, {4}),
    "circle over k[u]/u^2": (site.circle, fixtures.module_u2, {1, 4}),
    "circle quotient": (site.circle, fixtures.quotient_line, {4}),
}


@pytest.mark.parametrize("name", LADDER)
def test_ladder_agrees_with_brute_force(name):
    space, make, stages = LADDER[name]
    gp = lsp(space(), make())
    top = gp.local(gp.space.whole)
    seen = set()
    for ext in gdstack.small_extensions(gp.field, 3):
        for eta in top.fiber(ext.map.target).reps:
            L = gdstack.obstruction_ladder(gp, eta, ext)
            assert L.consistent
            assert L.liftable == gdstack.global_lift_exists(gp, eta, ext)
            assert gdstack.ladder_functoriality(gp, eta, ext)
            seen.add(L.stage)
    assert seen == stages


def test_very_short_sequence_on_dual_numbers():
    gp = lsp(site.circle(), fixtures.module_u2())
    top = gp.local(gp.space.whole)
    p = residue_map(k_of_V(F2, 1))
    for eta in top.fiber(p.target).reps:
        r = gdstack.very_short_sequence(gp, eta, p)
        assert r.exact
        assert r.lift_classes >= 1


@pytest.mark.parametrize("name, space, problem, R, holds", fixtures.prorep_fixtures())
def test_bounds_on_prorep_fixtures(name, space, problem, R, holds):
    r = gdstack.gd_report(lsp(space, problem), R)
    assert r.bounds.holds == holds


def test_smooth_criterion_on_circle():
    r = gdstack.gd_report(lsp(site.circle(), fixtures.rank1()), ProRep(fixtures.pullback_pushforward().target, 1, 2))
    assert r.smooth_criterion and r.bounds.holds
    assert r.bounds.lower == r.bounds.upper == r.tangent_dim == 1
