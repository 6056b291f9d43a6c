import itertools

import pytest

from defstack import artin, catalog, defun, fixtures
from defstack.artin import hom_from_images, k_of_V, monomial_quotient, residue_map
from defstack.defun import (
    ObstructionTheory, ProRep, TaggedScalarProblem, aut_space, budget_scope, check_h1, check_h2, check_h4,
    dim_bounds_report, h4_via_aut, lift_exists, lift_torsor, obstruction_evaluate, prorep_evaluate,
    tangent_space, tensor_decomposition_check,
)
from defstack.errors import (
    EnumerationBudgetExceeded, FunctorialityViolation, NotADeformationFunctor, TruncationTooShallow,
)
from defstack.field import GF, QQ

F2 = GF(2)


@pytest.fixture(scope="module")
def tiny():
    return catalog.tiny_extensions(catalog.standard_algebras(F2), 4)


def x3_to_x2():
    x3 = monomial_quotient(F2, ["x"], ["x^3"])
    return hom_from_images(x3, monomial_quotient(F2, ["x"], ["x^2"]), {"x": "x"})


# Schlessinger conditions ------------------------------------------------------------------------


@pytest.mark.parametrize("make", [fixtures.module_u2, fixtures.quotient_line, lambda: fixtures.module_free(F2, 1)])
def test_h1_h4_and_aut_criterion_agree(make, tiny):
    P = make()
    for p in tiny:
        assert check_h1(P, p, p).result
        assert check_h4(P, p).result == h4_via_aut(P, p).result


def test_h2_for_module_problems():
    assert check_h2(fixtures.module_u2()).result
    assert check_h2(fixtures.module_uv()).result


def test_tagged_scalar_fails_h1_with_witness():
    P = TaggedScalarProblem(F2)
    e = residue_map(k_of_V(F2, 1))
    r = check_h1(P, e, e)
    assert not r.result and r.witness is not None
    assert not r.to_json()["result"]


def test_tangent_space_refuses_non_functor():
    with pytest.raises(NotADeformationFunctor):
        tangent_space(TaggedScalarProblem(F2))


def test_h1_requires_tiny_second_map():
    x3 = monomial_quotient(F2, ["x"], ["x^3"])
    with pytest.raises(ValueError):
        check_h1(fixtures.module_u2(), residue_map(x3), residue_map(x3))


# tangent and automorphism spaces --------------------------------------------------------------


@pytest.mark.parametrize("make, t_dim, a_dim", [
    (fixtures.module_u2, 1, 1),
    (fixtures.module_uv, 2, 1),
    (lambda: fixtures.module_free(F2, 2), 0, 4),
    (fixtures.quotient_line, 1, 0),
])
def test_tangent_and_aut_dimensions(make, t_dim, a_dim):
    P = make()
    T, A = tangent_space(P), aut_space(P)
    assert T.is_vector_space and A.is_vector_space
    assert (T.dim, A.dim) == (t_dim, a_dim)
    assert len(T.elements) == 2 ** t_dim


def test_aut_composition_is_addition():
    A = aut_space(fixtures.module_u2())
    assert A.abelian and A.composition_is_addition


@pytest.mark.parametrize("d", [2, 3])
def test_tensor_decomposition(d):
    r = tensor_decomposition_check(fixtures.module_u2(), d)
    assert r.ok
    assert r.tangent_sizes[1] == 2 ** d


def test_tangent_needs_finite_field():
    with pytest.raises(Exception):
        tangent_space(fixtures.module_u2(QQ))


# torsors --------------------------------------------------------------------------------------


def test_lift_torsor_matches_lift_existence(tiny):
    P = fixtures.module_u2()
    for p in tiny:
        ext = artin.classify_extension(p)
        for eta in P.fiber(p.target).reps:
            t = lift_torsor(P, eta, ext)
            assert t.is_pseudotorsor
            assert bool(t.elements) == lift_exists(P, eta, p)


def test_aut_torsor_is_pseudotorsor():
    P = fixtures.module_u2()
    p = x3_to_x2()
    for eta1 in P.fiber(p.source).reps:
        for phi in P.fiber(p.target).stabilizer(P.pushforward(p, eta1)):
            assert defun.aut_torsor(P, eta1, p, phi).is_pseudotorsor


# prorepresentability and bounds ----------------------------------------------------------------


def test_prorep_counts_homomorphisms():
    x2 = monomial_quotient(F2, ["x"], ["x^2"])
    R = ProRep(x2, 1, 2)
    assert len(prorep_evaluate(R, k_of_V(F2, 1))) == 2
    assert len(prorep_evaluate(R, k_of_V(F2, 2))) == 4
    with pytest.raises(TruncationTooShallow):
        prorep_evaluate(R, monomial_quotient(F2, ["x"], ["x^3"]))


@pytest.mark.parametrize("t, obs, krull, holds, lci", [
    (1, [1], 0, True, True),
    (2, [0], 2, True, True),
    (2, [1], 2, True, False),
    (1, [0], 2, False, False),
    (3, [1], 1, False, False),
])
def test_dim_bounds(t, obs, krull, holds, lci):
    r = dim_bounds_report(t, obs, krull)
    assert (r.holds, r.lci_equality) == (holds, lci)
    assert r.status == ("OK" if holds else "VIOLATED")


# obstructions ----------------------------------------------------------------------------------


def test_indicator_obstruction_vanishes_iff_lift_exists(tiny):
    P = fixtures.module_uv()
    th = ObstructionTheory(P)
    for p in tiny:
        if p.source.dim > 3:
            continue
        for eta in P.fiber(p.target).reps:
            m, vec = obstruction_evaluate(th, eta, p)
            assert m == 1
            assert (not any(vec)) == lift_exists(P, eta, p)


def test_lying_plugin_is_caught():
    P = fixtures.module_u2()
    th = ObstructionTheory(P, (1,), lambda eta, ext: (1, (1,) * ext.kernel_dim))
    e = residue_map(k_of_V(F2, 1))
    with pytest.raises(FunctorialityViolation):
        obstruction_evaluate(th, P.fiber(e.target).reps[0], e)


def test_honest_plugin_passes():
    P = fixtures.module_free(F2, 1)
    th = ObstructionTheory(P, (1,), lambda eta, ext: (1, (0,) * ext.kernel_dim))
    p = residue_map(k_of_V(F2, 2))
    for eta in P.fiber(p.target).reps:
        assert obstruction_evaluate(th, eta, p) == (1, (0, 0))


# budgets ---------------------------------------------------------------------------------------


def test_budget_errors_are_raised():
    with budget_scope(objects=10):
        with pytest.raises(EnumerationBudgetExceeded):
            tangent_space(fixtures.module_free(F2, 2), 2)
    with budget_scope(dim=1):
        with pytest.raises(EnumerationBudgetExceeded):
            tangent_space(fixtures.module_u2(), 2)


def test_budget_scope_restores():
    before = defun.current_budget()
    with budget_scope(objects=7):
        assert defun.current_budget().objects == 7
    assert defun.current_budget() == before


def test_ast_product_projects_back():
    P = fixtures.module_u2()
    e = k_of_V(F2, 1)
    objs = P.fiber(e).objects
    for a, b in itertools.product(objs, repeat=2):
        g = defun.ast_product(P, [a, b], [(residue_map(e), residue_map(e))])
        assert P.fiber(e).iso(P.pushforward(g.projections[0], g.object), a) is not None
        assert P.fiber(e).iso(P.pushforward(g.projections[1], g.object), b) is not None
