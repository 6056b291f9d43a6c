import itertools

import pytest

from defstack import fixtures, oracles
from defstack.artin import hom_from_images, identity, k_of_V, monomial_quotient, residue_field, residue_map
from defstack.defun import aut_space, check_h2, tangent_space
from defstack.errors import InvalidModule, InvalidQuotient, RestrictionMismatch
from defstack.field import GF
from defstack.probmod import ModuleProblem, QuotientProblem, base_algebra, module_fiber_product

F2, F3 = GF(2), GF(3)

# Values frozen from the Hochschild-cochain and Hom oracles.
ORACLE = {
    "u2": (fixtures.module_u2, 1, (1, 1, 1), 1),
    "uv": (fixtures.module_uv, 2, (1, 2, 4), 1),
    "free2": (lambda F=F2: fixtures.module_free(F, 2), 0, (4, 0, 0), 4),
}


@pytest.mark.parametrize("name", ORACLE)
def test_oracles_reproduce_frozen_values(name):
    make, ext1, linear, hom = ORACLE[name]
    P = make()
    assert oracles.ext1_dim_bruteforce(F2, P.B, P.M) == ext1
    assert oracles.ext_dims_linear(F2, P.B, P.M) == linear
    assert oracles.hom_dim(F2, P.M[1:], P.M[1:], P.rank, P.rank) == hom


@pytest.mark.parametrize("name", ORACLE)
def test_tangent_is_ext1_and_aut_is_end(name):
    make, ext1, linear, hom = ORACLE[name]
    P = make()
    assert tangent_space(P).dim == ext1 == linear[1]
    assert aut_space(P).dim == hom == linear[0]


def test_oracle_agreement_over_f3():
    P = fixtures.module_u2(F3)
    assert tangent_space(P).dim == oracles.ext_dims_linear(F3, P.B, P.M)[1] == 1
    assert aut_space(P).dim == 1


def test_nontrivial_action_over_dual_numbers():
    # M = B itself as a module over B = k[u]/u^2 is free, so it deforms trivially
    B = base_algebra(monomial_quotient(F2, ["u"], ["u^2"]))
    P = ModuleProblem(B, [[[0, 0], [1, 0]]])
    lin = oracles.ext_dims_linear(F2, P.B, P.M)
    assert lin[1] == 0
    assert tangent_space(P).dim == 0
    assert aut_space(P).dim == lin[0] == 2


def test_invalid_module_rejected():
    B = base_algebra(monomial_quotient(F2, ["u"], ["u^2"]))
    with pytest.raises(InvalidModule):
        ModuleProblem(B, [[[1]]])  # u acts invertibly but u^2 = 0


def test_quotient_problem():
    P = fixtures.quotient_line()
    assert tangent_space(P).dim == 1
    assert aut_space(P).dim == 0
    assert check_h2(P).result


def test_quotient_validation():
    k = base_algebra(residue_field(F2))
    with pytest.raises(InvalidQuotient):
        QuotientProblem(k, [], [[0, 0]])
    B = base_algebra(monomial_quotient(F2, ["u"], ["u^2"]))
    with pytest.raises(InvalidQuotient):
        # kernel spanned by e1 is not u-stable when u sends e1 to e2
        QuotientProblem(B, [[[0, 0], [1, 0]]], [[0, 1]])


def test_quotient_objects_are_charts():
    P = fixtures.quotient_line()
    e = k_of_V(F2, 1)
    # charts [1 | x] with x in k[e] reducing to 0 mod m: two of them
    assert len(P.fiber(e).objects) == 2


def test_module_fiber_product():
    P = fixtures.module_u2()
    e = k_of_V(F2, 1)
    for a, b in itertools.product(P.fiber(e).objects, repeat=2):
        fp, N = module_fiber_product(P, a, b, residue_map(e), residue_map(e))
        assert N.is_free and N.algebra.dim == 3
        assert P.fiber(e).iso(P.pushforward(fp.first, N.action), a) is not None
        assert P.fiber(e).iso(P.pushforward(fp.second, N.action), b) is not None


def test_module_fiber_product_needs_matching_restrictions():
    P = fixtures.module_u2()
    x2 = monomial_quotient(F2, ["x"], ["x^2"])
    x3 = monomial_quotient(F2, ["x"], ["x^3"])
    p = hom_from_images(x3, x2, {"x": "x"})
    objs3 = P.fiber(x3).reps
    objs2 = P.fiber(x2).reps
    bad = [(a, b) for a in objs3 for b in objs2
           if P.fiber(x2).iso(P.pushforward(p, a), b) is None]
    if not bad:
        pytest.skip("every pair is compatible")
    with pytest.raises(RestrictionMismatch):
        module_fiber_product(P, bad[0][0], bad[0][1], p, identity(x2))

