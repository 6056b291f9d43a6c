import itertools
import random

import numpy as np
import pytest
from hypothesis import given, strategies as st

from defstack import artin, catalog, fixtures
from defstack.artin import (
    Square, classify_extension, factor_into_tiny, fiber_product, find_isomorphism, hom_from_images,
    is_schlessinger_square, k_of_V, make_algebra, monomial_quotient, pushforward_square, residue_field,
    residue_map, sigma, tensor_over, tensor_product,
)
from defstack.errors import (
    FirstMapNotSurjective, MaximalIdealNotNilpotent, NeitherMapSurjective, NoUnit, NotAHomomorphism,
    NotAssociative, NotCommutative, NotSurjective,
)
from defstack.field import GF, QQ

F2, F3 = GF(2), GF(3)
seeds = st.integers(0, 10_000)
fields = st.sampled_from([F2, F3])


# construction -----------------------------------------------------------------------------------


def test_worked_example_algebras_have_expected_dimensions():
    assert monomial_quotient(F2, ["x", "t"], ["x^2", "t^2", "x*t"]).dim == 3
    A2 = monomial_quotient(F2, ["y", "t"], ["y^2", "t^2"])
    assert A2.dim == 4 and set(A2.labels) == {"1", "y", "t", "y*t"}
    assert monomial_quotient(F2, ["x", "y"], ["x^2", "xy", "y^2"]).dim == 3


def test_monomial_basis_and_nilpotency():
    A = monomial_quotient(QQ, ["x"], ["x^4"])
    assert A.labels == ("1", "x", "x^2", "x^3")
    assert A.nilpotency_degree == 4
    inv = A.inverse(A.element("2+x"))
    assert A.mul(inv, A.element("2+x")) == A.one


def test_k_of_V_squares_to_zero():
    V = k_of_V(F3, 3)
    for i, j in itertools.product(range(1, 4), repeat=2):
        assert V.mul(V.basis(i), V.basis(j)) == V.zero


@pytest.mark.parametrize("table, error", [
    ([[[0, 1], [1, 0]], [[1, 0], [0, 1]]], NoUnit),
    ([[[1, 0], [0, 1]], [[0, 1], [0, 1]]], MaximalIdealNotNilpotent),
])
def test_invalid_tables_raise(table, error):
    with pytest.raises(error):
        make_algebra(F2, ["1", "x"], table)


def test_validation_failures_are_values():
    T = np.zeros((3, 3, 3), dtype=np.int64)
    for i in range(3):
        T[0, i, i] = T[i, 0, i] = 1
    T[1, 2, 1] = 1  # x*y = x but y*x = 0
    res = artin.try_make_algebra(F2, ["1", "x", "y"], T)
    assert isinstance(res, artin.ValidationFailure) and res.axiom == "commutativity"
    with pytest.raises(NotCommutative):
        make_algebra(F2, ["1", "x", "y"], T)


def test_non_associative_table_is_rejected():
    T = np.zeros((3, 3, 3), dtype=np.int64)
    for i in range(3):
        T[0, i, i] = T[i, 0, i] = 1
    T[1, 1, 2] = 1
    T[1, 2, 1] = T[2, 1, 1] = 1
    res = artin.try_make_algebra(F2, ["1", "x", "y"], T)
    assert isinstance(res, artin.ValidationFailure)
    assert res.axiom in {"associativity", "nilpotency"}
    with pytest.raises((NotAssociative, MaximalIdealNotNilpotent)):
        make_algebra(F2, ["1", "x", "y"], T)


def test_json_round_trip():
    for A in catalog.standard_algebras(F2):
        from defstack.schema import algebra_from_json

        assert algebra_from_json(A.to_json()) == A


@given(fields, seeds)
def test_random_algebras_satisfy_the_axioms(F, seed):
    A = catalog.random_monomial_algebra(F, random.Random(seed), 5)
    assert artin.validate_table(F, A.table) is None


# maps --------------------------------------------------------------------------------------------


def test_bad_images_are_rejected():
    x2 = monomial_quotient(F2, ["x"], ["x^2"])
    x3 = monomial_quotient(F2, ["x"], ["x^3"])
    with pytest.raises(NotAHomomorphism):
        hom_from_images(x2, k_of_V(F2, 1), {"x": "1"})
    assert len(artin.homomorphisms(x2, k_of_V(F2, 1))) == 2
    assert hom_from_images(x3, x2, {"x": "x"}).is_surjective()


# fiber products -------------------------------------------------------------------------------


def test_eps_fiber_product_is_the_square_zero_plane():
    e = k_of_V(F2, 1)
    fp = fiber_product(residue_map(e), residue_map(e))
    assert fp.algebra.dim == 3
    assert find_isomorphism(fp.algebra, monomial_quotient(F2, ["x", "y"], ["x^2", "xy", "y^2"])) is not None


def test_fiber_product_needs_a_surjection():
    k = residue_field(F2)
    with pytest.raises(NeitherMapSurjective):
        fiber_product(artin.structure_map(k_of_V(F2, 1)), artin.structure_map(k_of_V(F2, 1)))
    _ = k


@given(fields, seeds)
def test_fiber_product_dimension_identity(F, seed):
    pair = catalog.random_surjective_pair(F, random.Random(seed), 5)
    fp = fiber_product(pair.first, pair.second)
    assert fp.algebra.dim == pair.first.source.dim + pair.second.source.dim - pair.first.target.dim
    # the projections compose to the same map into the base
    assert pair.first @ fp.first == pair.second @ fp.second


@given(fields, seeds)
def test_fiber_then_tensor_recovers_the_base(F, seed):
    pair = catalog.random_surjective_pair(F, random.Random(seed), 5)
    p1, p2 = (pair.first, pair.second) if pair.first.is_surjective() else (pair.second, pair.first)
    fp = fiber_product(p1, p2)
    back, _, _ = tensor_over(fp.second, fp.first)
    assert find_isomorphism(back, p1.target) is not None
    assert is_schlessinger_square(Square(fp.second, fp.first)).holds


@given(fields, seeds)
def test_tensor_then_fiber_recovers_schlessinger_source(F, seed):
    sq = catalog.random_square(F, random.Random(seed), 4)
    if not is_schlessinger_square(sq):
        return
    C, q1, q2 = tensor_over(sq.first, sq.second)
    fp = fiber_product(q1, q2)
    assert find_isomorphism(fp.algebra, sq.source) is not None
    assert artin.self_product_check(sq).holds


def test_tensor_over_requires_surjective_first_leg():
    e = k_of_V(F2, 1)
    with pytest.raises(FirstMapNotSurjective):
        tensor_over(artin.structure_map(e), artin.structure_map(e))


def test_tensor_over_k():
    e = k_of_V(F2, 1)
    C = tensor_product(artin.structure_map(e), artin.structure_map(e)).algebra
    assert C.dim == 4


# squares -----------------------------------------------------------------------------------------


def test_pullback_square_and_its_pushforward():
    sq = fixtures.pullback_square()
    assert is_schlessinger_square(sq).holds
    ps = pushforward_square(sq, fixtures.pullback_pushforward())
    v = is_schlessinger_square(ps)
    assert not v.holds and v.failed_clause == "injectivity"
    assert ps.first.target.dim == 1
    assert find_isomorphism(ps.second.target, monomial_quotient(F2, ["y"], ["y^2"])) is not None
    assert ps.second.images()["x"] == "0"


def test_eps_square_pushforward_fails_injectivity():
    sq = fixtures.eps_square()
    assert is_schlessinger_square(sq).holds
    v = is_schlessinger_square(pushforward_square(sq, fixtures.eps_pushforward()))
    assert v.failed_clause == "injectivity"


def test_closure_and_surjectivity_clauses():
    e = k_of_V(F2, 1)
    x3 = monomial_quotient(F2, ["x"], ["x^3"])
    # A = k[e], A' = k[e] via identity is surjective; A'' = k[x]/x^3 with e -> x^2: image of ker(id)=0 is closed
    assert is_schlessinger_square(Square(artin.identity(e), hom_from_images(e, x3, {"e": "x^2"}))).holds
    v = is_schlessinger_square(Square(artin.structure_map(e), artin.structure_map(e)))
    assert v.failed_clause == "surjectivity"
    A = monomial_quotient(F2, ["x"], ["x^2"])
    B = monomial_quotient(F2, ["x", "y"], ["x^2", "y^2"])
    v = is_schlessinger_square(Square(residue_map(A), hom_from_images(A, B, {"x": "x"})))
    assert v.failed_clause == "closure"


def test_self_product_on_pullback_square():
    r = artin.self_product_check(fixtures.pullback_square())
    assert r.intersection_dim == 0 and r.square.holds
    assert (r.D.dim, r.I.shape[0], r.delta.shape[0]) == (6, 2, 2)


# extensions --------------------------------------------------------------------------------------


def test_classify_and_factor():
    x3 = monomial_quotient(F2, ["x"], ["x^3"])
    ext = classify_extension(residue_map(x3))
    assert not ext.small
    chain = factor_into_tiny(residue_map(x3))
    assert [c.tiny for c in chain] == [True, True]
    assert chain[1].map @ chain[0].map == residue_map(x3)
    with pytest.raises(NotSurjective):
        classify_extension(artin.structure_map(x3))


@given(seeds)
def test_factor_into_tiny_composes_back(seed):
    rng = random.Random(seed)
    A = catalog.random_monomial_algebra(F2, rng, 5)
    _, p = artin.quotient_algebra(A, catalog.random_ideal(A, rng))
    chain = factor_into_tiny(p) if p.kernel().shape[0] else []
    assert all(c.tiny for c in chain)
    if chain:
        comp = chain[0].map
        for c in chain[1:]:
            comp = c.map @ comp
        assert np.array_equal(comp.matrix, p.matrix)


def test_sigma_adds_first_order_parts():
    e = k_of_V(F3, 1)
    fp, s = sigma(e, [e.basis(1)])
    for a, b, c in itertools.product(range(1, 3), range(3), range(3)):
        assert s(fp.pair((a, b), (a, c))) == (a, (b + c) % 3)
