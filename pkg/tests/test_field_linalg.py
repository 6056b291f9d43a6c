from fractions import Fraction

import numpy as np
import pytest
import sympy
from hypothesis import given, strategies as st

from defstack import linalg as la
from defstack.field import GF, QQ, Field

PRIMES = st.sampled_from([2, 3, 5, 7])


def matrices(p, max_side=5):
    return st.integers(1, max_side).flatmap(
        lambda m: st.integers(1, max_side).flatmap(
            lambda n: st.lists(st.lists(st.integers(0, p - 1), min_size=n, max_size=n), min_size=m, max_size=m)
        )
    )


def test_field_parsing_round_trips():
    for F in (QQ, GF(2), GF(5)):
        assert Field.from_json(F.to_json()) == F
    assert Field.from_json("Fp:3") == GF(3)
    with pytest.raises(ValueError):
        Field.from_json("R")


def test_gf_rejects_composite_order():
    with pytest.raises(ValueError):
        GF(4)


@given(PRIMES, st.integers(1, 1000))
def test_inverse_in_prime_field(p, x):
    F = GF(p)
    if x % p:
        assert (F(x) * F.inv(F(x))) % p == 1


@given(st.data())
def test_rank_plus_nullity(data):
    p = data.draw(PRIMES)
    F = GF(p)
    M = F.array(data.draw(matrices(p)))
    N = la.nullspace(F, M)
    assert la.rank(F, M) + N.shape[0] == M.shape[1]
    if N.shape[0]:
        assert not F.reduce(M @ N.T).any()


@given(st.data())
def test_rank_matches_sympy_over_q(data):
    rows = data.draw(st.lists(st.lists(st.integers(-3, 3), min_size=4, max_size=4), min_size=1, max_size=5))
    M = QQ.array(rows)
    assert la.rank(QQ, M) == sympy.Matrix(rows).rank()


@given(st.data())
def test_flint_and_fallback_rref_agree(data):
    rows = data.draw(st.lists(st.lists(st.integers(-4, 4), min_size=4, max_size=4), min_size=3, max_size=5))
    M = QQ.array(rows)
    R1, p1 = la.rref(QQ, M)
    saved = la.flint
    la.flint = None
    try:
        R2, p2 = la.rref(QQ, M)
    finally:
        la.flint = saved
    assert p1 == p2
    assert all(Fraction(a) == Fraction(b) for a, b in zip(R1.reshape(-1), R2.reshape(-1)))


@given(st.data())
def test_solve_and_inverse(data):
    p = data.draw(PRIMES)
    F = GF(p)
    n = data.draw(st.integers(1, 4))
    M = F.array(data.draw(st.lists(st.lists(st.integers(0, p - 1), min_size=n, max_size=n), min_size=n, max_size=n)))
    b = F.array(data.draw(st.lists(st.integers(0, p - 1), min_size=n, max_size=n)))
    x = la.solve(F, M, b)
    if x is not None:
        assert np.array_equal(F.reduce(M @ x), b)
    if la.rank(F, M) == n:
        assert np.array_equal(F.reduce(M @ la.inverse(F, M)), F.eye(n))


def test_quotient_and_intersection():
    F = GF(2)
    U = F.array([[1, 0, 0], [0, 1, 0]])
    W = F.array([[0, 1, 0], [0, 0, 1]])
    meet = la.intersect(F, U, W)
    assert meet.shape[0] == 1 and la.in_span(F, meet, F.array([0, 1, 0]))
    Q = la.Quotient(F, U, 3)
    assert Q.dim == 1
    assert not Q(F.array([1, 1, 0])).any()
