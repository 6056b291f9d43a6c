import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from defstack import oracles, site
from defstack.errors import InvalidSpace, NotARefinement
from defstack.field import GF, QQ

F2, F3 = GF(2), GF(3)

# Betti numbers of the order complexes, degrees 0..3, frozen from the simplicial oracle.
BETTI = {
    "point": [1, 0, 0, 0],
    "vee": [1, 0, 0, 0],
    "circle": [1, 1, 0, 0],
    "hyper-cech": [1, 0, 0, 0],
    "wedge": [1, 2, 0, 0],
    "sphere": [1, 0, 1, 0],
    "S(sphere)": [1, 0, 0, 1],
}
SPACES = {X.name: X for X in site.standard_spaces()}


@pytest.mark.parametrize("name", sorted(BETTI))
def test_order_complex_oracle(name):
    X = SPACES[name]
    assert oracles.order_complex_cohomology(X.points, X.leq, 3) == BETTI[name]


@pytest.mark.parametrize("name", sorted(BETTI))
@pytest.mark.parametrize("F", [F2, F3])
def test_godement_cohomology_of_constant_sheaf(name, F):
    X = SPACES[name]
    assert site.godement_cohomology(site.constant_sheaf(X, F, 1), 3).dims == BETTI[name]


def test_space_basics():
    X = site.circle()
    for x in X.points:
        U = X.minimal_open(x)
        assert X.is_open(U) and all(X.leq(x, y) for y in U)
    assert X.whole in X.opens() and frozenset() in X.opens()
    with pytest.raises(InvalidSpace):
        site.FiniteSpace.from_json({"points": ["a", "b"], "order": [["a", "c"]]})
    # a preorder with a cycle is allowed; the two points share their minimal open
    Y = site.FiniteSpace(["a", "b"], [("a", "b"), ("b", "a")])
    assert Y.minimal_open("a") == Y.minimal_open("b") == Y.whole


def test_space_json_round_trip():
    for X in site.standard_spaces():
        Y = site.FiniteSpace.from_json(X.to_json())
        assert set(Y.points) == set(X.points) and set(Y.relations()) == set(X.relations())


@given(st.integers(0, 5000))
@settings(max_examples=25)
def test_flasque_and_cech_agree_on_random_sheaves(seed):
    rng = random.Random(seed)
    X = rng.choice([site.circle(), site.sphere(), site.wedge_of_circles()])
    S = site.random_sheaf(X, F2, rng)
    G, emb = site.godement_sheaf(S)
    assert site.godement_cohomology(G, 2).dims[1:] == [0, 0]
    assert site.hyper_h2(site.minimal_open_cover2(X), G).dim == 0
    # minimal opens are acyclic, so Cech on the minimal-points cover is exact through H^1
    opens = [X.minimal_open(x) for x in X.minimal_points(X.whole)]
    assert site.cech_h(S, opens, 2)[:2] == site.godement_cohomology(S, 2).dims[:2]


@pytest.mark.parametrize("name", sorted(BETTI))
def test_trivial_second_level_gives_cech(name):
    X = SPACES[name]
    S = site.constant_sheaf(X, F2, 1)
    opens = [X.minimal_open(x) for x in X.minimal_points(X.whole)]
    assert site.hyper_h2(site.trivial_cover2(X, opens), S).dim == site.cech_h(S, opens, 2)[2]


def test_skyscraper_and_extension_by_zero():
    X = site.circle()
    z = X.points[0]
    sky = site.skyscraper(X, F2, z)
    assert site.godement_cohomology(sky, 2).dims[0] == 1
    ext = site.extension_by_zero(X, F2, X.minimal_open(z))
    assert sum(ext.stalks.values()) == len(X.minimal_open(z))


def test_comparison_on_sphere():
    X = site.sphere()
    S = site.constant_sheaf(X, F2, 1)
    cover = site.minimal_open_cover2(X)
    C = site.Comparison(cover, S)
    assert C.hyper.dim == 1 and C.godement.dims[2] == 1
    assert int(np.linalg.matrix_rank(C.matrix().astype(float))) == 1
    assert C.check_well_defined(trials=3)


def test_refinement_map_is_compatible():
    X = site.sphere()
    S = site.constant_sheaf(X, F2, 1)
    opens = [X.minimal_open(x) for x in X.minimal_points(X.whole)]
    coarse = site.trivial_cover2(X, opens)
    fine = site.minimal_open_cover2(X)
    r = site.refine_cover2(coarse, fine, S)
    Cc, Cf = site.Comparison(coarse, S), site.Comparison(fine, S)
    lhs = Cf.matrix() @ r.matrix % 2
    assert np.array_equal(lhs, Cc.matrix() % 2)


def test_non_monotone_index_map_is_rejected():
    X = site.circle()
    opens = [X.minimal_open(x) for x in X.minimal_points(X.whole)]
    c = site.trivial_cover2(X, opens)
    with pytest.raises(NotARefinement):
        site.make_refinement(c, c, [1, 0], {})


def test_hyper_cech_presheaf_has_no_level1_gluing():
    P = site.hyper_cech_presheaf(F2)
    sh = site.sheafify(P)
    assert not sh.is_isomorphism()
    assert all(d == 1 for d in sh.sheaf.stalks.values())
    assert site.level1_gluings(P, F2.array([1])) == []


def test_level1_gluings_exist_for_a_sheaf():
    X = site.circle()
    P = site.constant_sheaf(X, F2, 1).as_presheaf()
    assert site.level1_gluings(P, F2.array([1]), limit=1)


def test_gluing_search_needs_finite_field():
    P = site.constant_sheaf(site.circle(), QQ, 1).as_presheaf()
    with pytest.raises(ValueError):
        site.level1_gluings(P, QQ.array([1]))
