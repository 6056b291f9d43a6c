"""Small algebras, every tiny extension between them, and random generators for property suites."""
from __future__ import annotations

import itertools
import random
from dataclasses import dataclass

import numpy as np

from . import linalg as la
from .artin import (
    AlgebraHom,
    LocalAlgebra,
    Square,
    generators,
    hom_from_generator_images,
    homomorphisms,
    ideal_closure,
    make_algebra,
    monomial_quotient,
    quotient_algebra,
    residue_field,
    structure_map,
)
from .field import Field


def standard_algebras(F: Field) -> list[LocalAlgebra]:
    """Representatives of small local algebras: all monomial types up to dim 4 and a few of dim 5."""
    mq = monomial_quotient
    out = [
        residue_field(F),
        mq(F, ["e"], ["e^2"]),
        mq(F, ["x"], ["x^3"]),
        mq(F, ["x", "y"], ["x^2", "x*y", "y^2"]),
        mq(F, ["x"], ["x^4"]),
        mq(F, ["x", "y"], ["x^2", "y^2"]),
        mq(F, ["x", "y"], ["x^2", "x*y", "y^3"]),
        mq(F, ["x", "y", "z"], ["x^2", "y^2", "z^2", "x*y", "x*z", "y*z"]),
        _non_monomial_dim4(F),
        mq(F, ["x"], ["x^5"]),
        mq(F, ["x", "y"], ["x^3", "x*y", "y^2"]),
        mq(F, ["x", "t"], ["x^2", "t^2", "x*t"]),
    ]
    return out


def _non_monomial_dim4(F: Field) -> LocalAlgebra:
    """k[x,y]/(xy, x² − y²): basis 1, x, y, s = x² = y²."""
    n = 4
    T = [[[0] * n for _ in range(n)] for _ in range(n)]
    for j in range(n):
        T[0][j][j] = T[j][0][j] = 1
    T[1][1][3] = 1
    T[2][2][3] = 1
    return make_algebra(F, ["1", "x", "y", "x^2"], T, name="k[x,y]/(xy,x^2-y^2)")


def socle(A: LocalAlgebra) -> np.ndarray:
    """Basis rows of ann(m) inside m."""
    F = A.field
    blocks = [A.mult_matrix(A.basis(j)) for j in range(1, A.dim)]
    sel = F.zeros((1, A.dim))
    sel[0, 0] = F.one
    M = np.concatenate(blocks + [sel], axis=0)
    ker = la.nullspace(F, M)
    return la.row_basis(F, ker) if ker.shape[0] else ker


def lines(F: Field, rows: np.ndarray):
    """Every 1-dimensional subspace of span(rows), as a normalised spanning vector."""
    r = rows.shape[0]
    for coeffs in itertools.product(list(F.elements()), repeat=r):
        nz = [c for c in coeffs if c]
        if not nz or nz[0] != 1:
            continue
        yield F.reduce(F.array(list(coeffs)) @ rows)


def tiny_extensions(algebras, max_dim: int = 4) -> list[AlgebraHom]:
    """A′ → A′/L for every algebra of dim ≤ max_dim and every socle line L."""
    out = []
    for A1 in algebras:
        if A1.dim < 2 or A1.dim > max_dim:
            continue
        for v in lines(A1.field, socle(A1)):
            _, p = quotient_algebra(A1, v.reshape(1, -1))
            out.append(p)
    return out


# random generators ------------------------------------------------------------------------


def random_monomial_algebra(F: Field, rng: random.Random, max_dim: int = 5) -> LocalAlgebra:
    while True:
        nv = rng.choice([1, 1, 2, 2, 3])
        names = ["x", "y", "z"][:nv]
        rels = [f"{v}^{rng.randint(2, 4)}" for v in names]
        for a, b in itertools.combinations(names, 2):
            if rng.random() < 0.6:
                rels.append(f"{a}*{b}")
        A = monomial_quotient(F, names, rels)
        if A.dim <= max_dim:
            return A


def random_ideal(A: LocalAlgebra, rng: random.Random) -> np.ndarray:
    """A random monomial-generated ideal inside m (possibly zero)."""
    F = A.field
    picks = [i for i in range(1, A.dim) if rng.random() < 0.3]
    if not picks:
        return F.zeros((0, A.dim))
    return ideal_closure(A, F.eye(A.dim)[picks])


def random_automorphism(A: LocalAlgebra, rng: random.Random, tries: int = 20) -> AlgebraHom:
    """Randomly perturb each generator by an element of m² (plus a linear mix when it works)."""
    F = A.field
    gens = generators(A)
    m2 = A.m_powers[1] if len(A.m_powers) > 1 else F.zeros((0, A.dim))
    elems = list(F.elements())
    for _ in range(tries):
        images = []
        mix = rng.random() < 0.5
        for i, g in enumerate(gens):
            img = g
            if mix:
                for h in gens:
                    img = A.add(img, A.scale(rng.choice(elems), h)) if h != g else img
            for row in m2:
                img = A.add(img, A.scale(rng.choice(elems), A.from_vector(row)))
            images.append(img)
        h = hom_from_generator_images(A, A, gens, images)
        if h is not None and h.is_injective():
            return h
    return hom_from_generator_images(A, A, gens, gens)


@dataclass
class SurjectivePair:
    first: AlgebraHom  # B′ → B
    second: AlgebraHom  # B″ → B (surjective)


def random_surjective_pair(F: Field, rng: random.Random, max_dim: int = 5) -> SurjectivePair:
    """q′: B′ → B and surjective q″: B″ → B, both quotients of a random algebra R (then twisted)."""
    R = random_monomial_algebra(F, rng, max_dim)
    J1, J2 = random_ideal(R, rng), random_ideal(R, rng)
    B1, pi1 = quotient_algebra(R, J1)
    B2, pi2 = quotient_algebra(R, J2)
    J = np.concatenate([J1, J2], axis=0)
    B, pi = quotient_algebra(R, J)
    q1 = AlgebraHom(B1, B, F.reduce(pi.matrix @ pi1.section()))
    q2 = AlgebraHom(B2, B, F.reduce(pi.matrix @ pi2.section()))
    if B.dim > 1:
        q2 = random_automorphism(B, rng) @ q2
    if rng.random() < 0.5:
        q1 = q1 @ random_automorphism(B1, rng)
    if rng.random() < 0.15 and B.dim > 1:
        q1 = structure_map(B)  # k → B, not surjective
    return SurjectivePair(q1, q2)


def random_square(F: Field, rng: random.Random, max_dim: int = 4) -> Square:
    """A → A/J and a random local map A → A″ (often not surjective)."""
    A = random_monomial_algebra(F, rng, max_dim)
    _, p1 = quotient_algebra(A, random_ideal(A, rng))
    A2 = random_monomial_algebra(F, rng, max_dim)
    homs = homomorphisms(A, A2)
    return Square(p1, rng.choice(homs))

