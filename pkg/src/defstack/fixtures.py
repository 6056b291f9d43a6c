"""Named fixtures shared by the example suite, the command line and the tests."""
from __future__ import annotations

from .artin import Square, hom_from_images, k_of_V, monomial_quotient, residue_field, residue_map
from .defun import ProRep
from .field import GF, Field
from .probmod import ModuleProblem, QuotientProblem, base_algebra
from . import site

F2 = GF(2)


def pullback_square(F: Field = F2) -> Square:
    """A = k[x,t]/(x²,t²,xt) → k and → k[y,t]/(y²,t²) by x ↦ yt, t ↦ t."""
    A = monomial_quotient(F, ["x", "t"], ["x^2", "t^2", "x*t"])
    A2 = monomial_quotient(F, ["y", "t"], ["y^2", "t^2"])
    return Square(residue_map(A), hom_from_images(A, A2, {"x": "y*t", "t": "t"}))


def pullback_pushforward(F: Field = F2):
    """The map A → k[x]/(x²) killing t."""
    A = pullback_square(F).source
    return hom_from_images(A, monomial_quotient(F, ["x"], ["x^2"]), {"x": "x", "t": "0"})


def eps_square(F: Field = F2) -> Square:
    """The projections of k[x,y]/(x²,xy,y²) ≅ k[ε] ×_k k[ε]."""
    A = monomial_quotient(F, ["x", "y"], ["x^2", "x*y", "y^2"])
    a1 = monomial_quotient(F, ["x"], ["x^2"])
    a2 = monomial_quotient(F, ["y"], ["y^2"])
    return Square(hom_from_images(A, a1, {"x": "x", "y": "0"}), hom_from_images(A, a2, {"x": "0", "y": "y"}))


def eps_pushforward(F: Field = F2):
    A = eps_square(F).source
    return hom_from_images(A, monomial_quotient(F, ["x", "t"], ["x^2", "t^2"]), {"x": "x", "y": "x*t"})


def module_u2(F: Field = F2) -> ModuleProblem:
    """B = k[u]/(u²) acting on M = k by zero."""
    return ModuleProblem(base_algebra(monomial_quotient(F, ["u"], ["u^2"])), [[[0]]])


def module_uv(F: Field = F2) -> ModuleProblem:
    """B = k[u,v]/(u,v)² acting on M = k by zero."""
    B = base_algebra(monomial_quotient(F, ["u", "v"], ["u^2", "u*v", "v^2"]))
    return ModuleProblem(B, [[[0]], [[0]]])


def module_free(F: Field = F2, rank: int = 2) -> ModuleProblem:
    """B = k acting on k^rank: vector spaces, which deform trivially."""
    return ModuleProblem(base_algebra(residue_field(F)), [], rank)


def quotient_line(F: Field = F2) -> QuotientProblem:
    """B = k, E = k², quotient onto the first coordinate."""
    return QuotientProblem(base_algebra(residue_field(F)), [], [[1, 0]])


def oracle_fixtures(F: Field = F2) -> list[ModuleProblem]:
    """The three (B, M) pairs whose tangent and aut dimensions are checked against Ext and Hom oracles."""
    return [module_u2(F), module_uv(F), module_free(F, 2)]


def rank1(F: Field = F2) -> ModuleProblem:
    return ModuleProblem(base_algebra(residue_field(F)), [], 1)


def prorep_fixtures(F: Field = F2) -> list[tuple[str, object, object, ProRep, bool]]:
    """(name, space, pointwise problem, ProRep, bounds expected to hold)."""
    k = residue_field(F)
    x2 = monomial_quotient(F, ["x"], ["x^2"])
    return [
        ("circle rank 1", site.circle(), rank1(F), ProRep(x2, 1, 2), True),
        ("sphere rank 1", site.sphere(), rank1(F), ProRep(k, 0), True),
        ("point over k[u]/u^2", site.point_space(), module_u2(F), ProRep(k, 0), True),
        ("circle over k[u]/u^2", site.circle(), module_u2(F), ProRep(x2, 1, 2), True),
        ("circle rank 1, wrong Krull dimension", site.circle(), rank1(F), ProRep(k_of_V(F, 2), 2, 2), False),
    ]
