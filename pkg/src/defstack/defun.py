"""Deformation problems as finite groupoids over Artin algebras, and the checks run on them.

A problem describes each fiber over A as a finite set of objects acted on by a
finite group of morphisms lying over the identity of A.  Isomorphism classes
are orbits; the canonical representative of a class is its least element.
"""
from __future__ import annotations

import contextlib
import contextvars
import itertools
import math
import os
from dataclasses import dataclass, field as dc_field
from typing import Any, Callable, Sequence

import numpy as np

from . import linalg as la
from .artin import (
    AlgebraHom,
    Extension,
    FiberProduct,
    LocalAlgebra,
    classify_extension,
    factor_into_tiny,
    fiber_product,
    hom_from_images,
    homomorphisms,
    k_of_V,
    m_lambda,
    residue_field,
    residue_map,
    sigma,
)
from .errors import (
    EnumerationBudgetExceeded,
    FunctorialityViolation,
    GluingUnavailable,
    NotADeformationFunctor,
    RestrictionMismatch,
    TruncationTooShallow,
)
from .field import Field

# budgets ----------------------------------------------------------------------------------


@dataclass(frozen=True)
class Budget:
    objects: int = 4096
    dim: int = 6


_budget: contextvars.ContextVar[Budget | None] = contextvars.ContextVar("defstack_budget", default=None)


def current_budget() -> Budget:
    b = _budget.get()
    if b is not None:
        return b
    env = os.environ.get("DEFSTACK_BUDGET_OBJECTS")
    return Budget(objects=int(env)) if env else Budget()


@contextlib.contextmanager
def budget_scope(objects: int | None = None, dim: int | None = None):
    base = current_budget()
    token = _budget.set(Budget(objects or base.objects, dim or base.dim))
    try:
        yield
    finally:
        _budget.reset(token)


def check_dim(A: LocalAlgebra) -> None:
    b = current_budget()
    if A.dim - 1 > b.dim:
        raise EnumerationBudgetExceeded(
            f"dim m_A = {A.dim - 1} exceeds the budget of {b.dim}", dim=A.dim - 1, budget=b.dim
        )


def check_count(count: int, what: str) -> None:
    b = current_budget()
    if count > b.objects:
        raise EnumerationBudgetExceeded(f"{count} {what} exceed the budget of {b.objects}", count=count, budget=b.objects)


# fibers -----------------------------------------------------------------------------------


class Fiber:
    """Objects and morphisms over one algebra, with orbit bookkeeping."""

    def __init__(self, problem: "DeformationProblem", A: LocalAlgebra):
        check_dim(A)
        self.problem = problem
        self.algebra = A
        self.objects = problem.enumerate_objects(A)
        check_count(len(self.objects), "objects")
        self.group = problem.enumerate_group(A)
        check_count(len(self.group), "morphisms")
        self.canon: dict = {}
        for obj in self.objects:
            if obj in self.canon:
                continue
            orbit = {problem.act(A, g, obj) for g in self.group}
            rep = min(orbit)
            for o in orbit:
                self.canon[o] = rep
        self.reps = sorted(set(self.canon.values()))

    def __len__(self):
        return len(self.reps)

    def iso(self, x, y):
        """Some g with g·x = y, or None."""
        if self.canon.get(x) != self.canon.get(y):
            return None
        A = self.algebra
        for g in self.group:
            if self.problem.act(A, g, x) == y:
                return g
        return None  # pragma: no cover - orbits guarantee a hit

    def morphisms(self, x, y) -> list:
        A = self.algebra
        return [g for g in self.group if self.problem.act(A, g, x) == y]

    def stabilizer(self, x) -> list:
        return self.morphisms(x, x)


class DeformationProblem:
    """Interface for problems.  Objects and morphisms must be hashable and sortable."""

    name = "problem"

    def __init__(self, field: Field):
        self.field = field
        self._fibers: dict[LocalAlgebra, Fiber] = {}
        self._sections: dict[int, tuple[AlgebraHom, np.ndarray]] = {}
        self.budget_used = 0

    # to be supplied by subclasses
    def enumerate_objects(self, A: LocalAlgebra) -> list:
        raise NotImplementedError

    def enumerate_group(self, A: LocalAlgebra) -> list:
        raise NotImplementedError

    def act(self, A: LocalAlgebra, g, obj):
        raise NotImplementedError

    def compose(self, A: LocalAlgebra, g, h):
        """g∘h (apply h first)."""
        raise NotImplementedError

    def identity(self, A: LocalAlgebra):
        raise NotImplementedError

    def inverse(self, A: LocalAlgebra, g):
        raise NotImplementedError

    def base_object(self, A: LocalAlgebra):
        """The trivial object ζ_A induced from the unique object over k."""
        raise NotImplementedError

    def pushforward(self, f: AlgebraHom, obj):
        raise NotImplementedError

    def push_morphism(self, f: AlgebraHom, g):
        raise NotImplementedError

    def lift_morphism(self, f: AlgebraHom, g):
        """A morphism over f.source pushing forward to ``g`` (f surjective)."""
        raise GluingUnavailable(f"{self.name} cannot lift morphisms")

    def glue(self, fp: FiberProduct, obj1, obj2):
        raise GluingUnavailable(f"{self.name} does not implement descent")

    def glue_morphism(self, fp: FiberProduct, g1, g2):
        raise GluingUnavailable(f"{self.name} does not implement descent")

    def describe(self, A: LocalAlgebra, obj) -> Any:
        return repr(obj)

    def params(self) -> dict:
        return {"kind": self.name}

    # shared machinery
    def fiber(self, A: LocalAlgebra) -> Fiber:
        fib = self._fibers.get(A)
        if fib is None:
            fib = Fiber(self, A)
            self._fibers[A] = fib
            self.budget_used = max(self.budget_used, len(fib.objects))
        return fib

    def classes(self, A: LocalAlgebra) -> list:
        return self.fiber(A).reps

    def class_of(self, A: LocalAlgebra, obj):
        return self.fiber(A).canon[obj]


class EntrywiseProblem(DeformationProblem):
    """Objects and morphisms are tuples of algebra elements; ring maps act entrywise."""

    def pushforward(self, f: AlgebraHom, obj):
        return tuple(f(x) for x in obj)

    def push_morphism(self, f: AlgebraHom, g):
        return tuple(f(x) for x in g)

    def _section(self, f: AlgebraHom) -> np.ndarray:
        hit = self._sections.get(id(f))
        if hit is None or hit[0] is not f:
            hit = (f, f.section())
            self._sections[id(f)] = hit
        return hit[1]

    def lift_element(self, f: AlgebraHom, a):
        F = f.source.field
        s = self._section(f)
        return f.source.from_vector(F.reduce(s @ F.array(list(a))))

    def lift_morphism(self, f: AlgebraHom, g):
        return tuple(self.lift_element(f, x) for x in g)

    def glue(self, fp: FiberProduct, obj1, obj2):
        p1, p2 = fp.base_first, fp.base_second
        A = p1.target
        x1, x2 = self.pushforward(p1, obj1), self.pushforward(p2, obj2)
        g = self.fiber(A).iso(x1, x2)
        if g is None:
            raise RestrictionMismatch("the two objects do not agree over the base")
        if p2.is_surjective():
            obj2 = self.act(p2.source, self.lift_morphism(p2, self.inverse(A, g)), obj2)
        else:
            obj1 = self.act(p1.source, self.lift_morphism(p1, g), obj1)
        return tuple(fp.pair(a, b) for a, b in zip(obj1, obj2))

    def glue_morphism(self, fp: FiberProduct, g1, g2):
        if self.push_morphism(fp.base_first, g1) != self.push_morphism(fp.base_second, g2):
            raise RestrictionMismatch("morphisms disagree over the base")
        return tuple(fp.pair(a, b) for a, b in zip(g1, g2))


class TaggedScalarProblem(DeformationProblem):
    """Broken fixture: F(k) = {0}, F(A) = k otherwise, pushforward keeps the tag.

    Over k[e] x_k k[e] it has |k| classes while the product side has |k|^2, so (H1) fails.
    """

    name = "tagged-scalar"

    def enumerate_objects(self, A):
        return [(0,)] if A.dim == 1 else [(c,) for c in self.field.elements()]

    def enumerate_group(self, A):
        return [()]

    def act(self, A, g, obj):
        return obj

    def compose(self, A, g, h):
        return ()

    def identity(self, A):
        return ()

    def inverse(self, A, g):
        return ()

    def base_object(self, A):
        return (0,)

    def pushforward(self, f, obj):
        return (0,) if f.target.dim == 1 else obj

    def push_morphism(self, f, g):
        return ()


# map (1) and the Schlessinger conditions ---------------------------------------------------


@dataclass
class CheckResult:
    check: str
    result: bool
    witness: Any = None
    budget_used: int = 0
    input: dict = dc_field(default_factory=dict)

    def __bool__(self):
        return self.result

    def to_json(self) -> dict:
        out = {"check": self.check, "input": self.input, "result": self.result, "budget_used": self.budget_used}
        if self.witness is not None:
            out["witness"] = self.witness
        return out


@dataclass
class MapOne:
    """Map (1) on isomorphism classes: F(A′ ×_A A″) → F(A′) ×_{F(A)} F(A″)."""

    source_classes: int
    target_pairs: list
    hits: dict

    @property
    def surjective(self) -> bool:
        return all(self.hits.get(t, 0) > 0 for t in self.target_pairs)

    @property
    def bijective(self) -> bool:
        return self.surjective and all(self.hits.get(t, 0) == 1 for t in self.target_pairs)

    def unhit(self):
        return next((t for t in self.target_pairs if not self.hits.get(t)), None)

    def doubled(self):
        return next((t for t in self.target_pairs if self.hits.get(t, 0) > 1), None)


def map_one(problem: DeformationProblem, p1: AlgebraHom, p2: AlgebraHom) -> MapOne:
    fp = fiber_product(p1, p2)
    A1, A2, A = p1.source, p2.source, p1.target
    f1, f2, fA, fB = problem.fiber(A1), problem.fiber(A2), problem.fiber(A), problem.fiber(fp.algebra)
    hits: dict = {}
    for rep in fB.reps:
        key = (f1.canon[problem.pushforward(fp.first, rep)], f2.canon[problem.pushforward(fp.second, rep)])
        hits[key] = hits.get(key, 0) + 1
    pairs = [
        (c1, c2)
        for c1 in f1.reps
        for c2 in f2.reps
        if fA.canon[problem.pushforward(p1, c1)] == fA.canon[problem.pushforward(p2, c2)]
    ]
    return MapOne(len(fB.reps), pairs, hits)


def _require_tiny(p: AlgebraHom) -> Extension:
    ext = classify_extension(p)
    if not ext.tiny:
        raise ValueError("the second map must be a tiny extension")
    return ext


def _witness(problem, p1, p2, pair):
    return {"first": problem.describe(p1.source, pair[0]), "second": problem.describe(p2.source, pair[1])}


def check_h1(problem: DeformationProblem, p1: AlgebraHom, p2: AlgebraHom) -> CheckResult:
    _require_tiny(p2)
    m = map_one(problem, p1, p2)
    bad = m.unhit()
    return CheckResult(
        "H1", bad is None, None if bad is None else _witness(problem, p1, p2, bad), problem.budget_used,
        {"problem": problem.params(), "dims": [p1.source.dim, p2.source.dim, p1.target.dim]},
    )


def default_h2_algebras(F: Field) -> list[LocalAlgebra]:
    from .catalog import standard_algebras

    return [A for A in standard_algebras(F) if A.dim <= 4]


def check_h2(problem: DeformationProblem, algebras: Sequence[LocalAlgebra] | None = None) -> CheckResult:
    """Bijectivity of F(A′ ×_k k[e]) → F(A′) × F(k[e]) for every A′ supplied."""
    F = problem.field
    eps = residue_map(k_of_V(F, 1))
    for A1 in algebras if algebras is not None else default_h2_algebras(F):
        p1 = residue_map(A1)
        m = map_one(problem, p1, eps)
        if not m.bijective:
            bad = m.unhit() or m.doubled()
            return CheckResult("H2", False, _witness(problem, p1, eps, bad) | {"A'": repr(A1)},
                               problem.budget_used, {"problem": problem.params()})
    return CheckResult("H2", True, None, problem.budget_used, {"problem": problem.params()})


def check_h4(problem: DeformationProblem, p: AlgebraHom) -> CheckResult:
    _require_tiny(p)
    m = map_one(problem, p, p)
    bad = m.unhit() or m.doubled()
    return CheckResult(
        "H4", m.bijective, None if bad is None else _witness(problem, p, p, bad), problem.budget_used,
        {"problem": problem.params(), "dims": [p.source.dim, p.target.dim]},
    )


def h4_via_aut(problem: DeformationProblem, p: AlgebraHom) -> CheckResult:
    """Every automorphism over A extends along the tiny extension A′ → A."""
    _require_tiny(p)
    A1, A = p.source, p.target
    f1, fA = problem.fiber(A1), problem.fiber(A)
    for eta in f1.reps:
        base = problem.pushforward(p, eta)
        image = {problem.push_morphism(p, g) for g in f1.stabilizer(eta)}
        full = fA.stabilizer(base)
        if len(image) != len(full):
            missing = next(g for g in full if g not in image)
            return CheckResult("H4-aut", False, {"object": problem.describe(A1, eta), "automorphism": repr(missing)},
                               problem.budget_used, {"problem": problem.params()})
    return CheckResult("H4-aut", True, None, problem.budget_used, {"problem": problem.params()})


# gluing -----------------------------------------------------------------------------------


@dataclass
class AstProduct:
    algebra: LocalAlgebra
    object: Any
    projections: list  # maps from the glued algebra to each A′_i


def ast_product(problem: DeformationProblem, objects: Sequence, maps: Sequence[tuple[AlgebraHom, AlgebraHom]]) -> AstProduct:
    """Glue η′_1..η′_n along A′_i → A_i ← A′_{i+1} (``maps[i] = (q_i, r_i)``)."""
    if len(maps) != len(objects) - 1:
        raise ValueError("need one pair of maps per consecutive pair of objects")
    obj = objects[0]
    B = maps[0][0].source if maps else None
    if B is None:
        raise ValueError("at least two objects are required")
    projections = [None]
    last = None  # map from the current glued algebra to A′_i
    from .artin import identity as _id

    last = _id(B)
    projections[0] = last
    for (q, r), nxt in zip(maps, objects[1:]):
        fp = fiber_product(q @ last, r)
        obj = problem.glue(fp, obj, nxt)
        projections = [pr @ fp.first for pr in projections] + [fp.second]
        last = fp.second
        B = fp.algebra
    return AstProduct(B, obj, projections)


# vector structures ------------------------------------------------------------------------


class _Additive:
    """Shared enumeration of a finite F_p-vector space given add / scale / zero."""

    def _build_linear(self, F: Field, elements: list, add, scale, zero):
        p = F.p
        self.elements = elements
        self.zero = zero
        self.add_table = {(a, b): add(a, b) for a in elements for b in elements}
        self.scalar_table = {(c, a): scale(c, a) for c in range(p) for a in elements}
        self.axioms = self._axioms(elements, p)
        basis, coords = [], {zero: (0,) * 0}
        span = {zero: ()}
        for e in elements:
            if e in span:
                continue
            basis.append(e)
            new = {}
            for s, vec in span.items():
                for c in range(p):
                    new[self.add_table[(s, self.scalar_table[(c, e)])]] = vec + (c,)
            span = new
        self.basis = basis
        self.dim = len(basis)
        self.coords = span
        if len(span) != len(elements):
            self.axioms["spanned"] = False

    def _axioms(self, E, p) -> dict:
        A, S, z = self.add_table, self.scalar_table, self.zero
        checks = {
            "closed": all(v in set(E) for v in A.values()),
            "commutative": all(A[(a, b)] == A[(b, a)] for a in E for b in E),
            "identity": all(A[(z, a)] == a for a in E),
            "inverses": all(any(A[(a, b)] == z for b in E) for a in E),
            "associative": all(A[(A[(a, b)], c)] == A[(a, A[(b, c)])] for a in E for b in E for c in E),
            "unit_scalar": all(S[(1 % p, a)] == a for a in E),
            "scalar_distributes": all(S[(c, A[(a, b)])] == A[(S[(c, a)], S[(c, b)])]
                                      for c in range(p) for a in E for b in E),
            "field_distributes": all(S[((c + d) % p, a)] == A[(S[(c, a)], S[(d, a)])]
                                     for c in range(p) for d in range(p) for a in E),
            "scalar_associative": all(S[((c * d) % p, a)] == S[(c, S[(d, a)])]
                                      for c in range(p) for d in range(p) for a in E),
        }
        return checks

    @property
    def is_vector_space(self) -> bool:
        return all(self.axioms.values())

    def sum(self, items) -> Any:
        acc = self.zero
        for x in items:
            acc = self.add_table[(acc, x)]
        return acc


def _require_finite(F: Field):
    if not F.is_finite:
        raise ValueError("enumeration needs a finite base field")


def _h2_gate(problem: DeformationProblem, V: LocalAlgebra):
    F = problem.field
    gate = check_h2(problem, [residue_field(F), k_of_V(F, 1)])
    pi = residue_map(V)
    m = map_one(problem, pi, pi)
    if not gate or not m.bijective:
        raise NotADeformationFunctor(f"{problem.name} fails (H2); tangent spaces are not defined")


class TangentSpace(_Additive):
    """T_I: isomorphism classes over k[I] with σ-addition and m_λ scalars."""

    def __init__(self, problem: DeformationProblem, d: int, *, gate: bool = True):
        F = problem.field
        _require_finite(F)
        self.problem = problem
        self.kernel_dim = d
        self.algebra = V = k_of_V(F, d)
        if gate:
            _h2_gate(problem, V)
        fib = problem.fiber(V)
        self._fp, self._sigma = sigma(V, V.m_powers[0])
        self._scalars = {c: m_lambda(F, c, d) for c in F.elements()}

        def add(a, b):
            glued = problem.glue(self._fp, a, b)
            return fib.canon[problem.pushforward(self._sigma, glued)]

        def scale(c, a):
            return fib.canon[problem.pushforward(self._scalars[c], a)]

        self._build_linear(F, list(fib.reps), add, scale, fib.canon[problem.base_object(V)])

    def to_json(self) -> dict:
        return {"kernel_dim": self.kernel_dim, "size": len(self.elements), "dim": self.dim,
                "vector_space": self.is_vector_space, "axioms": self.axioms}


def tangent_space(problem: DeformationProblem, d: int = 1) -> TangentSpace:
    return TangentSpace(problem, d)


class AutGroup(_Additive):
    """A_I = Aut(ζ_{k[I]}) with both composition and σ-addition."""

    def __init__(self, problem: DeformationProblem, d: int, *, gate: bool = True):
        F = problem.field
        _require_finite(F)
        self.problem = problem
        self.kernel_dim = d
        self.algebra = V = k_of_V(F, d)
        if gate:
            _h2_gate(problem, V)
        fib = problem.fiber(V)
        self.object = problem.base_object(V)
        elems = sorted(fib.stabilizer(self.object))
        self.composition = {(a, b): problem.compose(V, a, b) for a in elems for b in elems}
        fp, sig = sigma(V, V.m_powers[0])
        scalars = {c: m_lambda(F, c, d) for c in F.elements()}

        def add(a, b):
            return problem.push_morphism(sig, problem.glue_morphism(fp, a, b))

        def scale(c, a):
            return problem.push_morphism(scalars[c], a)

        self._build_linear(F, elems, add, scale, problem.identity(V))
        self.composition_is_addition = all(self.composition[k] == self.add_table[k] for k in self.composition)
        self.abelian = all(self.composition[(a, b)] == self.composition[(b, a)] for a in elems for b in elems)

    def to_json(self) -> dict:
        return {"kernel_dim": self.kernel_dim, "size": len(self.elements), "dim": self.dim,
                "vector_space": self.is_vector_space, "abelian": self.abelian,
                "composition_is_addition": self.composition_is_addition}


def aut_space(problem: DeformationProblem, d: int = 1) -> AutGroup:
    return AutGroup(problem, d)


@dataclass
class TensorReport:
    d: int
    tangent_sizes: tuple
    aut_sizes: tuple
    tangent_bijective: bool
    tangent_linear: bool
    aut_bijective: bool
    aut_linear: bool

    @property
    def ok(self) -> bool:
        return self.tangent_bijective and self.tangent_linear and self.aut_bijective and self.aut_linear

    def __bool__(self):
        return self.ok

    def to_json(self) -> dict:
        return {"d": self.d, "T": list(self.tangent_sizes), "A": list(self.aut_sizes), "ok": self.ok,
                "tangent_bijective": self.tangent_bijective, "tangent_linear": self.tangent_linear,
                "aut_bijective": self.aut_bijective, "aut_linear": self.aut_linear}


def tensor_decomposition_check(problem: DeformationProblem, d: int) -> TensorReport:
    """T ⊗ V → T_V and A ⊗ V → A_V built from the maps φ_{v_i}: k[e] → k[V], e ↦ v_i."""
    F = problem.field
    T1, TV = TangentSpace(problem, 1), TangentSpace(problem, d)
    A1, AV = AutGroup(problem, 1), AutGroup(problem, d)
    eps, V = T1.algebra, TV.algebra
    phis = [hom_from_images(eps, V, {"e": V.labels[i]}) for i in range(1, d + 1)] if d > 1 else [
        hom_from_images(eps, V, {"e": "e"})]
    fibV = problem.fiber(V)

    def phi_T(ts):
        return TV.sum(fibV.canon[problem.pushforward(f, t)] for f, t in zip(phis, ts))

    def phi_A(as_):
        return AV.sum(problem.push_morphism(f, a) for f, a in zip(phis, as_))

    def check(space_src, space_dst, fn):
        tuples = list(itertools.product(space_src.elements, repeat=d))
        image = {t: fn(t) for t in tuples}
        bij = len(set(image.values())) == len(tuples) == len(space_dst.elements)
        lin = all(
            image[tuple(space_src.add_table[(x, y)] for x, y in zip(s, t))] == space_dst.add_table[(image[s], image[t])]
            for s in tuples for t in tuples
        ) and all(
            image[tuple(space_src.scalar_table[(c, x)] for x in s)] == space_dst.scalar_table[(c, image[s])]
            for c in F.elements() for s in tuples
        )
        return bij, lin

    tb, tl = check(T1, TV, phi_T)
    ab, al = check(A1, AV, phi_A)
    return TensorReport(d, (len(T1.elements), len(TV.elements)), (len(A1.elements), len(AV.elements)), tb, tl, ab, al)


# lifting ----------------------------------------------------------------------------------


def lift_exists(problem: DeformationProblem, eta, p: AlgebraHom) -> bool:
    """Brute force: is there η′ over A′ with p_*η′ ≅ η?"""
    fA, f1 = problem.fiber(p.target), problem.fiber(p.source)
    target = fA.canon[eta]
    return any(fA.canon[problem.pushforward(p, o)] == target for o in f1.reps)


@dataclass
class LiftTorsor:
    eta: Any
    extension: Extension
    elements: list
    tangent: TangentSpace
    action: dict
    free: bool
    transitive: bool
    compatible: bool  # (L + s) + t = L + (s + t)

    @property
    def is_pseudotorsor(self) -> bool:
        return not self.elements or (self.free and self.transitive and self.compatible)

    def to_json(self) -> dict:
        return {"size": len(self.elements), "tangent_size": len(self.tangent.elements),
                "free": self.free, "transitive": self.transitive, "pseudotorsor": self.is_pseudotorsor}


def _orbit_canon(problem, A, objs, group):
    canon = {}
    for o in objs:
        if o in canon:
            continue
        orbit = {problem.act(A, g, o) for g in group}
        rep = min(orbit)
        for x in orbit:
            canon[x] = rep
    return canon


def _pseudotorsor_axioms(elements, actors, act, add, zero):
    free = all(act(L, t) != L for L in elements for t in actors if t != zero)
    transitive = all({act(L, t) for t in actors} == set(elements) for L in elements)
    compatible = all(act(act(L, s), t) == act(L, add(s, t)) for L in elements for s in actors for t in actors)
    return free, transitive, compatible


def lift_torsor(problem: DeformationProblem, eta, ext: Extension | AlgebraHom) -> LiftTorsor:
    """Lifts (η′, p_*η′ = η) modulo isomorphisms restricting to the identity, acted on by T_I."""
    ext = ext if isinstance(ext, Extension) else classify_extension(ext)
    if not ext.small:
        raise ValueError("lift torsors need a small extension")
    p = ext.map
    A1, A = p.source, p.target
    f1, fA = problem.fiber(A1), problem.fiber(A)
    if eta not in fA.canon:
        raise ValueError("eta is not an object over the target")
    lifts = [o for o in f1.objects if problem.pushforward(p, o) == eta]
    ident = problem.identity(A)
    kernel_group = [g for g in f1.group if problem.push_morphism(p, g) == ident]
    canon = _orbit_canon(problem, A1, lifts, kernel_group)
    elements = sorted(set(canon.values()))
    d = ext.kernel_dim
    T = TangentSpace(problem, d, gate=False) if d else None
    if d == 0:
        return LiftTorsor(eta, ext, elements, T, {}, True, len(elements) <= 1, True)
    fp, sig = sigma(A1, ext.kernel_basis)

    def act(L, t):
        res = problem.pushforward(sig, problem.glue(fp, L, t))
        g = fA.iso(problem.pushforward(p, res), eta)
        res = problem.act(A1, problem.lift_morphism(p, g), res)
        return canon[res]

    action = {(L, t): act(L, t) for L in elements for t in T.elements}
    free, trans, comp = _pseudotorsor_axioms(
        elements, T.elements, lambda L, t: action[(L, t)], lambda s, t: T.add_table[(s, t)], T.zero)
    return LiftTorsor(eta, ext, elements, T, action, free, trans, comp)


@dataclass
class AutTorsor:
    elements: list
    group: AutGroup
    free: bool
    transitive: bool
    compatible: bool

    @property
    def is_pseudotorsor(self) -> bool:
        return not self.elements or (self.free and self.transitive and self.compatible)


def aut_torsor(problem: DeformationProblem, eta1, ext: Extension | AlgebraHom, phi) -> AutTorsor:
    """Automorphisms of η′ over A′ restricting to φ, acted on by A_I."""
    ext = ext if isinstance(ext, Extension) else classify_extension(ext)
    p = ext.map
    A1 = p.source
    f1 = problem.fiber(A1)
    elements = sorted(a for a in f1.stabilizer(eta1) if problem.push_morphism(p, a) == phi)
    G = AutGroup(problem, ext.kernel_dim, gate=False)
    fp, sig = sigma(A1, ext.kernel_basis)

    def act(alpha, a):
        return problem.push_morphism(sig, problem.glue_morphism(fp, alpha, a))

    free, trans, comp = _pseudotorsor_axioms(elements, G.elements, act, lambda s, t: G.add_table[(s, t)], G.zero)
    return AutTorsor(elements, G, free, trans, comp)


# prorepresentability and dimension bounds -----------------------------------------------------


@dataclass(frozen=True)
class ProRep:
    """R/m^e standing for a complete local ring of declared Krull dimension."""

    algebra: LocalAlgebra
    krull_dim: int
    truncation_level: int | None = None  # None: the algebra is R itself
    obstruction_dims: tuple = ()

    def to_json(self) -> dict:
        return {"algebra": self.algebra.to_json(), "krull_dim": self.krull_dim,
                "truncation_level": self.truncation_level, "obstruction_dims": list(self.obstruction_dims)}


def prorep_evaluate(R: ProRep, A: LocalAlgebra) -> list[AlgebraHom]:
    """h_R(A): local homomorphisms R → A."""
    if R.truncation_level is not None and R.truncation_level < A.nilpotency_degree:
        raise TruncationTooShallow(
            f"truncation level {R.truncation_level} is below the nilpotency degree {A.nilpotency_degree} of A",
            level=R.truncation_level, needed=A.nilpotency_degree,
        )
    _require_finite(A.field)
    return homomorphisms(R.algebra, A)


@dataclass
class DimBounds:
    tangent_dim: int
    obstruction_dims: tuple
    krull_dim: int
    lower: int
    middle: int
    upper: int
    holds: bool
    lci_equality: bool

    @property
    def status(self) -> str:
        return "OK" if self.holds else "VIOLATED"

    def to_json(self) -> dict:
        return {"tangent_dim": self.tangent_dim, "obstruction_dims": list(self.obstruction_dims),
                "krull_dim": self.krull_dim, "dim_Lambda": 0, "bounds": [self.lower, self.middle, self.upper],
                "status": self.status, "lci_equality": self.lci_equality}


def dim_bounds_report(tangent_dim: int, obstruction_dims: Sequence[int], R: ProRep | int) -> DimBounds:
    """dim T − Σ dim V_i ≤ dim R − dim Λ ≤ dim T, with dim Λ = 0."""
    krull = R.krull_dim if isinstance(R, ProRep) else int(R)
    lower = tangent_dim - sum(obstruction_dims)
    middle = krull
    holds = lower <= middle <= tangent_dim
    return DimBounds(tangent_dim, tuple(obstruction_dims), krull, lower, middle, tangent_dim, holds,
                     holds and lower == middle)


# obstruction theories ---------------------------------------------------------------------


@dataclass
class ObstructionTheory:
    """Obstruction spaces V_1..V_n and an evaluator ``(η, ext) -> (m, vector in V_m ⊗ I)``.

    Without an evaluator the brute-force indicator theory (n = 1, dim V_1 = 1) is used.
    """

    problem: DeformationProblem
    dims: tuple = (1,)
    evaluator: Callable | None = None

    @property
    def n(self) -> int:
        return len(self.dims)


def _indicator(theory: ObstructionTheory, eta, ext: Extension):
    d = ext.kernel_dim
    vec = [0] * (theory.dims[0] * d)
    if not lift_exists(theory.problem, eta, ext.map) and vec:
        vec[0] = 1
    return 1, tuple(vec)


def _evaluate(theory, eta, ext):
    if theory.evaluator is None:
        return _indicator(theory, eta, ext)
    m, vec = theory.evaluator(eta, ext)
    return int(m), tuple(theory.problem.field(x) for x in vec)


def obstruction_evaluate(theory: ObstructionTheory, eta, ext: Extension | AlgebraHom):
    """(index m, element of V_m ⊗ I); plug-ins are cross-checked, never trusted."""
    ext = ext if isinstance(ext, Extension) else classify_extension(ext)
    if not ext.small:
        raise ValueError("obstructions are evaluated on small extensions")
    m, vec = _evaluate(theory, eta, ext)
    if theory.evaluator is None:
        return m, vec
    vanishes = m == theory.n and not any(vec)
    if vanishes != lift_exists(theory.problem, eta, ext.map):
        raise FunctorialityViolation("plug-in obstruction disagrees with exhaustive lift search", index=m)
    if m < theory.n and not any(vec):
        raise FunctorialityViolation("obstruction below the top index must be nonzero", index=m)
    _check_functoriality(theory, eta, ext, m, vec)
    return m, vec


def _check_functoriality(theory, eta, ext: Extension, m, vec):
    """Compare with the quotient extensions C_j → A obtained from the tiny chain of A′ → A."""
    F = theory.problem.field
    p = ext.map
    chain = factor_into_tiny(p)
    to_C = None
    for link in chain[:-1]:
        to_C = link.map if to_C is None else link.map @ to_C
        C = to_C.target
        # the induced extension C → A and the image of I in it
        q = AlgebraHom(C, p.target, F.reduce(p.matrix @ to_C.section()), check=False)
        sub = classify_extension(q)
        m2, vec2 = _evaluate(theory, eta, sub)
        if m2 < m:
            raise FunctorialityViolation("index dropped along a map of small extensions", index=(m, m2))
        if m2 == m:
            dv = theory.dims[m - 1]
            img = F.reduce(ext.kernel_basis @ to_C.matrix.T)
            coords = la.Basis(F, sub.kernel_basis).coords(img) if sub.kernel_dim else F.zeros((ext.kernel_dim, 0))
            M = F.array(list(vec)).reshape(dv, ext.kernel_dim) if vec else F.zeros((dv, ext.kernel_dim))
            expected = F.reduce(M @ coords).reshape(-1).tolist()
            if tuple(F(x) for x in expected) != tuple(vec2):
                raise FunctorialityViolation("obstruction is not functorial in the extension", index=m)


def dimension_of(size: int, p: int) -> int:
    d = round(math.log(size, p)) if size > 1 else 0
    if p ** d != size:
        raise ValueError(f"{size} is not a power of {p}")
    return d
