"""Geometric deformation stacks on finite spaces.

An object of a local-system problem over an open U and an algebra A is a
functor from the poset U to the groupoid of a pointwise problem P: an object
of P over A at every point, and for every Hasse edge x → y of U an
isomorphism between them, such that all paths between two points compose to
the same map.  This is exactly descent data on the cover of U by minimal
opens.  Morphisms are families of pointwise morphisms of P.

From the per-open problems we assemble the automorphism sheaf 𝒜, the tangent
sheaf 𝒯, the global tangent space, the four-term exact sequence with its
connecting map, and the three-stage obstruction ladder.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field as dc_field
from typing import Any

import numpy as np

from . import amatrix as am
from . import linalg as la
from .artin import (
    AlgebraHom,
    Extension,
    LocalAlgebra,
    classify_extension,
    factor_into_tiny,
    k_of_V,
    monomial_quotient,
    residue_field,
    residue_map,
    sigma,
)
from .catalog import standard_algebras, tiny_extensions
from .defun import (
    AutGroup,
    CheckResult,
    DeformationProblem,
    DimBounds,
    EntrywiseProblem,
    Fiber,
    ProRep,
    TangentSpace,
    check_count,
    check_dim,
    check_h1,
    check_h2,
    dim_bounds_report,
    h4_via_aut,
)
from .errors import InvalidModule, RestrictionMismatch
from .probmod import ModuleProblem
from .site import (
    CechComplex,
    Comparison,
    FiniteSpace,
    Presheaf,
    Sheafification,
    VectorSheaf,
    constant_sheaf,
    godement_cohomology,
    minimal_open_cover2,
    sheafify,
    zero_sheaf,
)


# fibers computed by orbit search over generators --------------------------------------------


class _OrbitFiber(Fiber):
    """Fiber whose orbits are found by closing under generators of a product group.

    The full group is only enumerated when a caller asks for it (stabilizers).
    """

    def __init__(self, problem: "OpenProblem", A: LocalAlgebra):
        check_dim(A)
        self.problem = problem
        self.algebra = A
        self.objects = problem.objects(A)
        check_count(len(self.objects), "objects")
        gens = problem.group_generators(A)
        self._group = None
        self.canon: dict = {}
        self._path: dict = {}
        for obj in self.objects:
            if obj in self.canon:
                continue
            seen = _closure(problem, A, obj, gens)
            rep = min(seen)
            for o, g in seen.items():
                self.canon[o] = rep
                self._path[o] = (obj, g)
        self.reps = sorted(set(self.canon.values()))

    @property
    def group(self) -> list:
        if self._group is None:
            self._group = self.problem.enumerate_group(self.algebra)
            check_count(len(self._group), "morphisms")
        return self._group

    def iso(self, x, y):
        if x not in self.canon or self.canon.get(x) != self.canon.get(y):
            return None
        (r1, g1), (r2, g2) = self._path[x], self._path[y]
        A = self.algebra
        return self.problem.compose(A, g2, self.problem.inverse(A, g1))


def _closure(problem, A, obj, gens) -> dict:
    """Orbit of ``obj`` under the group generated by ``gens``, with a witness g·obj = o for each o."""
    seen = {obj: problem.identity(A)}
    frontier = [obj]
    while frontier:
        nxt = []
        for o in frontier:
            g0 = seen[o]
            for g in gens:
                o2 = problem.act(A, g, o)
                if o2 not in seen:
                    seen[o2] = problem.compose(A, g, g0)
                    nxt.append(o2)
        frontier = nxt
    return seen


class _PointOps:
    """Memoised groupoid operations of the pointwise problem (its groups are small)."""

    def __init__(self, P: DeformationProblem):
        self.P = P
        self._compose: dict = {}
        self._inverse: dict = {}
        self._act: dict = {}

    def compose(self, A, g, h):
        key = (A, g, h)
        hit = self._compose.get(key)
        if hit is None:
            hit = self._compose[key] = self.P.compose(A, g, h)
        return hit

    def inverse(self, A, g):
        key = (A, g)
        hit = self._inverse.get(key)
        if hit is None:
            hit = self._inverse[key] = self.P.inverse(A, g)
        return hit

    def act(self, A, g, o):
        key = (A, g, o)
        hit = self._act.get(key)
        if hit is None:
            hit = self._act[key] = self.P.act(A, g, o)
        return hit


# geometric problems -------------------------------------------------------------------------


class GeometricProblem:
    """A deformation problem for every open of a finite space, with restriction functors."""

    name = "geometric"

    def __init__(self, space: FiniteSpace, field):
        self.space = space
        self.field = field
        self._locals: dict = {}
        self._cache: dict = {}

    def local(self, U) -> DeformationProblem:
        raise NotImplementedError

    def restrict_object(self, U, V, obj):
        raise NotImplementedError

    def restrict_morphism(self, U, V, g):
        raise NotImplementedError

    def params(self) -> dict:
        return {"kind": self.name, "space": self.space.to_json()}


class LocalSystemProblem(GeometricProblem):
    """Locally constant sheaves whose stalks are objects of a pointwise problem P.

    ``twist`` assigns to some Hasse edges an invertible k-matrix commuting with
    the module action; the base object uses it as its transition on that edge
    (module problems only).  All other base transitions are identities.
    """

    name = "local-system"

    def __init__(self, space: FiniteSpace, pointwise: DeformationProblem, twist: dict | None = None,
                 obstruction: str = "auto"):
        super().__init__(space, pointwise.field)
        self.pointwise = P = pointwise
        self.ops = _PointOps(P)
        k = residue_field(self.field)
        self.obj_len = len(P.base_object(k))
        self.mor_len = len(P.identity(k))
        self.twist = {}
        hasse = set(space.hasse())
        for e, T in (twist or {}).items():
            e = tuple(e)
            if e not in hasse:
                raise InvalidModule("a twist must sit on a Hasse edge", edge=list(e))
            if not isinstance(P, ModuleProblem):
                raise InvalidModule("twists are only defined for module problems")
            M = self.field.array(T)
            r = P.rank
            if M.shape != (r, r) or la.rank(self.field, M) != r:
                raise InvalidModule("a twist must be an invertible matrix of the module rank", edge=list(e))
            for X in P.M[1:]:
                if np.any(self.field.reduce(M @ X - X @ M)):
                    raise InvalidModule("a twist must commute with the module action", edge=list(e))
            self.twist[e] = M
        if obstruction not in ("auto", "zero", "indicator"):
            raise ValueError("obstruction must be auto, zero or indicator")
        self.obstruction_mode = obstruction
        top = self.local(space.whole)
        if top.base_object(k) not in set(top.objects(k)):
            raise InvalidModule("the twists do not compose consistently around the space")

    def local(self, U) -> "OpenProblem":
        U = frozenset(U)
        P = self._locals.get(U)
        if P is None:
            P = OpenProblem(self, U)
            self._locals[U] = P
        return P

    def restrict_object(self, U, V, obj):
        return self.local(U).restrict_object(self.local(V), obj)

    def restrict_morphism(self, U, V, g):
        return self.local(U).restrict_morphism(self.local(V), g)

    def twist_element(self, A: LocalAlgebra, edge):
        T = self.twist.get(edge)
        if T is None:
            return self.pointwise.identity(A)
        return am.from_scalars(A, T.tolist())

    def params(self) -> dict:
        out = {"kind": self.name, "space": self.space.to_json(), "local_problem": self.pointwise.params()}
        if self.twist:
            out["twist"] = {f"{a},{b}": M.tolist() for (a, b), M in self.twist.items()}
        return out


class OpenProblem(EntrywiseProblem):
    """The problem 𝒮_(U, −) of a local-system problem on one open U.

    Objects are flat tuples: the pointwise objects (points in sorted order),
    then one pointwise morphism per Hasse edge inside U.  Morphisms are the
    concatenated pointwise morphisms.
    """

    name = "local-system-open"

    def __init__(self, gp: LocalSystemProblem, U: frozenset):
        super().__init__(gp.field)
        X = gp.space
        self.gp = gp
        self.open = U
        self.points = X.sort(U)
        self.index = {x: k for k, x in enumerate(self.points)}
        self.edges = [(x, y) for x, y in X.hasse() if x in U and y in U]
        self.succ = {x: [y for a, y in self.edges if a == x] for x in self.points}
        self.above = {x: [y for y in self.points if y != x and X.leq(x, y)] for x in self.points}
        self.order = sorted(self.points, key=lambda x: (len(self.above[x]), self.index[x]))
        self.Lo, self.Lm = gp.obj_len, gp.mor_len
        self._edge_start = len(self.points) * self.Lo
        self._objects: dict = {}
        self._kernel_gens: dict = {}

    def params(self):
        return {"kind": self.name, "open": list(self.points), "problem": self.gp.params()}

    # layout
    def split(self, obj) -> tuple[dict, dict]:
        Lo, Lm, s = self.Lo, self.Lm, self._edge_start
        pts = {x: tuple(obj[k * Lo:(k + 1) * Lo]) for k, x in enumerate(self.points)}
        eds = {e: tuple(obj[s + k * Lm:s + (k + 1) * Lm]) for k, e in enumerate(self.edges)}
        return pts, eds

    def join(self, pts: dict, eds: dict) -> tuple:
        return tuple(v for x in self.points for v in pts[x]) + tuple(v for e in self.edges for v in eds[e])

    def split_morphism(self, g) -> dict:
        Lm = self.Lm
        return {x: tuple(g[k * Lm:(k + 1) * Lm]) for k, x in enumerate(self.points)}

    def join_morphism(self, hs: dict) -> tuple:
        return tuple(v for x in self.points for v in hs[x])

    def restrict_object(self, other: "OpenProblem", obj):
        pts, eds = self.split(obj)
        return other.join({x: pts[x] for x in other.points}, {e: eds[e] for e in other.edges})

    def restrict_morphism(self, other: "OpenProblem", g):
        hs = self.split_morphism(g)
        return other.join_morphism({x: hs[x] for x in other.points})

    # enumeration
    def objects(self, A: LocalAlgebra) -> list:
        hit = self._objects.get(A)
        if hit is None:
            hit = self.enumerate_objects(A)
            self._objects[A] = hit
        return hit

    def _edge_elements(self, A, e, group):
        T = self.gp.twist_element(A, e)
        if e not in self.gp.twist:
            return group
        P = self.gp.pointwise
        return [self.gp.ops.compose(A, T, h) for h in group]

    def enumerate_objects(self, A: LocalAlgebra) -> list:
        P = self.gp.pointwise
        fib = P.fiber(A)
        objs = fib.objects
        group = fib.group
        cand: dict = {}

        def candidates(e, ox, oy):
            key = (e, ox, oy)
            hit = cand.get(key)
            if hit is None:
                hit = [g for g in self._edge_elements(A, e, group) if self.gp.ops.act(A, g, ox) == oy]
                cand[key] = hit
            return hit

        out: list = []
        pts: dict = {}
        eds: dict = {}
        phi: dict = {}
        ident = P.identity(A)
        order = self.order

        def commutes(x) -> bool:
            for z in self.above[x]:
                val = None
                for y in self.succ[x]:
                    if y != z and not self.gp.space.leq(y, z):
                        continue
                    rest = ident if y == z else phi[(y, z)]
                    comp = self.gp.ops.compose(A, rest, eds[(x, y)])
                    if val is None:
                        val = comp
                    elif comp != val:
                        return False
                phi[(x, z)] = val
            return True

        def place(k):
            if k == len(order):
                out.append(self.join(pts, eds))
                if len(out) % 1024 == 0:
                    check_count(len(out), "objects")
                return
            x = order[k]
            for o in objs:
                pts[x] = o
                lists = [candidates((x, y), o, pts[y]) for y in self.succ[x]]
                for choice in itertools.product(*lists):
                    for y, g in zip(self.succ[x], choice):
                        eds[(x, y)] = g
                    if commutes(x):
                        place(k + 1)

        place(0)
        return out

    def group_factors(self, A: LocalAlgebra) -> list:
        return list(self.gp.pointwise.fiber(A).group)

    def enumerate_group(self, A: LocalAlgebra) -> list:
        G = self.group_factors(A)
        check_count(len(G) ** len(self.points), "group elements")
        return [self.join_morphism(dict(zip(self.points, hs))) for hs in itertools.product(G, repeat=len(self.points))]

    def group_generators(self, A: LocalAlgebra, factor=None) -> list:
        """Elements that are the identity at all but one point; ``factor`` filters the local part."""
        P = self.gp.pointwise
        ident = P.identity(A)
        G = [g for g in self.group_factors(A) if g != ident and (factor is None or factor(g))]
        out = []
        for x in self.points:
            for g in G:
                hs = {y: ident for y in self.points}
                hs[x] = g
                out.append(self.join_morphism(hs))
        return out

    def kernel_generators(self, p: AlgebraHom) -> list:
        """Generators of ker(G_U(A′) → G_U(A))."""
        hit = self._kernel_gens.get(p)
        if hit is None:
            P = self.gp.pointwise
            target_id = P.identity(p.target)
            hit = self.group_generators(p.source, lambda g: P.push_morphism(p, g) == target_id)
            self._kernel_gens[p] = hit
        return hit

    def fiber(self, A: LocalAlgebra) -> Fiber:
        fib = self._fibers.get(A)
        if fib is None:
            fib = _OrbitFiber(self, A)
            self._fibers[A] = fib
            self.budget_used = max(self.budget_used, len(fib.objects))
        return fib

    # groupoid structure
    def act(self, A, h, obj):
        P = self.gp.pointwise
        hs = self.split_morphism(h)
        pts, eds = self.split(obj)
        inv = {x: self.gp.ops.inverse(A, hs[x]) for x in self.points}
        pts2 = {x: self.gp.ops.act(A, hs[x], pts[x]) for x in self.points}
        ops = self.gp.ops
        eds2 = {(x, y): ops.compose(A, hs[y], ops.compose(A, g, inv[x])) for (x, y), g in eds.items()}
        return self.join(pts2, eds2)

    def compose(self, A, g, h):
        P = self.gp.pointwise
        gs, hs = self.split_morphism(g), self.split_morphism(h)
        return self.join_morphism({x: self.gp.ops.compose(A, gs[x], hs[x]) for x in self.points})

    def identity(self, A):
        P = self.gp.pointwise
        return self.join_morphism({x: P.identity(A) for x in self.points})

    def inverse(self, A, g):
        P = self.gp.pointwise
        gs = self.split_morphism(g)
        return self.join_morphism({x: self.gp.ops.inverse(A, gs[x]) for x in self.points})

    def base_object(self, A):
        P = self.gp.pointwise
        o = P.base_object(A)
        return self.join({x: o for x in self.points}, {e: self.gp.twist_element(A, e) for e in self.edges})

    def lift_morphism(self, f, g):
        P = self.gp.pointwise
        gs = self.split_morphism(g)
        return self.join_morphism({x: tuple(P.lift_morphism(f, gs[x])) for x in self.points})

    def describe(self, A, obj):
        P = self.gp.pointwise
        pts, eds = self.split(obj)
        return {"points": {x: P.describe(A, o) for x, o in pts.items()},
                "edges": {f"{a}->{b}": [A.format(v) for v in g] for (a, b), g in eds.items()}}

    # lifts along an extension
    def kernel_iso(self, p: AlgebraHom, x, y):
        """Some g in ker(G_U(A′) → G_U(A)) with g·x = y, or None."""
        if x == y:
            return self.identity(p.source)
        seen = _closure(self, p.source, x, self.kernel_generators(p))
        return seen.get(y)

    def lift_classes(self, eta, p: AlgebraHom) -> tuple[list, dict]:
        """Lifts η′ with p_*η′ = η modulo ker(G_U(A′) → G_U(A)): (sorted reps, canon)."""
        lifts = [o for o in self.objects(p.source) if self.pushforward(p, o) == eta]
        gens = self.kernel_generators(p)
        canon: dict = {}
        for o in lifts:
            if o in canon:
                continue
            seen = _closure(self, p.source, o, gens)
            rep = min(seen)
            for q in seen:
                canon[q] = rep
        return sorted(set(canon.values())), canon


def local_system_problem(space: FiniteSpace, pointwise: DeformationProblem, twist: dict | None = None,
                         obstruction: str = "auto") -> LocalSystemProblem:
    return LocalSystemProblem(space, pointwise, twist, obstruction)


# the sheaves 𝒜 and 𝒯 -----------------------------------------------------------------------


@dataclass
class LocalSheaf:
    """Per-open spaces, the presheaf they form, and its sheafification."""

    kind: str  # "A" or "T"
    d: int
    spaces: dict  # open -> TangentSpace | AutGroup
    presheaf: Presheaf
    sheafification: Sheafification
    restrictions_linear: bool
    _inverse: dict = dc_field(default_factory=dict)

    @property
    def sheaf(self) -> VectorSheaf:
        return self.sheafification.sheaf

    @property
    def presheaf_is_sheaf(self) -> bool:
        return self.sheafification.is_isomorphism()

    def stalk_space(self, x):
        return self.spaces[self.sheaf.space.minimal_open(x)]

    def stalk_vector(self, x, element) -> np.ndarray:
        S = self.stalk_space(x)
        return self.sheaf.field.array(list(S.coords[element]))

    def stalk_element(self, x, vec):
        S = self.stalk_space(x)
        inv = self._inverse.get(x)
        if inv is None:
            inv = {tuple(int(c) for c in v): e for e, v in S.coords.items()}
            self._inverse[x] = inv
        return inv[tuple(int(c) for c in np.asarray(vec).reshape(-1).tolist())]

    def section_coords(self, U, family: dict) -> np.ndarray:
        """Coordinates in sections(U) of the compatible family {x: stalk vector}."""
        SU = self.sheaf.sections(U)
        F = self.sheaf.field
        amb = np.concatenate([F.array(list(family[x])) for x in SU.points]) if SU.points else F.zeros(0)
        if SU.dim == 0:
            return F.zeros(0)
        if not SU.contains(amb):
            raise RestrictionMismatch("stalk family is not a section")
        return SU.coords(amb)

    def stalks_of(self, U, coords) -> dict:
        SU = self.sheaf.sections(U)
        F = self.sheaf.field
        amb = SU.ambient(F.array(list(coords))) if SU.dim else F.zeros(SU.ambient_dim)
        return {x: SU.stalk(amb, x) for x in SU.points}


def _per_open_space(problem: LocalSystemProblem, kind: str, U, d: int):
    key = (kind, U, d)
    hit = problem._cache.get(key)
    if hit is None:
        P = problem.local(U)
        hit = AutGroup(P, d, gate=False) if kind == "A" else TangentSpace(P, d, gate=False)
        problem._cache[key] = hit
    return hit


def _restriction_matrix(problem, kind, SU, SV, U, V, d):
    F = problem.field
    cols = []
    PU, PV = problem.local(U), problem.local(V)
    kI = SU.algebra

    def image(e):
        if kind == "A":
            return PU.restrict_morphism(PV, e)
        return PV.fiber(kI).canon[PU.restrict_object(PV, e)]

    for b in SU.basis:
        cols.append(list(SV.coords[image(b)]))
    M = F.array(cols).T.copy() if cols else F.zeros((SV.dim, 0))
    M = M.reshape(SV.dim, SU.dim)
    linear = all(
        tuple(int(c) for c in F.reduce(M @ F.array(list(SU.coords[e])))) == tuple(SV.coords[image(e)])
        for e in SU.elements
    )
    return M, linear


def _local_sheaf(problem: LocalSystemProblem, kind: str, d: int) -> LocalSheaf:
    key = ("sheaf", kind, d)
    hit = problem._cache.get(key)
    if hit is not None:
        return hit
    X, F = problem.space, problem.field
    opens = [U for U in X.opens() if U]
    spaces = {U: _per_open_space(problem, kind, U, d) for U in opens}
    dims = {U: spaces[U].dim for U in opens}
    res = {}
    linear = True
    for U in opens:
        for V in opens:
            if V <= U and V != U:
                M, ok = _restriction_matrix(problem, kind, spaces[U], spaces[V], U, V, d)
                res[(U, V)] = M
                linear = linear and ok
    P = Presheaf(X, F, dims, res, name=f"{kind}_{d}")
    out = LocalSheaf(kind, d, spaces, P, sheafify(P), linear)
    problem._cache[key] = out
    return out


def sheaf_A(problem: LocalSystemProblem, d: int = 1) -> LocalSheaf:
    """𝒜_I: U ↦ A_{𝒮(U), I}; this presheaf is a sheaf, which is asserted."""
    out = _local_sheaf(problem, "A", d)
    if not out.presheaf_is_sheaf:
        raise AssertionError("the automorphism presheaf fails the sheaf axiom")
    return out


def sheaf_T(problem: LocalSystemProblem, d: int = 1) -> LocalSheaf:
    """𝒯_I: the sheafification of U ↦ T_{𝒮(U), I}."""
    return _local_sheaf(problem, "T", d)


def global_tangent(problem: LocalSystemProblem) -> TangentSpace:
    """T_𝒮 from the global objects over k[ε], i.e. descent data on the minimal-open cover."""
    key = ("global_tangent",)
    hit = problem._cache.get(key)
    if hit is None:
        hit = TangentSpace(problem.local(problem.space.whole), 1)
        problem._cache[key] = hit
    return hit


# local obstruction sheaf ----------------------------------------------------------------------


def small_extensions(F, max_dim: int = 3) -> list[Extension]:
    """Every tiny extension between catalog algebras of dim ≤ max_dim, plus k[V] → k for dim V ≥ 2."""
    algs = [A for A in standard_algebras(F) if A.dim <= max_dim]
    out = [classify_extension(p) for p in tiny_extensions(algs, max_dim)]
    for d in range(2, max_dim):
        out.append(classify_extension(residue_map(k_of_V(F, d))))
    return out


def locally_unobstructed(problem: LocalSystemProblem, max_dim: int = 3) -> bool:
    """Every object on every minimal open lifts along every small extension with dim A′ ≤ max_dim."""
    key = ("unobstructed", max_dim)
    hit = problem._cache.get(key)
    if hit is None:
        hit = True
        X = problem.space
        for ext in small_extensions(problem.field, max_dim):
            p = ext.map
            for x in X.points:
                P = problem.local(X.minimal_open(x))
                images = {P.pushforward(p, o) for o in P.objects(p.source)}
                canon = P.fiber(p.target).canon
                reached = {canon[o] for o in images}
                if any(r not in reached for r in P.fiber(p.target).reps):
                    hit = False
                    break
            if not hit:
                break
        problem._cache[key] = hit
    return hit


def obstruction_sheaf(problem: LocalSystemProblem) -> VectorSheaf:
    """Zero for locally unobstructed problems; otherwise the indicator theory (one line) sheafified."""
    mode = problem.obstruction_mode
    if mode == "auto":
        mode = "zero" if locally_unobstructed(problem) else "indicator"
    if mode == "zero":
        return zero_sheaf(problem.space, problem.field)
    return constant_sheaf(problem.space, problem.field, 1)


# gluing and the connecting map ----------------------------------------------------------------


class _Connecting:
    """Shared data for the Prop.-style connecting map into H²(X, 𝒜_I)."""

    def __init__(self, problem: LocalSystemProblem, d: int):
        X = problem.space
        self.problem = problem
        self.d = d
        self.A = sheaf_A(problem, d)
        self.points = X.minimal_points(X.whole)
        self.cover = minimal_open_cover2(X, self.points)
        self.comparison = Comparison(self.cover, self.A.sheaf)
        self.hyper = self.comparison.hyper
        self.H2 = self.comparison.godement
        self.kI = k_of_V(problem.field, d)

    def _to_kI(self, ext: Extension, P, g):
        """A pointwise morphism over A′ in the kernel, written over k[I]."""
        A1, kI = ext.source, self.kI
        F = A1.field
        idA1, idK = P.identity(A1), P.identity(kI)
        basis = la.Basis(F, ext.kernel_basis)
        out = []
        for e, u, v in zip(g, idA1, idK):
            diff = A1.sub(e, u)
            c = basis.coords(F.array(list(diff))) if any(diff) else F.zeros(self.d)
            out.append(kI.add(v, (F.zero,) + tuple(F(x) for x in np.asarray(c).reshape(-1).tolist())))
        return tuple(out)

    def cochain(self, ext: Extension, local_lifts: dict):
        """ρ′ in C²(𝒰, 𝒜_I) for local lifts ``{i: object over (U_i, A′)}`` whose classes agree on overlaps."""
        problem, cover, A = self.problem, self.cover, self.A
        P = problem.pointwise
        A1 = ext.source
        p = ext.map
        n = cover.size
        phi = {}
        for i0 in range(n):
            for i1 in range(i0 + 1, n):
                for j, V in enumerate(cover.J(i0, i1)):
                    PV = problem.local(V)
                    x = problem.restrict_object(cover.opens[i0], V, local_lifts[i0])
                    y = problem.restrict_object(cover.opens[i1], V, local_lifts[i1])
                    g = PV.kernel_iso(p, x, y)
                    if g is None:
                        raise RestrictionMismatch("local lifts are not isomorphic on a second-level piece",
                                                  pair=[i0, i1], piece=sorted(V))
                    phi[(i0, i1, j)] = (V, PV.split_morphism(g))

        def pointwise_phi(a, b, j, w):
            if a == b:
                return P.identity(A1)
            if a < b:
                return phi[(a, b, j)][1][w]
            return P.inverse(A1, phi[(b, a, j)][1][w])

        C2 = self.hyper.C2
        F = problem.field
        rho = F.zeros(C2.dim)
        for key in C2.keys():
            i0, i1, i2, j12, j02, j01 = key
            U = C2.opens[key]
            fam = {}
            auto = {}
            for w in U:
                g = P.compose(A1, pointwise_phi(i2, i0, j02, w),
                              P.compose(A1, pointwise_phi(i1, i2, j12, w), pointwise_phi(i0, i1, j01, w)))
                if P.push_morphism(p, g) != P.identity(p.target):
                    raise AssertionError("composite does not reduce to the identity")
                auto[w] = self._to_kI(ext, P, g)
            X = problem.space
            for w in U:
                Pw = problem.local(X.minimal_open(w))
                elem = Pw.join_morphism({v: auto[v] for v in Pw.points})
                fam[w] = A.stalk_vector(w, elem)
            o = C2.offsets[key]
            c = A.section_coords(U, fam)
            rho[o:o + c.shape[0]] = c
        return rho

    def image(self, ext: Extension, local_lifts: dict) -> np.ndarray:
        rho = self.cochain(ext, local_lifts)
        if not self.hyper.is_cocycle(rho):
            raise AssertionError("the connecting 2-cochain is not a cocycle")
        return self.comparison.image(rho)


def _connecting(problem: LocalSystemProblem, d: int) -> _Connecting:
    key = ("connecting", d)
    hit = problem._cache.get(key)
    if hit is None:
        hit = _Connecting(problem, d)
        problem._cache[key] = hit
    return hit


def _tuple(v) -> tuple:
    return tuple(int(x) for x in np.asarray(v).reshape(-1).tolist())


def _span_dim(F, vectors) -> int:
    rows = [list(v) for v in vectors if len(v)]
    return la.rank(F, F.array(rows)) if rows else 0


def _all_vectors(F, n: int):
    for c in itertools.product(range(F.p), repeat=n):
        yield F.array(list(c))


# the exact sequence -----------------------------------------------------------------------------


@dataclass
class ExactSequenceReport:
    dims: tuple  # (h¹𝒜, dim T_𝒮, h⁰𝒯, h²𝒜)
    gluing: np.ndarray  # H¹(𝒜) → T_𝒮
    restriction: np.ndarray  # T_𝒮 → H⁰(𝒯)
    connecting: dict  # H⁰(𝒯) element → H²(𝒜) class
    injective: bool
    exact_at_T: bool
    image_in_kernel: bool
    kernel_in_image: bool
    cohomology_crosscheck: bool

    @property
    def exact(self) -> bool:
        return self.injective and self.exact_at_T and self.image_in_kernel and self.kernel_in_image

    def __bool__(self):
        return self.exact

    def to_json(self) -> dict:
        return {"dims": list(self.dims), "exact": self.exact, "injective": self.injective,
                "exact_at_T": self.exact_at_T, "image_in_kernel": self.image_in_kernel,
                "kernel_in_image": self.kernel_in_image, "cohomology_crosscheck": self.cohomology_crosscheck,
                "gluing": self.gluing.tolist(), "restriction": self.restriction.tolist(),
                "connecting": {",".join(map(str, k)): list(v) for k, v in self.connecting.items()}}


def _glue_trivial(problem: LocalSystemProblem, opens: list, cocycle: dict, A: LocalAlgebra, Ash: LocalSheaf):
    """The global object obtained by gluing trivial objects on ``opens`` along automorphisms.

    ``cocycle[(i, j)]`` is a section of 𝒜 over U_i ∩ U_j in sheaf coordinates.
    """
    X = problem.space
    P = problem.pointwise
    top = problem.local(X.whole)
    home = {x: next(i for i, U in enumerate(opens) if x in U) for x in X.points}
    base = top.base_object(A)
    pts, eds = top.split(base)

    def value(i, j, w):
        if i == j:
            return P.identity(A)
        stalks = Ash.stalks_of(opens[i] & opens[j], cocycle[(i, j)])
        elem = Ash.stalk_element(w, stalks[w])
        return problem.local(X.minimal_open(w)).split_morphism(elem)[w]

    eds2 = {(z, w): P.compose(A, value(home[z], home[w], w), g) for (z, w), g in eds.items()}
    return top.join(pts, eds2)


def exact_sequence_check(problem: LocalSystemProblem) -> ExactSequenceReport:
    """0 → H¹(𝒜) → T_𝒮 → H⁰(𝒯) → H²(𝒜), each map built from its definition, exactness by enumeration."""
    X, F = problem.space, problem.field
    Ash, Tsh = sheaf_A(problem, 1), sheaf_T(problem, 1)
    TS = global_tangent(problem)
    top = problem.local(X.whole)
    eps = TS.algebra
    fib = top.fiber(eps)
    HA = godement_cohomology(Ash.sheaf, 2)
    HT = godement_cohomology(Tsh.sheaf, 1)
    pts = X.minimal_points(X.whole)
    opens = [X.minimal_open(x) for x in pts]
    cech = CechComplex(Ash.sheaf, opens, top=2)
    h1 = cech.dims[1]
    crosscheck = cech.dims[1] == HA.dims[1] and Tsh.sheaf.global_sections().dim == HT.dims[0]

    # H¹(𝒜) → T_𝒮
    C1 = cech.spaces[1]
    cols = []
    for k in range(h1):
        z = cech.H.representative(1, [int(i == k) for i in range(h1)])
        coc = {}
        for key in C1.keys():
            coc[key] = C1.block(z, key)
        for i in range(len(opens)):
            for j in range(len(opens)):
                if (i, j) not in coc:
                    coc[(i, j)] = F.zeros(Ash.sheaf.dim(opens[i] & opens[j]))
        obj = _glue_trivial(problem, opens, coc, eps, Ash)
        if obj not in fib.canon:
            raise AssertionError("glued data is not an object")
        cols.append(list(TS.coords[fib.canon[obj]]))
    a = F.array(cols).T.copy().reshape(TS.dim, h1) if cols else F.zeros((TS.dim, 0))
    injective = la.rank(F, a) == h1 if h1 else True
    # coboundaries glue to the trivial class
    d0 = cech.diffs[0]
    zero_class = TS.coords[fib.canon[top.base_object(eps)]]
    for col in range(d0.shape[1]):
        z = d0[:, col]
        coc = {key: C1.block(z, key) for key in C1.keys()}
        for i in range(len(opens)):
            for j in range(len(opens)):
                coc.setdefault((i, j), F.zeros(Ash.sheaf.dim(opens[i] & opens[j])))
        if TS.coords[fib.canon[_glue_trivial(problem, opens, coc, eps, Ash)]] != zero_class:
            injective = False

    # T_𝒮 → H⁰(𝒯)
    def restrict_class(t):
        fam = {}
        for x in X.points:
            V = X.minimal_open(x)
            PV = problem.local(V)
            fam[x] = Tsh.stalk_vector(x, PV.fiber(eps).canon[top.restrict_object(PV, t)])
        return Tsh.section_coords(X.whole, fam)

    h0 = Tsh.sheaf.global_sections().dim
    bcols = [list(restrict_class(t)) for t in TS.basis]
    b = F.array(bcols).T.copy().reshape(h0, TS.dim) if bcols else F.zeros((h0, 0))
    linear_b = all(_tuple(restrict_class(t)) == _tuple(F.reduce(b @ F.array(list(TS.coords[t]))))
                   for t in TS.elements)
    ker_b = la.nullspace(F, b) if b.shape[0] else F.eye(TS.dim)
    im_a = la.row_basis(F, a.T.copy()) if a.size else F.zeros((0, TS.dim))
    exact_at_T = linear_b and _same_span(F, im_a, ker_b)

    # H⁰(𝒯) → H²(𝒜) on every element
    conn = _connecting(problem, 1)
    ext = classify_extension(residue_map(eps))
    connecting = {}
    for s in _all_vectors(F, h0):
        lifts = _section_lifts(problem, Tsh, s, eps)
        connecting[_tuple(s)] = _tuple(conn.image(ext, {i: lifts[x] for i, x in enumerate(conn.points)}))
    image_b = {_tuple(F.reduce(b @ F.array(list(TS.coords[t])))) for t in TS.elements}
    zero2 = tuple([0] * conn.H2.dims[2])
    image_in_kernel = all(connecting[v] == zero2 for v in image_b)
    kernel_in_image = all(v in image_b for v, c in connecting.items() if c == zero2)
    dims = (h1, TS.dim, h0, conn.H2.dims[2])
    return ExactSequenceReport(dims, a, b, connecting, injective, exact_at_T, image_in_kernel, kernel_in_image,
                               crosscheck and HA.dims[2] == conn.H2.dims[2])


def _same_span(F, U: np.ndarray, W: np.ndarray) -> bool:
    ru = la.rank(F, U) if U.shape[0] else 0
    rw = la.rank(F, W) if W.shape[0] else 0
    if ru != rw:
        return False
    if ru == 0:
        return True
    return la.rank(F, np.concatenate([U, W], axis=0)) == ru


def _section_lifts(problem, Tsh: LocalSheaf, s, eps) -> dict:
    """Representative objects over (U_x, k[ε]) for a global section of 𝒯 (η trivial over k)."""
    X = problem.space
    stalks = Tsh.stalks_of(X.whole, s)
    return {x: Tsh.stalk_element(x, stalks[x]) for x in X.points}


# the very short sequence -------------------------------------------------------------------------


@dataclass
class VeryShortReport:
    lift_classes: int
    sections: int
    first_map: dict  # global lift class → section (tuple of stalk-class reps)
    connecting: dict  # section → H²(𝒜_I) class
    surjective: bool
    exact: bool

    def __bool__(self):
        return self.exact

    def to_json(self) -> dict:
        return {"lift_classes": self.lift_classes, "sections": self.sections, "surjective": self.surjective,
                "exact": self.exact, "connecting_values": [list(v) for v in sorted(set(self.connecting.values()))]}


def _as_extension(ext) -> Extension:
    ext = ext if isinstance(ext, Extension) else classify_extension(ext)
    if not ext.small:
        raise ValueError("a small extension is required")
    return ext


def _local_lift_data(problem, eta, ext: Extension) -> dict:
    """For every point x: (reps, canon) of lift classes of η|U_x over A′."""
    X = problem.space
    top = problem.local(X.whole)
    out = {}
    for x in X.points:
        PV = problem.local(X.minimal_open(x))
        out[x] = PV.lift_classes(top.restrict_object(PV, eta), ext.map)
    return out


def _sections_of_lifts(problem, local: dict, limit: int | None = None) -> list[dict]:
    """Compatible families of local lift classes: l_x|U_y ~ l_y for x ≤ y."""
    X = problem.space
    order = sorted(X.points, key=lambda x: len([y for y in X.points if X.leq(x, y)]))
    out: list = []
    chosen: dict = {}

    def place(k):
        if limit is not None and len(out) >= limit:
            return
        if k == len(order):
            out.append(dict(chosen))
            check_count(len(out), "sections")
            return
        x = order[k]
        Ux = X.minimal_open(x)
        for l in local[x][0]:
            ok = True
            for y in X.points:
                if y != x and X.leq(x, y):
                    Uy = X.minimal_open(y)
                    if local[y][1][problem.restrict_object(Ux, Uy, l)] != chosen[y]:
                        ok = False
                        break
            if ok:
                chosen[x] = l
                place(k + 1)
                del chosen[x]

    place(0)
    return out


def _section_key(problem, s: dict) -> tuple:
    return tuple(s[x] for x in problem.space.points)


def very_short_sequence(problem: LocalSystemProblem, eta, ext) -> VeryShortReport:
    """T_{η,A′,X} → Γ(X, 𝒯_{η,A′}) → H²(X, 𝒜_I), with kernel = image checked on every section."""
    ext = _as_extension(ext)
    X = problem.space
    p = ext.map
    top = problem.local(X.whole)
    reps, _ = top.lift_classes(eta, p)
    local = _local_lift_data(problem, eta, ext)
    sections = _sections_of_lifts(problem, local)
    first = {}
    for L in reps:
        fam = {}
        for x in X.points:
            PV = problem.local(X.minimal_open(x))
            fam[x] = local[x][1][top.restrict_object(PV, L)]
        first[L] = _section_key(problem, fam)
    d = ext.kernel_dim
    connecting = {}
    if d:
        conn = _connecting(problem, d)
        for s in sections:
            connecting[_section_key(problem, s)] = _tuple(
                conn.image(ext, {i: s[x] for i, x in enumerate(conn.points)}))
    else:
        for s in sections:
            connecting[_section_key(problem, s)] = ()
    image = set(first.values())
    kernel = {k for k, v in connecting.items() if not any(v)}
    return VeryShortReport(len(reps), len(sections), first, connecting, image == set(connecting), image == kernel)


# the obstruction ladder -----------------------------------------------------------------------


@dataclass
class ObstructionLadder:
    stage: int  # first nonvanishing obstruction (1, 2, 3), or 4 when all vanish
    ob1: list  # points whose minimal open admits no lift
    ob2: tuple | None  # class in H¹(X, 𝒯_I) ≅ H¹(X, 𝒯) ⊗ I
    ob3: tuple | None  # class in (H²(X, 𝒜_I) / image of H⁰(X, 𝒯_I))
    spaces: dict
    brute_force: bool | None = None

    @property
    def liftable(self) -> bool:
        return self.stage == 4

    @property
    def consistent(self) -> bool:
        return self.brute_force is None or self.brute_force == self.liftable

    def to_json(self) -> dict:
        return {"stage": self.stage, "liftable": self.liftable, "ob1_support": list(self.ob1),
                "ob2": None if self.ob2 is None else list(self.ob2),
                "ob3": None if self.ob3 is None else list(self.ob3),
                "spaces": self.spaces, "brute_force": self.brute_force, "consistent": self.consistent}


def _torsor_difference(problem, V, ext: Extension, canon: dict, Tspace: TangentSpace, l1, l2):
    """τ ∈ T_I(V) with τ + l2 = l1 for lift classes on V."""
    PV = problem.local(V)
    p = ext.map
    fp, sig = sigma(ext.source, ext.kernel_basis)
    for t in Tspace.elements:
        moved = PV.pushforward(sig, PV.glue(fp, l2, t))
        if canon.get(moved) == l1:
            return t
    raise AssertionError("lift classes are not in one torsor")


def global_lift_exists(problem: LocalSystemProblem, eta, ext) -> bool:
    """Exhaustive: some object over (X, A′) pushes forward to an object isomorphic to η."""
    ext = ext if isinstance(ext, Extension) else classify_extension(ext)
    top = problem.local(problem.space.whole)
    p = ext.map
    fA = top.fiber(p.target)
    target = fA.canon[eta]
    return any(fA.canon[top.pushforward(p, o)] == target for o in top.objects(p.source))


def obstruction_ladder(problem: LocalSystemProblem, eta, ext, *, crosscheck: bool = True) -> ObstructionLadder:
    """ob¹ (local liftability), ob² (Čech class of lift differences), ob³ (connecting image mod H⁰(𝒯_I))."""
    ext = _as_extension(ext)
    X, F = problem.space, problem.field
    d = ext.kernel_dim
    bf = global_lift_exists(problem, eta, ext) if crosscheck else None
    Ob = obstruction_sheaf(problem)
    spaces = {"H0(Ob)": Ob.global_sections().dim, "kernel_dim": d}
    if d == 0:
        return ObstructionLadder(4, [], (), (), spaces, bf)
    local = _local_lift_data(problem, eta, ext)
    ob1 = [x for x in X.points if not local[x][0]]
    if ob1:
        if spaces["H0(Ob)"] == 0:
            raise AssertionError("a locally unobstructed problem failed to lift locally")
        return ObstructionLadder(1, ob1, None, None, spaces, bf)

    Tsh = sheaf_T(problem, d)
    pts = X.minimal_points(X.whole)
    opens = [X.minimal_open(x) for x in pts]
    cech = CechComplex(Tsh.sheaf, opens, top=1)
    spaces["H1(T_I)"] = cech.dims[1]
    choice = {i: local[x][0][0] for i, x in enumerate(pts)}
    C1 = cech.spaces[1]
    z = F.zeros(C1.dim)
    for (i, j) in C1.keys():
        U = C1.opens[(i, j)]
        fam = {}
        for w in U:
            W = X.minimal_open(w)
            reps_w, canon_w = local[w]
            li = canon_w[problem.restrict_object(opens[i], W, choice[i])]
            lj = canon_w[problem.restrict_object(opens[j], W, choice[j])]
            Tw = Tsh.stalk_space(w)
            fam[w] = Tsh.stalk_vector(w, _torsor_difference(problem, W, ext, canon_w, Tw, li, lj))
        o = C1.offsets[(i, j)]
        c = Tsh.section_coords(U, fam)
        z[o:o + c.shape[0]] = c
    ob2 = _tuple(cech.H.classify(1, z)) if cech.dims[1] else ()
    if any(ob2):
        return ObstructionLadder(2, [], ob2, None, spaces, bf)

    found = _sections_of_lifts(problem, local, limit=1)
    if not found:
        raise AssertionError("ob² vanishes but no global section of lift classes exists")
    s = found[0]
    conn = _connecting(problem, d)
    value = conn.image(ext, {i: s[x] for i, x in enumerate(conn.points)})
    # image of H⁰(𝒯_I) under the linear connecting map (η trivial over k, A′ = k[I])
    kI = conn.kI
    triv = classify_extension(residue_map(kI))
    h0 = Tsh.sheaf.global_sections().dim
    images = []
    for v in _all_vectors(F, h0):
        lifts = _section_lifts(problem, Tsh, v, kI)
        images.append(conn.image(triv, {i: lifts[x] for i, x in enumerate(conn.points)}))
    h2 = conn.H2.dims[2]
    sub = la.row_basis(F, F.array([list(v) for v in images])) if images and h2 else F.zeros((0, h2))
    Q = la.Quotient(F, sub, h2)
    spaces["H2(A_I)"] = h2
    spaces["ob3_space"] = Q.dim
    ob3 = _tuple(Q(value)) if Q.dim else ()
    stage = 3 if any(ob3) else 4
    return ObstructionLadder(stage, [], ob2, ob3, spaces, bf)


def ladder_functoriality(problem: LocalSystemProblem, eta, ext) -> bool:
    """Along A′ → C → A from the tiny chain of A′ → A, obstructions can only move to later stages."""
    ext = _as_extension(ext)
    p = ext.map
    F = problem.field
    base = obstruction_ladder(problem, eta, ext, crosscheck=False)
    chain = factor_into_tiny(p)
    to_C = None
    for link in chain[:-1]:
        to_C = link.map if to_C is None else link.map @ to_C
        C = to_C.target
        q = AlgebraHom(C, p.target, F.reduce(p.matrix @ to_C.section()), check=False)
        sub = obstruction_ladder(problem, eta, classify_extension(q), crosscheck=False)
        if sub.stage < base.stage:
            return False
    return True


# the consolidated report -----------------------------------------------------------------------


@dataclass
class GDReport:
    h1_check: CheckResult
    h2_check: CheckResult
    h4_checks: list
    dims: dict
    tangent_dim: int
    lower_combination: int
    smooth_criterion: bool
    bounds: DimBounds | None
    exact_sequence: ExactSequenceReport

    def to_json(self) -> dict:
        return {"H1": self.h1_check.result, "H2": self.h2_check.result,
                "H4": all(c.result for c in self.h4_checks), "dims": self.dims,
                "dim_T": self.tangent_dim, "lower": self.lower_combination,
                "smooth_criterion": self.smooth_criterion,
                "bounds": None if self.bounds is None else self.bounds.to_json(),
                "exact_sequence": self.exact_sequence.to_json()}


def gd_report(problem: LocalSystemProblem, prorep: ProRep | int | None = None) -> GDReport:
    X, F = problem.space, problem.field
    top = problem.local(X.whole)
    k = residue_field(F)
    eps = k_of_V(F, 1)
    x3 = monomial_quotient(F, ["x"], ["x^3"])
    p_eps = residue_map(eps)
    from .artin import hom_from_images

    p_x3 = hom_from_images(x3, eps, {"x": "e"})
    h2c = check_h2(top, [k, eps])
    h1c = check_h1(top, p_eps, p_eps)
    h4 = [h4_via_aut(top, p_eps), h4_via_aut(top, p_x3)]
    es = exact_sequence_check(problem)
    Ash, Tsh = sheaf_A(problem, 1), sheaf_T(problem, 1)
    HA = godement_cohomology(Ash.sheaf, 2)
    HT = godement_cohomology(Tsh.sheaf, 1)
    Ob = obstruction_sheaf(problem)
    dims = {"h0_T": HT.dims[0], "h1_T": HT.dims[1], "h0_A": HA.dims[0], "h1_A": HA.dims[1], "h2_A": HA.dims[2],
            "h0_Ob": Ob.global_sections().dim}
    T = es.dims[1]
    third = T + dims["h2_A"] - dims["h1_A"] - dims["h0_T"]
    lower = dims["h0_T"] + dims["h1_A"] - dims["h0_Ob"] - dims["h1_T"] - dims["h2_A"]
    smooth = dims["h0_Ob"] == 0 and dims["h1_T"] == 0 and third == 0
    bounds = dim_bounds_report(T, [dims["h0_Ob"], dims["h1_T"], third], prorep) if prorep is not None else None
    return GDReport(h1c, h2c, h4, dims, T, lower, smooth, bounds, es)
