"""Finite topological spaces, sheaves of vector spaces, and their cohomology.

A finite space is a preorder on its points.  Opens are the up-closed subsets,
so ``minimal_open(x) = {y : x ≤ y}`` and the stalk of a sheaf at ``x`` is its
value on that open.  A sheaf is stored by stalks and restriction matrices
``r[x, y]: F_x → F_y`` for ``x ≤ y``; sections over an open are compatible
families.

Cohomology is computed three ways: derived-functor via the Godement
resolution, unordered Čech for a cover, and the level-2 group ``H²(𝒰, ℱ)``
of a cover whose pairwise intersections carry their own covers.
"""
from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field as dc_field
from typing import Iterable

import numpy as np

from . import linalg as la
from .errors import InvalidCover, InvalidSpace, NotARefinement
from .field import Field


# spaces -----------------------------------------------------------------------------------


class FiniteSpace:
    """Points with a specialisation preorder; ``order`` lists generating pairs ``(x, y)`` with x ≤ y."""

    def __init__(self, points: Iterable, order: Iterable = (), name: str = ""):
        self.points = tuple(str(p) for p in points)
        if len(set(self.points)) != len(self.points):
            raise InvalidSpace("duplicate points", points=list(self.points))
        self.name = name
        self.index = {p: i for i, p in enumerate(self.points)}
        n = len(self.points)
        leq = np.eye(n, dtype=bool)
        for pair in order:
            a, b = (str(x) for x in pair)
            if a not in self.index or b not in self.index:
                raise InvalidSpace("order mentions an unknown point", pair=[a, b])
            leq[self.index[a], self.index[b]] = True
        for k in range(n):
            leq |= leq[:, [k]] & leq[[k], :]
        self._leq = leq
        self._opens = None

    def leq(self, x, y) -> bool:
        return bool(self._leq[self.index[x], self.index[y]])

    def relations(self) -> list[tuple[str, str]]:
        """Every pair x ≤ y with x ≠ y."""
        return [(x, y) for x in self.points for y in self.points if x != y and self.leq(x, y)]

    def hasse(self) -> list[tuple[str, str]]:
        rel = self.relations()
        out = []
        for x, y in rel:
            if self.leq(y, x):
                out.append((x, y))
                continue
            between = any(self.leq(x, z) and self.leq(z, y) and not self.leq(z, x) and not self.leq(y, z)
                          for z in self.points)
            if not between:
                out.append((x, y))
        return out

    def minimal_open(self, x) -> frozenset:
        return frozenset(y for y in self.points if self.leq(x, y))

    @property
    def whole(self) -> frozenset:
        return frozenset(self.points)

    def is_open(self, S) -> bool:
        S = frozenset(S)
        return all(y in S for x in S for y in self.minimal_open(x))

    def opens(self) -> list[frozenset]:
        """All opens, smallest first."""
        if self._opens is None:
            found = {frozenset()}
            for x in self.points:
                found |= {U | self.minimal_open(x) for U in found}
            self._opens = sorted(found, key=lambda U: (len(U), sorted(self.index[p] for p in U)))
        return self._opens

    def minimal_points(self, U) -> list[str]:
        """One point from each minimal class of ``U`` (in point order)."""
        U = frozenset(U)
        out = []
        for x in self.points:
            if x not in U:
                continue
            below = [y for y in U if y != x and self.leq(y, x)]
            if any(not self.leq(x, y) for y in below):
                continue
            if any(self.leq(y, x) and self.leq(x, y) for y in out):
                continue
            out.append(x)
        return out

    def sort(self, U) -> tuple:
        return tuple(p for p in self.points if p in U)

    def to_json(self) -> dict:
        return {"points": list(self.points), "order": [list(e) for e in self.hasse()]}

    @classmethod
    def from_json(cls, obj) -> "FiniteSpace":
        if not isinstance(obj, dict) or "points" not in obj:
            raise InvalidSpace("space needs a 'points' list")
        return cls(obj["points"], obj.get("order", []), name=obj.get("name", ""))

    def __eq__(self, other):
        return isinstance(other, FiniteSpace) and self.points == other.points and np.array_equal(self._leq, other._leq)

    def __hash__(self):
        return hash((self.points, self._leq.tobytes()))

    def __repr__(self):
        return f"FiniteSpace({self.name or len(self.points)})"


def point_space() -> FiniteSpace:
    return FiniteSpace(["p"], name="point")


def circle() -> FiniteSpace:
    """Minimal model of S¹: two closed points below two open points."""
    return FiniteSpace(["a0", "a1", "b0", "b1"],
                       [(a, b) for a in ("a0", "a1") for b in ("b0", "b1")], name="circle")


def sphere() -> FiniteSpace:
    """Minimal model of S²: three levels of two points each."""
    order = [(a, b) for a in ("a0", "a1") for b in ("b0", "b1")]
    order += [(b, c) for b in ("b0", "b1") for c in ("c0", "c1")]
    return FiniteSpace(["a0", "a1", "b0", "b1", "c0", "c1"], order, name="sphere")


def suspension(X: FiniteSpace, tag: str = "s") -> FiniteSpace:
    """Non-Hausdorff suspension: two new points above everything."""
    top = [f"{tag}0", f"{tag}1"]
    order = [tuple(e) for e in X.hasse()] + [(p, t) for p in X.points for t in top]
    return FiniteSpace(list(X.points) + top, order, name=f"S({X.name})")


def wedge_of_circles() -> FiniteSpace:
    """Two closed points below three open points; the order complex is K_{2,3}."""
    return FiniteSpace(["a0", "a1", "b0", "b1", "b2"],
                       [(a, b) for a in ("a0", "a1") for b in ("b0", "b1", "b2")], name="wedge")


def hyper_cech_space() -> FiniteSpace:
    """Two closed points a, b; two curves c1, c2 through both; a generic point g."""
    order = [(p, c) for p in ("a", "b") for c in ("c1", "c2")] + [("c1", "g"), ("c2", "g")]
    return FiniteSpace(["a", "b", "c1", "c2", "g"], order, name="hyper-cech")


def standard_spaces() -> list[FiniteSpace]:
    return [point_space(), FiniteSpace(["x", "u", "v"], [("x", "u"), ("x", "v")], name="vee"),
            circle(), hyper_cech_space(), wedge_of_circles(), sphere(), suspension(sphere(), "d")]


# sheaves ----------------------------------------------------------------------------------


class Sections:
    """Sections of a sheaf over an open, as a subspace of ⊕_{x∈U} F_x."""

    def __init__(self, sheaf: "VectorSheaf", U: frozenset):
        F = sheaf.field
        self.open = U
        self.points = sheaf.space.sort(U)
        self.offsets = {}
        n = 0
        for x in self.points:
            self.offsets[x] = n
            n += sheaf.stalks[x]
        self.ambient_dim = n
        rows = []
        for x in self.points:
            for y in self.points:
                if x == y or not sheaf.space.leq(x, y) or not sheaf.stalks[y]:
                    continue
                block = F.zeros((sheaf.stalks[y], n))
                ox, oy = self.offsets[x], self.offsets[y]
                block[:, ox:ox + sheaf.stalks[x]] = sheaf.maps[(x, y)]
                block[:, oy:oy + sheaf.stalks[y]] = F.reduce(block[:, oy:oy + sheaf.stalks[y]] - F.eye(sheaf.stalks[y]))
                rows.append(block)
        M = np.concatenate(rows, axis=0) if rows else F.zeros((0, n))
        self.basis = la.nullspace(F, M) if n else F.zeros((0, 0))
        self.dim = self.basis.shape[0]
        self._coords = la.Basis(F, self.basis)
        self.field = F
        self.stalk_dims = {x: sheaf.stalks[x] for x in self.points}

    def coords(self, amb) -> np.ndarray:
        return self._coords.coords(amb)

    def contains(self, amb) -> bool:
        return self._coords.contains(amb)

    def ambient(self, c) -> np.ndarray:
        return self.field.reduce(np.asarray(c) @ self.basis)

    def stalk(self, amb, x) -> np.ndarray:
        o = self.offsets[x]
        return amb[..., o:o + self.stalk_dims[x]]


class VectorSheaf:
    """Stalk dimensions and restriction matrices ``maps[(x, y)]`` (shape d_y × d_x) for x ≤ y.

    Maps may be given on a generating set of relations (e.g. the Hasse
    diagram); the rest are filled in by composition and functoriality is checked.
    """

    def __init__(self, space: FiniteSpace, field: Field, stalks: dict, maps: dict | None = None,
                 name: str = "", check: bool = True):
        self.space = space
        self.field = field
        self.name = name
        self.stalks = {x: int(stalks.get(x, 0)) for x in space.points}
        given = {}
        for (x, y), M in (maps or {}).items():
            given[(x, y)] = la.as_matrix(field, M, self.stalks[x]).reshape(self.stalks[y], self.stalks[x])
        self.maps = self._complete(given)
        if check:
            self._check_functorial()
        self._sections: dict = {}
        self._restrictions: dict = {}

    def _complete(self, given: dict) -> dict:
        F, X = self.field, self.space
        out = dict(given)
        for x in X.points:
            # breadth-first composition along given relations
            reach = {x: F.eye(self.stalks[x])}
            frontier = [x]
            while frontier:
                nxt = []
                for u in frontier:
                    for (a, b), M in given.items():
                        if a == u and b not in reach:
                            reach[b] = F.reduce(M @ reach[u])
                            nxt.append(b)
                frontier = nxt
            for y in X.points:
                if y == x or not X.leq(x, y) or (x, y) in out:
                    continue
                if y in reach:
                    out[(x, y)] = reach[y]
                elif self.stalks[x] == 0 or self.stalks[y] == 0:
                    out[(x, y)] = F.zeros((self.stalks[y], self.stalks[x]))
                else:
                    raise InvalidSpace("no restriction map supplied", pair=[x, y])
        return out

    def _check_functorial(self):
        F, X = self.field, self.space
        for (x, y), M in self.maps.items():
            if not X.leq(x, y):
                raise InvalidSpace("restriction map against the order", pair=[x, y])
        for x, y in X.relations():
            for z in X.points:
                if z in (x, y) or not X.leq(y, z):
                    continue
                lhs = F.reduce(self.maps[(y, z)] @ self.maps[(x, y)])
                if np.any(lhs != self.maps[(x, z)]):
                    raise InvalidSpace("restriction maps do not compose", triple=[x, y, z])
            if X.leq(y, x):
                back = F.reduce(self.maps[(y, x)] @ self.maps[(x, y)])
                if np.any(back != F.eye(self.stalks[x])):
                    raise InvalidSpace("equivalent points need inverse restrictions", pair=[x, y])

    def restriction(self, x, y) -> np.ndarray:
        if x == y:
            return self.field.eye(self.stalks[x])
        return self.maps[(x, y)]

    def sections(self, U) -> Sections:
        U = frozenset(U)
        s = self._sections.get(U)
        if s is None:
            s = self._sections[U] = Sections(self, U)
        return s

    def dim(self, U) -> int:
        return self.sections(U).dim

    def restrict(self, U, V) -> np.ndarray:
        """Matrix (dim V × dim U) of the restriction F(U) → F(V)."""
        U, V = frozenset(U), frozenset(V)
        key = (U, V)
        R = self._restrictions.get(key)
        if R is None:
            if not V <= U:
                raise InvalidCover("restriction to a non-subset")
            SU, SV = self.sections(U), self.sections(V)
            cols = [SU.offsets[x] + k for x in SV.points for k in range(self.stalks[x])]
            sub = SU.basis[:, cols] if SU.dim else self.field.zeros((0, SV.ambient_dim))
            R = SV.coords(sub).T.copy() if SU.dim else self.field.zeros((SV.dim, 0))
            self._restrictions[key] = R
        return R

    def global_sections(self) -> Sections:
        return self.sections(self.space.whole)

    def as_presheaf(self) -> "Presheaf":
        X = self.space
        opens = X.opens()
        values = {U: self.dim(U) for U in opens}
        res = {(U, V): self.restrict(U, V) for U in opens for V in opens if V <= U}
        return Presheaf(X, self.field, values, res, check=False)

    def to_json(self) -> dict:
        return {"stalks": dict(self.stalks),
                "maps": [{"from": x, "to": y, "matrix": self.maps[(x, y)].tolist()}
                         for x, y in self.space.hasse()]}

    @classmethod
    def from_json(cls, space: FiniteSpace, F: Field, obj) -> "VectorSheaf":
        if "constant" in obj:
            return constant_sheaf(space, F, int(obj["constant"]))
        maps = {(m["from"], m["to"]): m["matrix"] for m in obj.get("maps", [])}
        return cls(space, F, obj["stalks"], maps)

    def __repr__(self):
        return f"VectorSheaf({self.name or self.stalks})"


def constant_sheaf(space: FiniteSpace, F: Field, d: int = 1) -> VectorSheaf:
    return VectorSheaf(space, F, {x: d for x in space.points},
                       {(x, y): F.eye(d) for x, y in space.hasse()}, name=f"k^{d}" if d != 1 else "k")


def zero_sheaf(space: FiniteSpace, F: Field) -> VectorSheaf:
    return VectorSheaf(space, F, {}, {}, name="0")


def skyscraper(space: FiniteSpace, F: Field, z) -> VectorSheaf:
    """(i_z)_* k: stalk k at every x ≤ z."""
    st = {x: int(space.leq(x, z)) for x in space.points}
    maps = {(x, y): F.eye(1) for x, y in space.hasse() if st[x] and st[y]}
    return VectorSheaf(space, F, st, maps, name=f"sky({z})")


def extension_by_zero(space: FiniteSpace, F: Field, U) -> VectorSheaf:
    """j_! k for an open U."""
    U = frozenset(U)
    st = {x: int(x in U) for x in space.points}
    maps = {(x, y): F.eye(1) for x, y in space.hasse() if st[x] and st[y]}
    return VectorSheaf(space, F, st, maps, name="j_!k")


def direct_sum(sheaves: list[VectorSheaf]) -> VectorSheaf:
    X, F = sheaves[0].space, sheaves[0].field
    st = {x: sum(S.stalks[x] for S in sheaves) for x in X.points}
    maps = {(x, y): la.block_diag(F, [S.restriction(x, y) for S in sheaves]) for x, y in X.relations()}
    return VectorSheaf(X, F, st, maps, name="+".join(S.name for S in sheaves))


def random_sheaf(space: FiniteSpace, F: Field, rng: random.Random, pieces: int = 2) -> VectorSheaf:
    """Direct sum of random constant, skyscraper and extension-by-zero pieces, twisted stalkwise."""
    parts = []
    for _ in range(pieces):
        kind = rng.choice(["const", "sky", "shriek"])
        if kind == "const":
            parts.append(constant_sheaf(space, F))
        elif kind == "sky":
            parts.append(skyscraper(space, F, rng.choice(space.points)))
        else:
            parts.append(extension_by_zero(space, F, space.minimal_open(rng.choice(space.points))))
    S = direct_sum(parts)
    # change of basis at each stalk keeps the sheaf isomorphic but hides the block structure
    g = {x: _random_invertible(F, S.stalks[x], rng) for x in space.points}
    maps = {(x, y): F.reduce(g[y] @ S.restriction(x, y) @ la.inverse(F, g[x])) if S.stalks[x] else S.restriction(x, y)
            for x, y in space.relations()}
    return VectorSheaf(space, F, S.stalks, maps, name=S.name)


def _random_invertible(F: Field, n: int, rng: random.Random) -> np.ndarray:
    elems = list(F.elements()) if F.is_finite else [F(v) for v in range(-2, 3)]
    while True:
        M = F.array([[rng.choice(elems) for _ in range(n)] for _ in range(n)]) if n else F.zeros((0, 0))
        if la.rank(F, M) == n:
            return M


# presheaves -------------------------------------------------------------------------------


class Presheaf:
    """Values ``dims[U]`` on every open and restriction matrices ``res[(U, V)]`` for V ⊆ U."""

    def __init__(self, space: FiniteSpace, field: Field, dims: dict, res: dict, name: str = "", check: bool = True):
        self.space = space
        self.field = field
        self.name = name
        self.dims = {frozenset(U): int(d) for U, d in dims.items()}
        for U in space.opens():
            self.dims.setdefault(U, 0)
        self.res = {}
        for U in space.opens():
            for V in space.opens():
                if V <= U:
                    M = res.get((U, V))
                    if M is None:
                        if U == V:
                            M = field.eye(self.dims[U])
                        else:
                            M = field.zeros((self.dims[V], self.dims[U]))
                    self.res[(U, V)] = la.as_matrix(field, M, self.dims[U]).reshape(self.dims[V], self.dims[U])
        if check:
            self._check()

    def _check(self):
        F = self.field
        opens = self.space.opens()
        for U in opens:
            if np.any(self.res[(U, U)] != F.eye(self.dims[U])):
                raise InvalidSpace("restriction to the same open is not the identity")
            for V in opens:
                if not V <= U:
                    continue
                for W in opens:
                    if W <= V and np.any(F.reduce(self.res[(V, W)] @ self.res[(U, V)]) != self.res[(U, W)]):
                        raise InvalidSpace("presheaf restrictions do not compose")

    def restrict(self, U, V) -> np.ndarray:
        return self.res[(frozenset(U), frozenset(V))]


@dataclass
class Sheafification:
    sheaf: VectorSheaf
    comparison: dict  # open -> matrix (dim sections(U) × dim P(U))

    def is_isomorphism(self) -> bool:
        F = self.sheaf.field
        for U, M in self.comparison.items():
            if M.shape[0] != M.shape[1] or la.rank(F, M) != M.shape[0]:
                return False
        return True


def sheafify(P: Presheaf) -> Sheafification:
    """Stalk at x is P(minimal_open(x)); returns the sheaf and the natural maps P(U) → sections(U)."""
    X, F = P.space, P.field
    U_of = {x: X.minimal_open(x) for x in X.points}
    st = {x: P.dims[U_of[x]] for x in X.points}
    maps = {(x, y): P.restrict(U_of[x], U_of[y]) for x, y in X.relations()}
    S = VectorSheaf(X, F, st, maps, name=f"sheafify({P.name})")
    comp = {}
    for U in X.opens():
        SU = S.sections(U)
        blocks = [P.restrict(U, U_of[x]) for x in SU.points]
        amb = np.concatenate(blocks, axis=0) if blocks else F.zeros((0, P.dims[U]))
        comp[U] = SU.coords(amb.T).T.copy() if SU.dim else F.zeros((0, P.dims[U]))
    return Sheafification(S, comp)


def hyper_cech_presheaf(F: Field) -> Presheaf:
    """Finite analogue of the presheaf whose sheafification is constant but admits no glued unit.

    On the space of :func:`hyper_cech_space`, V1 = X∖{a}, V2 = X∖{b} and the
    "curve-avoiding" opens are the proper opens of V1 ∩ V2 = {c1, c2, g}.
    """
    X = hyper_cech_space()
    V1, V2 = X.whole - {"a"}, X.whole - {"b"}
    V12 = V1 & V2

    def kind(U):
        if not (U <= V1) and not (U <= V2):
            return "zero"
        if U <= V12:
            return "pair" if U == V12 else "line"
        return "left" if U <= V1 else "right"

    dims = {"zero": 0, "left": 1, "right": 1, "pair": 2, "line": 1}
    # each value embeds in k×k ("line" is the diagonal quotient, reached by summing)
    to_pair = {"left": F.array([[1], [0]]), "right": F.array([[0], [1]]), "pair": F.eye(2)}
    total = F.array([[1, 1]])
    opens = X.opens()
    vals = {U: dims[kind(U)] for U in opens}
    res = {}
    for U in opens:
        for V in opens:
            if not V <= U or vals[U] == 0 or vals[V] == 0:
                continue
            ku, kv = kind(U), kind(V)
            if ku == kv:
                res[(U, V)] = F.eye(vals[U])
            elif kv == "line":
                res[(U, V)] = total @ to_pair[ku] if ku != "line" else F.eye(1)
            elif kv == "pair":
                res[(U, V)] = to_pair[ku]
            else:
                raise AssertionError((ku, kv))
            res[(U, V)] = F.reduce(res[(U, V)])
    return Presheaf(X, F, vals, res, name="hyper-cech")


def level1_gluings(P: Presheaf, target: np.ndarray, limit: int | None = None) -> list:
    """Every cover {U_i} with sections ρ_i ∈ P(U_i) mapping to ``target`` and agreeing in P(U_i ∩ U_j).

    ``target`` is a global section of the sheafification, in its coordinates.
    Exhaustive over a finite field.
    """
    F = P.field
    if not F.is_finite:
        raise ValueError("exhaustive search needs a finite field")
    X = P.space
    sh = sheafify(P)
    glob = X.whole
    choices = {}
    for U in X.opens():
        if not U:
            continue
        want = F.reduce(sh.sheaf.restrict(glob, U) @ target)
        M = sh.comparison[U]
        opts = [s for s in _all_vectors(F, P.dims[U]) if np.all(F.reduce(M @ s) == want)]
        if opts:
            choices[U] = opts
    opens = [U for U in X.opens() if U in choices]
    found = []

    def agree(U, s, V, t):
        W = U & V
        return np.all(F.reduce(P.restrict(U, W) @ s) == F.reduce(P.restrict(V, W) @ t))

    def search(k, chosen, covered):
        if limit is not None and len(found) >= limit:
            return
        if covered == glob and chosen:
            found.append([(sorted(U), s.tolist()) for U, s in chosen])
        if k == len(opens):
            return
        search(k + 1, chosen, covered)
        U = opens[k]
        for s in choices[U]:
            if all(agree(U, s, V, t) for V, t in chosen):
                search(k + 1, chosen + [(U, s)], covered | U)

    search(0, [], frozenset())
    # subsets of larger families are reported too; keep the minimal ones only
    return found


def _all_vectors(F: Field, n: int):
    for c in itertools.product(list(F.elements()), repeat=n):
        yield F.array(list(c)) if n else F.zeros(0)


# sheaf maps and the Godement resolution -------------------------------------------------


class SheafMap:
    def __init__(self, source: VectorSheaf, target: VectorSheaf, stalk_maps: dict):
        self.source, self.target = source, target
        self.stalk = stalk_maps
        self._cache: dict = {}

    def on_sections(self, U) -> np.ndarray:
        U = frozenset(U)
        M = self._cache.get(U)
        if M is None:
            F = self.source.field
            S, T = self.source.sections(U), self.target.sections(U)
            blocks = la.block_diag(F, [self.stalk[x] for x in S.points]) if S.points else F.zeros((0, 0))
            img = F.reduce(S.basis @ blocks.T) if S.dim else F.zeros((0, T.ambient_dim))
            M = T.coords(img).T.copy() if S.dim else F.zeros((T.dim, 0))
            self._cache[U] = M
        return M

    def on_ambient(self, U, amb) -> np.ndarray:
        F = self.source.field
        S = self.source.sections(U)
        parts = [F.reduce(self.stalk[x] @ S.stalk(amb, x)) for x in S.points]
        return np.concatenate(parts) if parts else F.zeros(0)


def godement_sheaf(S: VectorSheaf) -> tuple[VectorSheaf, SheafMap]:
    """G(U) = ∏_{x∈U} S_x with the canonical embedding S → G."""
    X, F = S.space, S.field
    U_of = {x: X.sort(X.minimal_open(x)) for x in X.points}
    st = {x: sum(S.stalks[y] for y in U_of[x]) for x in X.points}
    maps = {}
    for x, y in X.relations():
        M = F.zeros((st[y], st[x]))
        ox = {}
        o = 0
        for z in U_of[x]:
            ox[z] = o
            o += S.stalks[z]
        r = 0
        for z in U_of[y]:
            d = S.stalks[z]
            M[r:r + d, ox[z]:ox[z] + d] = F.eye(d)
            r += d
        maps[(x, y)] = M
    G = VectorSheaf(X, F, st, maps, name=f"G({S.name})", check=False)
    emb = {}
    for x in X.points:
        blocks = [S.restriction(x, y) for y in U_of[x]]
        emb[x] = np.concatenate(blocks, axis=0) if blocks else F.zeros((0, S.stalks[x]))
    return G, SheafMap(S, G, emb)


def cokernel(f: SheafMap) -> tuple[VectorSheaf, SheafMap]:
    B = f.target
    X, F = B.space, B.field
    Q = {x: la.Quotient(F, f.stalk[x].T.copy(), B.stalks[x]) for x in X.points}
    st = {x: Q[x].dim for x in X.points}
    maps = {(x, y): la.induced_map(F, B.restriction(x, y), Q[x], Q[y]) for x, y in X.relations()}
    C = VectorSheaf(X, F, st, maps, name=f"coker", check=False)
    return C, SheafMap(B, C, {x: Q[x].proj for x in X.points})


def compose(g: SheafMap, f: SheafMap) -> SheafMap:
    F = f.source.field
    return SheafMap(f.source, g.target, {x: F.reduce(g.stalk[x] @ f.stalk[x]) for x in f.source.space.points})


class GodementResolution:
    """F → G0 → G1 → … with ``eps: F → G0`` and ``d[n]: G_n → G_{n+1}``."""

    def __init__(self, sheaf: VectorSheaf, length: int = 3):
        self.sheaf = sheaf
        G0, eps = godement_sheaf(sheaf)
        self.G = [G0]
        self.eps = eps
        self.d: list[SheafMap] = []
        prev = eps
        for _ in range(length):
            Q, q = cokernel(prev)
            Gn, emb = godement_sheaf(Q)
            d = compose(emb, q)
            self.d.append(d)
            self.G.append(Gn)
            prev = d


@dataclass
class Cohomology:
    field: Field
    dims: list
    cocycles: list  # rows in the ambient cochain coordinates
    quotients: list  # la.Quotient of cocycle coordinates by coboundaries
    bases: list = dc_field(default_factory=list)

    def classify(self, n: int, v) -> np.ndarray:
        Z = la.Basis(self.field, self.cocycles[n])
        if not Z.contains(np.asarray(v)):
            raise ValueError("not a cocycle")
        return self.quotients[n](Z.coords(np.asarray(v)))

    def representative(self, n: int, c) -> np.ndarray:
        """A cocycle in the class with coordinates ``c``."""
        F = self.field
        z = F.reduce(self.quotients[n].lift @ F.array(list(c)).reshape(-1)) if self.dims[n] else F.zeros(self.cocycles[n].shape[0])
        return F.reduce(z @ self.cocycles[n]) if self.cocycles[n].shape[0] else F.zeros(self.cocycles[n].shape[1])


def _cohomology_from_differentials(F: Field, dims_c: list, diffs: list, top: int) -> Cohomology:
    """``diffs[n]`` is the matrix C^n → C^{n+1} (or a zero-row placeholder)."""
    dims, Zs, Qs = [], [], []
    for n in range(top + 1):
        d = diffs[n]
        Z = la.nullspace(F, d) if d.shape[0] else F.eye(dims_c[n])
        if n == 0:
            Bsp = F.zeros((0, dims_c[0]))
        else:
            Bsp = la.row_basis(F, diffs[n - 1].T.copy()) if diffs[n - 1].size else F.zeros((0, dims_c[n]))
        Zb = la.Basis(F, la.row_basis(F, Z) if Z.shape[0] else Z)
        Bc = Zb.coords(Bsp) if Bsp.shape[0] else F.zeros((0, Zb.dim))
        Q = la.Quotient(F, Bc, Zb.dim)
        dims.append(Q.dim)
        Zs.append(Zb.rows)
        Qs.append(Q)
    return Cohomology(F, dims, Zs, Qs)


def godement_cohomology(sheaf: VectorSheaf, max_degree: int = 2, resolution: GodementResolution | None = None):
    """Derived-functor cohomology via global sections of the Godement resolution."""
    R = resolution or GodementResolution(sheaf, max_degree + 1)
    X = sheaf.space
    diffs = [R.d[n].on_sections(X.whole) for n in range(max_degree + 1)]
    dims_c = [R.G[n].dim(X.whole) for n in range(max_degree + 1)]
    H = _cohomology_from_differentials(sheaf.field, dims_c, diffs, max_degree)
    H.resolution = R
    return H


# cochain spaces -------------------------------------------------------------------------


class CochainSpace:
    """∏ F(U_key) over keyed opens, in section coordinates (zero-dimensional factors dropped)."""

    def __init__(self, sheaf: VectorSheaf, items: Iterable):
        self.sheaf = sheaf
        self.opens = {}
        self.offsets = {}
        n = 0
        for key, U in items:
            d = sheaf.dim(U)
            if d == 0:
                continue
            self.opens[key] = U
            self.offsets[key] = n
            n += d
        self.dim = n

    def block(self, v, key) -> np.ndarray:
        o = self.offsets[key]
        return v[o:o + self.sheaf.dim(self.opens[key])]

    def keys(self):
        return self.offsets.keys()


def _face_rows(sheaf: VectorSheaf, U, faces, src: CochainSpace) -> np.ndarray:
    F = sheaf.field
    d = sheaf.dim(U)
    out = F.zeros((d, src.dim))
    for sign, key in faces:
        if key not in src.offsets:
            continue
        V = src.opens[key]
        o = src.offsets[key]
        R = sheaf.restrict(V, U)
        out[:, o:o + R.shape[1]] = F.reduce(out[:, o:o + R.shape[1]] + sign * R)
    return out


def _differential(sheaf, src: CochainSpace, targets) -> tuple[CochainSpace, np.ndarray]:
    """targets: iterable of (key, open, faces)."""
    F = sheaf.field
    items = [(key, U) for key, U, _ in targets]
    dst = CochainSpace(sheaf, items)
    M = F.zeros((dst.dim, src.dim))
    for key, U, faces in targets:
        if key in dst.offsets:
            o = dst.offsets[key]
            rows = _face_rows(sheaf, U, faces, src)
            M[o:o + rows.shape[0]] = rows
    return dst, M


def _kernel_of_row_blocks(F: Field, blocks, n: int) -> np.ndarray:
    """Rows spanning the common kernel of a stream of row blocks (zero and repeated rows dropped)."""
    seen = set()
    keep = []
    for rows in blocks:
        for r in rows:
            if not np.any(r != 0):
                continue
            key = tuple(r.tolist())
            if key not in seen:
                seen.add(key)
                keep.append(r)
    if not keep:
        return F.eye(n)
    N = la.nullspace(F, np.stack(keep))
    return N


# Čech cohomology ----------------------------------------------------------------------------


def _validate_cover(X: FiniteSpace, opens) -> tuple:
    opens = tuple(frozenset(U) for U in opens)
    for U in opens:
        if not X.is_open(U):
            raise InvalidCover("not an open set", open=sorted(U))
    if not opens or frozenset().union(*opens) != X.whole:
        raise InvalidCover("opens do not cover the space")
    return opens


class CechComplex:
    """Unordered Čech cochains C^n = ∏_{(i0..in) ∈ I^{n+1}} F(U_{i0} ∩ … ∩ U_{in})."""

    def __init__(self, sheaf: VectorSheaf, opens, top: int = 2):
        self.sheaf = sheaf
        self.opens = _validate_cover(sheaf.space, opens)
        I = range(len(self.opens))
        self.spaces = [CochainSpace(sheaf, [((i,), self.opens[i]) for i in I])]
        self.diffs = []
        for n in range(top + 1):
            src = self.spaces[-1]
            targets = []
            for t in itertools.product(I, repeat=n + 2):
                U = self.inter(t)
                if not U:
                    continue
                faces = [((-1) ** k, t[:k] + t[k + 1:]) for k in range(n + 2)]
                targets.append((t, U, faces))
            if n < top:
                dst, M = _differential(sheaf, src, targets)
                self.spaces.append(dst)
                self.diffs.append(M)
            else:
                self._top_targets = targets
        F = sheaf.field
        Z_top = _kernel_of_row_blocks(F, (_face_rows(sheaf, U, faces, self.spaces[top]) for _, U, faces in self._top_targets),
                                      self.spaces[top].dim)
        self._Z_top = Z_top
        self.top = top
        self.H = self._cohomology()

    def inter(self, t) -> frozenset:
        U = self.sheaf.space.whole
        for i in t:
            U = U & self.opens[i]
        return U

    def _cohomology(self) -> Cohomology:
        F = self.sheaf.field
        dims_c = [s.dim for s in self.spaces]
        diffs = list(self.diffs)
        # top differential replaced by its kernel: encode as constraint rows whose nullspace is Z_top
        Z = self._Z_top
        n = dims_c[-1]
        diffs.append(la.nullspace(F, Z) if Z.shape[0] else F.eye(n))
        return _cohomology_from_differentials(F, dims_c, diffs, self.top)

    @property
    def dims(self) -> list:
        return self.H.dims

    def pullback(self, other: "CechComplex", pi, n: int) -> np.ndarray:
        """Matrix C^n(self) → C^n(other) induced by π: I′ → I with U′_i ⊆ U_{π(i)}."""
        F = self.sheaf.field
        src, dst = self.spaces[n], other.spaces[n]
        M = F.zeros((dst.dim, src.dim))
        for key in dst.keys():
            tk = tuple(pi[i] for i in key)
            if tk not in src.offsets:
                continue
            R = self.sheaf.restrict(src.opens[tk], dst.opens[key])
            o, p = dst.offsets[key], src.offsets[tk]
            M[o:o + R.shape[0], p:p + R.shape[1]] = R
        return M


def cech_h(sheaf: VectorSheaf, opens, degree: int = 2) -> list[int]:
    """Dimensions of unordered Čech cohomology H^0..H^degree."""
    return CechComplex(sheaf, opens, degree).dims


def cech_refinement(coarse: CechComplex, fine: CechComplex, pi, n: int) -> np.ndarray:
    """Class-level map Ȟ^n(coarse) → Ȟ^n(fine); raises if cocycles or coboundaries are not preserved."""
    F = coarse.sheaf.field
    for i, U in enumerate(fine.opens):
        if not U <= coarse.opens[pi[i]]:
            raise NotARefinement("open not contained in its image", index=i)
    P = coarse.pullback(fine, pi, n)
    Hc, Hf = coarse.H, fine.H
    cols = []
    for k in range(Hc.dims[n]):
        e = [0] * Hc.dims[n]
        e[k] = 1
        z = Hc.representative(n, e)
        cols.append(Hf.classify(n, F.reduce(P @ z)))
    if n:
        # coboundaries go to coboundaries
        for row in (la.row_basis(F, coarse.diffs[n - 1].T.copy()) if coarse.diffs[n - 1].size else []):
            if np.any(Hf.classify(n, F.reduce(P @ row)) != 0):
                raise NotARefinement("pullback does not preserve coboundaries")
    return np.stack(cols, axis=1) if cols else F.zeros((Hf.dims[n], 0))


# covers of level 2 --------------------------------------------------------------------------


class Cover2:
    """Opens {U_i} and, for each i0 < i1, a cover of U_{i0} ∩ U_{i1} (shared by (i1, i0)).

    The cover of U_i ∩ U_i is the single set U_i, indexed by 0 (the underscore).
    """

    def __init__(self, space: FiniteSpace, opens, second: dict | None = None):
        self.space = space
        self.opens = _validate_cover(space, opens)
        self.second = {}
        n = len(self.opens)
        second = second or {}
        for i0 in range(n):
            for i1 in range(i0 + 1, n):
                inter = self.opens[i0] & self.opens[i1]
                pieces = second.get((i0, i1), second.get((i1, i0)))
                if pieces is None:
                    pieces = [inter] if inter else []
                pieces = tuple(frozenset(V) for V in pieces)
                for V in pieces:
                    if not space.is_open(V) or not V <= inter:
                        raise InvalidCover("second-level piece is not an open of the intersection", pair=[i0, i1])
                if frozenset().union(*pieces) != inter:
                    raise InvalidCover("second-level pieces do not cover the intersection", pair=[i0, i1])
                self.second[(i0, i1)] = pieces

    @property
    def size(self) -> int:
        return len(self.opens)

    def J(self, i0: int, i1: int) -> tuple:
        if i0 == i1:
            return (self.opens[i0],)
        return self.second[(min(i0, i1), max(i0, i1))]

    def piece(self, i0: int, i1: int, j: int) -> frozenset:
        return self.J(i0, i1)[j]

    def to_json(self) -> dict:
        return {"opens": [list(self.space.sort(U)) for U in self.opens],
                "second": {f"{a},{b}": [list(self.space.sort(V)) for V in pcs] for (a, b), pcs in self.second.items()}}

    @classmethod
    def from_json(cls, space: FiniteSpace, obj) -> "Cover2":
        sec = {}
        for key, pcs in (obj.get("second") or {}).items():
            a, b = (int(s) for s in key.strip("()[] ").split(","))
            sec[(a, b)] = pcs
        return cls(space, obj["opens"], sec)


def trivial_cover2(space: FiniteSpace, opens) -> Cover2:
    """Second-level covers are the full intersections: the Čech case."""
    return Cover2(space, opens)


def minimal_open_cover2(space: FiniteSpace, points: list | None = None) -> Cover2:
    """Minimal opens of the minimal points, and minimal opens of the minimal points of each intersection."""
    pts = points if points is not None else space.minimal_points(space.whole)
    opens = [space.minimal_open(x) for x in pts]
    second = {}
    for i0 in range(len(opens)):
        for i1 in range(i0 + 1, len(opens)):
            inter = opens[i0] & opens[i1]
            second[(i0, i1)] = [space.minimal_open(z) for z in space.minimal_points(inter)]
    return Cover2(space, opens, second)


class HyperH2:
    """H²(𝒰, ℱ) = Z²/B² for a cover of level 2, with cochain spaces and differentials."""

    def __init__(self, cover: Cover2, sheaf: VectorSheaf):
        if cover.space != sheaf.space:
            raise InvalidCover("cover and sheaf live on different spaces")
        self.cover, self.sheaf = cover, sheaf
        F = sheaf.field
        n = cover.size
        I = range(n)
        J = cover.J
        self.c1_items = [((i0, i1, j), cover.piece(i0, i1, j))
                         for i0 in I for i1 in I for j in range(len(J(i0, i1)))]
        self.C1 = CochainSpace(sheaf, self.c1_items)
        targets = []
        for i0, i1, i2 in itertools.product(I, repeat=3):
            for j12, j02, j01 in itertools.product(range(len(J(i1, i2))), range(len(J(i0, i2))), range(len(J(i0, i1)))):
                U = cover.piece(i1, i2, j12) & cover.piece(i0, i2, j02) & cover.piece(i0, i1, j01)
                if not U:
                    continue
                faces = [(1, (i1, i2, j12)), (-1, (i0, i2, j02)), (1, (i0, i1, j01))]
                targets.append(((i0, i1, i2, j12, j02, j01), U, faces))
        self.C2, self.d1 = _differential(sheaf, self.C1, targets)
        self.Z2 = _kernel_of_row_blocks(F, (_face_rows(sheaf, U, faces, self.C2) for U, faces in self._d2_targets()),
                                        self.C2.dim)
        Bsp = la.row_basis(F, self.d1.T.copy()) if self.d1.size else F.zeros((0, self.C2.dim))
        self._Z = la.Basis(F, self.Z2)
        if Bsp.shape[0] and not all(self._Z.contains(b) for b in Bsp):
            raise AssertionError("coboundaries are not cocycles")
        self.B2 = Bsp
        self.quotient = la.Quotient(F, self._Z.coords(Bsp) if Bsp.shape[0] else F.zeros((0, self._Z.dim)), self._Z.dim)
        self.dim = self.quotient.dim

    def _d2_targets(self):
        cover = self.cover
        I = range(cover.size)
        pairs = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]
        for ip in itertools.product(I, repeat=4):
            ranges = [range(len(cover.J(ip[a], ip[b]))) for a, b in pairs]
            yield from self._d2_rec(ip, pairs, ranges, 0, {}, self.sheaf.space.whole)

    def _d2_rec(self, ip, pairs, ranges, k, jp, U):
        if k == len(pairs):
            i0, i1, i2, i3 = ip
            j = jp
            faces = [(1, (i1, i2, i3, j[(2, 3)], j[(1, 3)], j[(1, 2)])),
                     (-1, (i0, i2, i3, j[(2, 3)], j[(0, 3)], j[(0, 2)])),
                     (1, (i0, i1, i3, j[(1, 3)], j[(0, 3)], j[(0, 1)])),
                     (-1, (i0, i1, i2, j[(1, 2)], j[(0, 2)], j[(0, 1)]))]
            yield U, faces
            return
        a, b = pairs[k]
        for j in ranges[k]:
            V = U & self.cover.piece(ip[a], ip[b], j)
            if V:
                jp2 = dict(jp)
                jp2[(a, b)] = j
                yield from self._d2_rec(ip, pairs, ranges, k + 1, jp2, V)

    def is_cocycle(self, rho) -> bool:
        return self._Z.contains(np.asarray(rho))

    def classify(self, rho) -> np.ndarray:
        if not self.is_cocycle(rho):
            raise ValueError("not a 2-cocycle")
        return self.quotient(self._Z.coords(np.asarray(rho)))

    def representative(self, c) -> np.ndarray:
        F = self.sheaf.field
        if not self.dim:
            return F.zeros(self.C2.dim)
        z = F.reduce(self.quotient.lift @ F.array(list(c)).reshape(-1))
        return F.reduce(z @ self.Z2)

    def representatives(self) -> list[np.ndarray]:
        return [self.representative([int(i == k) for i in range(self.dim)]) for k in range(self.dim)]

    def coboundary(self, rho1) -> np.ndarray:
        return self.sheaf.field.reduce(self.d1 @ np.asarray(rho1))


def hyper_h2(cover: Cover2, sheaf: VectorSheaf) -> HyperH2:
    return HyperH2(cover, sheaf)


# comparison with derived-functor H² ---------------------------------------------------------


class Comparison:
    """The natural map H²(𝒰, ℱ) → H²(X, ℱ), computed through a Godement resolution."""

    def __init__(self, cover: Cover2, sheaf: VectorSheaf, resolution: GodementResolution | None = None,
                 hyper: HyperH2 | None = None, godement: Cohomology | None = None):
        self.cover, self.sheaf = cover, sheaf
        self.R = resolution or GodementResolution(sheaf, 3)
        self.hyper = hyper or HyperH2(cover, sheaf)
        self.godement = godement or godement_cohomology(sheaf, 2, self.R)
        G0, G1, G2 = self.R.G[0], self.R.G[1], self.R.G[2]
        self.H_G0 = HyperH2(cover, G0)
        self.cech_G1 = CechComplex(G1, cover.opens, top=1)
        self._ker_d1_G0 = la.nullspace(G0.field, self.H_G0.d1)
        self._cech0_cocycles = la.nullspace(G1.field, self.cech_G1.diffs[0]) if self.cech_G1.diffs[0].shape[0] else G1.field.eye(self.cech_G1.spaces[0].dim)

    def _componentwise(self, f: SheafMap, src: CochainSpace, dst: CochainSpace, v) -> np.ndarray:
        F = self.sheaf.field
        out = F.zeros(dst.dim)
        for key in dst.keys():
            if key in src.offsets:
                M = f.on_sections(src.opens[key])
                o = dst.offsets[key]
                out[o:o + M.shape[0]] = F.reduce(M @ src.block(v, key))
        return out

    def image(self, rho, rng: random.Random | None = None) -> np.ndarray:
        """Class in H²(X, ℱ) of the image of the 2-cocycle ``rho``; ``rng`` perturbs every choice."""
        F = self.sheaf.field
        X = self.sheaf.space
        cover = self.cover
        G1, G2 = self.R.G[1], self.R.G[2]
        rho = np.asarray(rho)
        if not self.hyper.is_cocycle(rho):
            raise ValueError("not a 2-cocycle")
        # push into G0 and split there (flasque)
        rho0 = self._componentwise(self.R.eps, self.hyper.C2, self.H_G0.C2, rho)
        t0 = la.solve(F, self.H_G0.d1, rho0) if self.H_G0.d1.shape[0] else F.zeros(self.H_G0.C1.dim)
        if t0 is None:
            raise AssertionError("flasque sheaf has a non-split 2-cocycle")
        if rng is not None and self._ker_d1_G0.shape[0]:
            t0 = F.reduce(t0 + _random_combo(F, self._ker_d1_G0, rng))
        # image in G1 is a Čech 1-cocycle for {U_i}
        C1_G1 = CochainSpace(G1, self.hyper.c1_items)
        rho1 = self._componentwise(self.R.d[0], self.H_G0.C1, C1_G1, t0)
        cech1 = self.cech_G1.spaces[1]
        c = F.zeros(cech1.dim)
        for (i0, i1) in cech1.keys():
            W = cech1.opens[(i0, i1)]
            S = G1.sections(W)
            amb = F.zeros(S.ambient_dim)
            seen = set()
            for j, V in enumerate(cover.J(i0, i1)):
                key = (i0, i1, j)
                if key not in C1_G1.offsets:
                    continue
                SV = G1.sections(V)
                part = SV.ambient(C1_G1.block(rho1, key))
                for x in SV.points:
                    val = SV.stalk(part, x)
                    o = S.offsets[x]
                    if x in seen and np.any(amb[o:o + len(val)] != val):
                        raise AssertionError("pieces of the 1-cochain disagree on an overlap")
                    amb[o:o + len(val)] = val
                    seen.add(x)
            o = cech1.offsets[(i0, i1)]
            c[o:o + S.dim] = S.coords(amb)
        t1 = la.solve(F, self.cech_G1.diffs[0], c) if self.cech_G1.diffs[0].shape[0] else F.zeros(self.cech_G1.spaces[0].dim)
        if t1 is None:
            raise AssertionError("Čech 1-cocycle of a flasque sheaf is not a coboundary")
        if rng is not None and self._cech0_cocycles.shape[0]:
            t1 = F.reduce(t1 + _random_combo(F, self._cech0_cocycles, rng))
        # push to G2 and glue to a global section
        Sg = G2.sections(X.whole)
        amb = F.zeros(Sg.ambient_dim)
        seen = set()
        cech0 = self.cech_G1.spaces[0]
        for (i,) in cech0.keys():
            U = cech0.opens[(i,)]
            SU = G2.sections(U)
            loc = SU.ambient(F.reduce(self.R.d[1].on_sections(U) @ cech0.block(t1, (i,))))
            for x in SU.points:
                val = SU.stalk(loc, x)
                o = Sg.offsets[x]
                if x in seen and np.any(amb[o:o + len(val)] != val):
                    raise AssertionError("local sections of G2 disagree")
                amb[o:o + len(val)] = val
                seen.add(x)
        glob = Sg.coords(amb)
        return self.godement.classify(2, glob)

    def matrix(self) -> np.ndarray:
        F = self.sheaf.field
        cols = [self.image(r) for r in self.hyper.representatives()]
        return np.stack(cols, axis=1) if cols else F.zeros((self.godement.dims[2], 0))

    def check_well_defined(self, trials: int = 3, seed: int = 0) -> bool:
        """Recompute with random splittings and random coboundary shifts; classes must not move."""
        F = self.sheaf.field
        rng = random.Random(seed)
        reps = self.hyper.representatives() or [F.zeros(self.hyper.C2.dim)]
        B = self.hyper.B2
        for r in reps:
            base = self.image(r)
            for _ in range(trials):
                shifted = F.reduce(r + _random_combo(F, B, rng)) if B.shape[0] else r
                if np.any(self.image(shifted, rng) != base):
                    return False
        return True


def _random_combo(F: Field, rows: np.ndarray, rng: random.Random) -> np.ndarray:
    elems = list(F.elements()) if F.is_finite else [F(v) for v in range(-2, 3)]
    coeffs = F.array([rng.choice(elems) for _ in range(rows.shape[0])])
    return F.reduce(coeffs @ rows)


def comparison_to_h2(cover: Cover2, sheaf: VectorSheaf, cls) -> np.ndarray:
    """Image of a class (coordinates in ``hyper_h2(cover, sheaf)``) in Godement H²."""
    C = Comparison(cover, sheaf)
    return C.image(C.hyper.representative(cls))


# refinements --------------------------------------------------------------------------------


@dataclass
class Refinement:
    coarse: Cover2
    fine: Cover2
    pi: tuple
    pi2: dict  # (i0', i1') with i0' < i1' -> tuple of target j indices

    def j_map(self, a: int, b: int, j: int) -> int:
        pa, pb = self.pi[a], self.pi[b]
        if a == b or pa == pb:
            return 0
        return self.pi2[(min(a, b), max(a, b))][j]


def make_refinement(coarse: Cover2, fine: Cover2, pi, pi2: dict) -> Refinement:
    pi = tuple(int(p) for p in pi)
    if len(pi) != fine.size:
        raise NotARefinement("π must be defined on every index of the finer cover")
    if any(pi[k] > pi[k + 1] for k in range(len(pi) - 1)):
        raise NotARefinement("π is not order-preserving", pi=list(pi))
    for i, U in enumerate(fine.opens):
        if not 0 <= pi[i] < coarse.size or not U <= coarse.opens[pi[i]]:
            raise NotARefinement("open is not inside its image", index=i)
    norm = {}
    for (a, b), pieces in fine.second.items():
        if pi[a] == pi[b]:
            norm[(a, b)] = tuple(0 for _ in pieces)
            continue
        m = (pi2 or {}).get((a, b))
        if m is None or len(m) != len(pieces):
            raise NotARefinement("missing second-level index map", pair=[a, b])
        for j, V in enumerate(pieces):
            target = coarse.J(pi[a], pi[b])
            if not 0 <= m[j] < len(target) or not V <= target[m[j]]:
                raise NotARefinement("second-level piece is not inside its image", pair=[a, b], j=j)
        norm[(a, b)] = tuple(int(x) for x in m)
    return Refinement(coarse, fine, pi, norm)


def find_refinement(coarse: Cover2, fine: Cover2) -> Refinement:
    """Search for order-preserving index maps exhibiting ``fine`` as a refinement of ``coarse``."""
    n = fine.size

    def extend(prefix):
        if len(prefix) == n:
            return prefix
        lo = prefix[-1] if prefix else 0
        for t in range(lo, coarse.size):
            if fine.opens[len(prefix)] <= coarse.opens[t]:
                got = extend(prefix + [t])
                if got is not None and _pairs_ok(coarse, fine, got):
                    return got
        return None

    pi = extend([])
    if pi is None:
        raise NotARefinement("no order-preserving index map exists")
    pi2 = {}
    for (a, b), pieces in fine.second.items():
        if pi[a] == pi[b]:
            continue
        target = coarse.J(pi[a], pi[b])
        pi2[(a, b)] = [next(j for j, W in enumerate(target) if V <= W) for V in pieces]
    return make_refinement(coarse, fine, pi, pi2)


def _pairs_ok(coarse, fine, pi) -> bool:
    for (a, b), pieces in fine.second.items():
        if pi[a] == pi[b]:
            continue
        target = coarse.J(pi[a], pi[b])
        if not all(any(V <= W for W in target) for V in pieces):
            return False
    return True


@dataclass
class RefinementMap:
    refinement: Refinement
    cochain_matrix: np.ndarray  # C²(coarse) → C²(fine)
    matrix: np.ndarray  # H²(coarse) → H²(fine)
    coarse: HyperH2
    fine: HyperH2


def refine_cover2(coarse: Cover2, fine: Cover2, sheaf: VectorSheaf, pi=None, pi2=None,
                  coarse_h: HyperH2 | None = None, fine_h: HyperH2 | None = None) -> RefinementMap:
    """Pullback of 2-cochains along a refinement and the induced map on H²."""
    ref = find_refinement(coarse, fine) if pi is None else make_refinement(coarse, fine, pi, pi2 or {})
    F = sheaf.field
    Hc = coarse_h or HyperH2(coarse, sheaf)
    Hf = fine_h or HyperH2(fine, sheaf)
    src, dst = Hc.C2, Hf.C2
    P = F.zeros((dst.dim, src.dim))
    for key in dst.keys():
        i0, i1, i2, j12, j02, j01 = key
        tk = (ref.pi[i0], ref.pi[i1], ref.pi[i2],
              ref.j_map(i1, i2, j12), ref.j_map(i0, i2, j02), ref.j_map(i0, i1, j01))
        if tk not in src.offsets:
            continue
        R = sheaf.restrict(src.opens[tk], dst.opens[key])
        o, p = dst.offsets[key], src.offsets[tk]
        P[o:o + R.shape[0], p:p + R.shape[1]] = R
    for z in Hc.Z2:
        if not Hf.is_cocycle(F.reduce(P @ z)):
            raise NotARefinement("pullback does not preserve cocycles")
    for b in Hc.B2:
        if np.any(Hf.classify(F.reduce(P @ b)) != 0):
            raise NotARefinement("pullback does not preserve coboundaries")
    cols = [Hf.classify(F.reduce(P @ r)) for r in Hc.representatives()]
    M = np.stack(cols, axis=1) if cols else F.zeros((Hf.dim, 0))
    return RefinementMap(ref, P, M, Hc, Hf)
