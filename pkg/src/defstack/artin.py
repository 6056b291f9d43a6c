"""Artin local k-algebras with residue field k, stored as multiplication tables.

Elements are tuples of field elements in the stored basis; index 0 is the
unit and the remaining basis vectors span the maximal ideal.
"""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field as dc_field
from typing import Iterable, Iterator, Sequence

import numpy as np

from . import linalg as la
from .errors import (
    FirstMapNotSurjective,
    InfiniteDimensional,
    LegNotSurjective,
    MaximalIdealNotNilpotent,
    NeitherMapSurjective,
    NoUnit,
    NotAHomomorphism,
    NotAssociative,
    NotCommutative,
    NotSurjective,
)
from .field import Field

Element = tuple


@dataclass(frozen=True)
class ValidationFailure:
    axiom: str
    witness: tuple
    message: str

    def to_json(self) -> dict:
        return {"axiom": self.axiom, "witness": list(self.witness), "message": self.message}


_FAILURES = {
    "unit": NoUnit,
    "commutativity": NotCommutative,
    "associativity": NotAssociative,
    "nilpotency": MaximalIdealNotNilpotent,
}


def _m_powers(F: Field, T: np.ndarray):
    """Row bases of m, m^2, ... until zero; ``None`` if the chain stalls."""
    n = T.shape[0]
    cur = F.eye(n)[1:]
    powers = []
    while cur.shape[0]:
        powers.append(cur)
        prods = [F.reduce(cur @ T[:, i, :]) for i in range(1, n)]
        nxt = la.row_basis(F, np.concatenate(prods, axis=0)) if prods else cur[:0]
        if nxt.shape[0] == cur.shape[0]:
            return None, cur
        cur = nxt
    return powers, None


def validate_table(F: Field, T: np.ndarray) -> ValidationFailure | None:
    """First violated axiom of a structure-constant array ``T[i, j, m]``."""
    n = T.shape[0]
    if T.shape != (n, n, n) or n == 0:
        return ValidationFailure("unit", (), "table must have shape (n, n, n) with n >= 1")
    eye = F.eye(n)
    for j in range(n):
        if np.any(T[0, j] != eye[j]) or np.any(T[j, 0] != eye[j]):
            return ValidationFailure("unit", (0, j), f"e0 is not a unit on e{j}")
    diff = np.argwhere(T != T.transpose(1, 0, 2))
    if len(diff):
        i, j, _ = (int(v) for v in diff[0])
        return ValidationFailure("commutativity", (i, j), f"e{i}*e{j} != e{j}*e{i}")
    left = F.reduce(np.tensordot(T, T, axes=([2], [0])))
    right = F.reduce(np.tensordot(T, T, axes=([2], [1])).transpose(2, 0, 1, 3))
    diff = np.argwhere(left != right)
    if len(diff):
        i, j, k, _ = (int(v) for v in diff[0])
        return ValidationFailure("associativity", (i, j, k), f"(e{i}e{j})e{k} != e{i}(e{j}e{k})")
    off = np.argwhere(T[1:, 1:, 0] != 0)
    if len(off):
        i, j = (int(v) + 1 for v in off[0])
        return ValidationFailure("nilpotency", (i, j), f"e{i}*e{j} has a unit component")
    powers, stuck = _m_powers(F, T)
    if powers is None:
        _, piv = la.rref(F, stuck)
        return ValidationFailure(
            "nilpotency", tuple(int(c) for c in piv), "powers of the maximal ideal stabilise at a nonzero ideal"
        )
    return None


class LocalAlgebra:
    """A validated Artin local algebra.  Construct through :func:`make_algebra`."""

    def __init__(self, F: Field, labels: Sequence[str], T: np.ndarray, *, name: str = "",
                 variables: tuple[str, ...] | None = None, exponents: tuple[tuple[int, ...], ...] | None = None,
                 _m_powers_cache=None):
        self.field = F
        self.labels = tuple(labels)
        self.dim = len(self.labels)
        self.table = T
        self.table.setflags(write=False)
        self.name = name
        self.variables = variables
        self.exponents = exponents
        powers = _m_powers_cache if _m_powers_cache is not None else _m_powers(F, T)[0]
        self.m_powers = tuple(powers)
        self.nilpotency_degree = len(self.m_powers) + 1
        n = self.dim
        self._terms = [
            [tuple((m, T[i, j, m].item() if F.is_finite else T[i, j, m]) for m in range(n) if T[i, j, m] != 0)
             for j in range(n)]
            for i in range(n)
        ]
        self._key = (F, self.labels, tuple(T.reshape(-1).tolist()))
        self._hash = hash(self._key)

    # identity -------------------------------------------------------------
    def __eq__(self, other):
        return isinstance(other, LocalAlgebra) and self._key == other._key

    def __hash__(self):
        return self._hash

    def __repr__(self):
        tag = self.name or "LocalAlgebra"
        return f"<{tag} over {self.field!r}, dim {self.dim}>"

    # elements -------------------------------------------------------------
    @property
    def zero(self) -> Element:
        return (self.field.zero,) * self.dim

    @property
    def one(self) -> Element:
        return self.basis(0)

    def basis(self, i: int) -> Element:
        F = self.field
        return tuple(F.one if j == i else F.zero for j in range(self.dim))

    def add(self, a: Element, b: Element) -> Element:
        norm = self.field.norm
        return tuple(norm(x + y) for x, y in zip(a, b))

    def sub(self, a: Element, b: Element) -> Element:
        norm = self.field.norm
        return tuple(norm(x - y) for x, y in zip(a, b))

    def neg(self, a: Element) -> Element:
        norm = self.field.norm
        return tuple(norm(-x) for x in a)

    def scale(self, c, a: Element) -> Element:
        norm = self.field.norm
        return tuple(norm(c * x) for x in a)

    def mul(self, a: Element, b: Element) -> Element:
        res = [0] * self.dim
        terms = self._terms
        for i, ai in enumerate(a):
            if not ai:
                continue
            row = terms[i]
            for j, bj in enumerate(b):
                if not bj:
                    continue
                s = ai * bj
                for m, c in row[j]:
                    res[m] += s * c
        norm = self.field.norm
        return tuple(norm(x) if x else self.field.zero for x in res)

    def residue(self, a: Element):
        return a[0]

    def in_maximal_ideal(self, a: Element) -> bool:
        return a[0] == 0

    def is_unit(self, a: Element) -> bool:
        return a[0] != 0

    def inverse(self, a: Element) -> Element:
        """Inverse of a unit via the finite geometric series in the nilpotent part."""
        F = self.field
        c = F.inv(a[0])
        u = self.scale(c, a)
        n = self.sub(self.one, u)  # u = 1 - n with n nilpotent
        total, power = self.one, self.one
        for _ in range(self.nilpotency_degree):
            power = self.mul(power, n)
            total = self.add(total, power)
        return self.scale(c, total)

    def elements(self) -> Iterator[Element]:
        return itertools.product(list(self.field.elements()), repeat=self.dim)

    def maximal_ideal_elements(self) -> Iterator[Element]:
        zero = self.field.zero
        for rest in itertools.product(list(self.field.elements()), repeat=self.dim - 1):
            yield (zero,) + rest

    def vector(self, a: Element) -> np.ndarray:
        return self.field.array(list(a))

    def from_vector(self, v) -> Element:
        F = self.field
        return tuple(F(x) for x in np.asarray(v).tolist())

    def mult_matrix(self, a: Element) -> np.ndarray:
        """Matrix of b ↦ a·b acting on column vectors."""
        F = self.field
        return F.reduce(np.tensordot(self.field.array(list(a)), self.table, axes=([0], [0])).T)

    def element(self, spec) -> Element:
        """Build an element from coefficients, a ``{label: c}`` dict, or text like ``"y*t + 2*x"``."""
        F = self.field
        if isinstance(spec, str):
            return self._parse(spec)
        if isinstance(spec, dict):
            out = list(self.zero)
            for lab, c in spec.items():
                idx = self.labels.index(lab)
                out[idx] = F.norm(out[idx] + F(c))
            return tuple(out)
        vals = list(spec)
        if len(vals) != self.dim:
            raise ValueError(f"expected {self.dim} coordinates, got {len(vals)}")
        return tuple(F(v) for v in vals)

    def _parse(self, text: str) -> Element:
        F = self.field
        out = self.zero
        text = text.replace(" ", "").replace("-", "+-")
        for term in filter(None, text.split("+")):
            coeff = F.one
            sign = term.startswith("-")
            term = term.lstrip("-")
            m = re.match(r"^(\d+(?:/\d+)?)(?:\*|$)", term)
            if m:
                coeff = F(_frac(m.group(1)))
                term = term[m.end():]
            if sign:
                coeff = F.norm(-coeff)
            vec = self._monomial(term) if term else self.one
            out = self.add(out, self.scale(coeff, vec))
        return out

    def _monomial(self, word: str) -> Element:
        if word in self.labels:
            return self.basis(self.labels.index(word))
        if self.variables is None:
            raise ValueError(f"unknown basis label {word!r}")
        exps = parse_monomial(word, self.variables)
        try:
            return self.basis(self.exponents.index(exps))
        except ValueError:
            return self.zero  # divisible by a relation

    def format(self, a: Element) -> str:
        parts = []
        for c, lab in zip(a, self.labels):
            if c == 0:
                continue
            if lab == "1":
                parts.append(str(c))
            else:
                parts.append(lab if c == 1 else f"{c}*{lab}")
        return " + ".join(parts) if parts else "0"

    def to_json(self) -> dict:
        if self.variables is not None:
            rels = getattr(self, "_relations", None)
            if rels is not None:
                return {"field": self.field.to_json(), "monomial": {"vars": list(self.variables), "relations": rels}}
        return {
            "field": self.field.to_json(),
            "table": {"labels": list(self.labels), "mult": _table_to_json(self.table)},
        }


def _frac(s: str):
    from fractions import Fraction

    return Fraction(s)


def _table_to_json(T: np.ndarray):
    return [[[str(x) if not isinstance(x, (int, np.integer)) else int(x) for x in T[i, j]]
             for j in range(T.shape[1])] for i in range(T.shape[0])]


def _coerce_table(F: Field, mult_table) -> np.ndarray:
    if isinstance(mult_table, np.ndarray):
        return F.reduce(mult_table) if F.is_finite else F.array(mult_table.tolist())
    return F.array(mult_table)


def make_algebra(F: Field, basis_labels: Sequence[str], mult_table, *, name: str = "") -> LocalAlgebra:
    """Validate a structure-constant table ``mult_table[i][j][m]``; raise the first failure."""
    T = _coerce_table(F, mult_table)
    if T.shape != (len(basis_labels),) * 3:
        raise NoUnit(f"table shape {T.shape} does not match {len(basis_labels)} labels")
    failure = validate_table(F, T)
    if failure is not None:
        raise _FAILURES[failure.axiom](failure.message, failure.witness)
    return LocalAlgebra(F, basis_labels, T, name=name)


def try_make_algebra(F: Field, basis_labels, mult_table) -> LocalAlgebra | ValidationFailure:
    """Like :func:`make_algebra` but returns the failure as a value."""
    T = _coerce_table(F, mult_table)
    if T.shape != (len(basis_labels),) * 3:
        return ValidationFailure("unit", (), "table shape does not match labels")
    failure = validate_table(F, T)
    return failure if failure is not None else LocalAlgebra(F, basis_labels, T)


def _algebra_from_products(F: Field, labels, product, n: int, **kw) -> LocalAlgebra:
    """Build from a trusted product function ``product(i, j) -> coefficient vector``."""
    T = F.zeros((n, n, n))
    for i in range(n):
        for j in range(i, n):
            T[i, j] = T[j, i] = F.array(list(product(i, j)))
    failure = validate_table(F, T)
    if failure is not None:
        raise _FAILURES[failure.axiom](failure.message, failure.witness)
    return LocalAlgebra(F, labels, T, **kw)


# monomial presentations -----------------------------------------------------------------

def parse_monomial(word, variables: Sequence[str]) -> tuple[int, ...]:
    """Exponent vector of ``"x^2*t"``, ``"xt"``, a dict or an exponent tuple."""
    if isinstance(word, dict):
        return tuple(int(word.get(v, 0)) for v in variables)
    if not isinstance(word, str):
        exps = tuple(int(e) for e in word)
        if len(exps) != len(variables):
            raise ValueError("exponent vector has wrong length")
        return exps
    exps = [0] * len(variables)
    names = sorted(variables, key=len, reverse=True)
    rest = word.replace("*", "").replace(" ", "")
    if rest == "1":
        return tuple(exps)
    while rest:
        for v in names:
            if rest.startswith(v):
                rest = rest[len(v):]
                m = re.match(r"^\^?(\d+)", rest) if rest.startswith("^") else None
                power = 1
                if m:
                    power = int(m.group(1))
                    rest = rest[m.end():]
                exps[variables.index(v)] += power
                break
        else:
            raise ValueError(f"cannot parse monomial {word!r} in variables {list(variables)}")
    return tuple(exps)


def monomial_label(exps: Sequence[int], variables: Sequence[str]) -> str:
    parts = [v if e == 1 else f"{v}^{e}" for v, e in zip(variables, exps) if e]
    return "*".join(parts) if parts else "1"


def monomial_quotient(F: Field, variables: Sequence[str], relations: Iterable, *, cap: int = 512,
                      name: str = "") -> LocalAlgebra:
    """k[variables]/(monomial relations) with the standard monomials as basis."""
    variables = tuple(variables)
    rel_list = list(relations)
    rels = [parse_monomial(r, variables) for r in rel_list]
    if any(sum(r) == 0 for r in rels):
        raise ValueError("the relation 1 gives the zero ring")
    nv = len(variables)

    def standard(e):
        return not any(all(a >= b for a, b in zip(e, r)) for r in rels)

    seen = {(0,) * nv}
    frontier = [(0,) * nv]
    while frontier:
        nxt = []
        for e in frontier:
            for k in range(nv):
                f = e[:k] + (e[k] + 1,) + e[k + 1:]
                if f not in seen and standard(f):
                    seen.add(f)
                    nxt.append(f)
                    if len(seen) > cap:
                        raise InfiniteDimensional(
                            f"more than {cap} standard monomials; is every variable nilpotent?", cap=cap
                        )
        frontier = nxt
    exps = sorted(seen, key=lambda e: (sum(e), tuple(-x for x in e)))
    index = {e: i for i, e in enumerate(exps)}
    n = len(exps)
    T = F.zeros((n, n, n))
    for i, a in enumerate(exps):
        for j, b in enumerate(exps):
            c = tuple(x + y for x, y in zip(a, b))
            if c in index:
                T[i, j, index[c]] = F.one
    labels = [monomial_label(e, variables) for e in exps]
    if not name:
        name = f"k[{','.join(variables)}]/({','.join(monomial_label(r, variables) for r in rels)})" if rels else ""
    A = LocalAlgebra(F, labels, T, name=name, variables=variables, exponents=tuple(exps))
    A._relations = [monomial_label(r, variables) for r in rels]
    return A


def residue_field(F: Field) -> LocalAlgebra:
    return LocalAlgebra(F, ["1"], F.array([[[1]]]), name="k", variables=(), exponents=((),))


def k_of_V(F: Field, d: int) -> LocalAlgebra:
    """k[V] = k ⊕ V with V² = 0 and dim V = d."""
    if d < 1:
        raise ValueError("d must be at least 1")
    names = ["e"] if d == 1 else [f"v{i}" for i in range(1, d + 1)]
    rels = [a + "*" + b for a, b in itertools.combinations_with_replacement(names, 2)]
    A = monomial_quotient(F, names, rels, name="k[e]" if d == 1 else f"k[V{d}]")
    return A


# homomorphisms --------------------------------------------------------------------------

class AlgebraHom:
    """A unital algebra map; ``matrix`` has shape (target.dim, source.dim)."""

    def __init__(self, source: LocalAlgebra, target: LocalAlgebra, matrix, *, check: bool = True):
        F = source.field
        if target.field != F:
            raise ValueError("source and target live over different fields")
        M = matrix if isinstance(matrix, np.ndarray) else F.array(matrix)
        M = F.reduce(M) if F.is_finite else M
        if M.shape != (target.dim, source.dim):
            raise ValueError(f"matrix shape {M.shape} != ({target.dim}, {source.dim})")
        self.source = source
        self.target = target
        self.matrix = M
        self.matrix.setflags(write=False)
        self._cols = [target.from_vector(M[:, i]) for i in range(source.dim)]
        if check:
            problem = self.defect()
            if problem:
                raise NotAHomomorphism(problem)

    def defect(self) -> str | None:
        S, T = self.source, self.target
        if self._cols[0] != T.one:
            return "unit is not sent to the unit"
        for i in range(1, S.dim):
            for j in range(i, S.dim):
                lhs = self(S.mul(S.basis(i), S.basis(j)))
                rhs = T.mul(self._cols[i], self._cols[j])
                if lhs != rhs:
                    return f"not multiplicative on ({S.labels[i]}, {S.labels[j]})"
        return None

    def __call__(self, a: Element) -> Element:
        T = self.target
        norm = T.field.norm
        res = [0] * T.dim
        for ai, col in zip(a, self._cols):
            if ai:
                for m, c in enumerate(col):
                    if c:
                        res[m] += ai * c
        return tuple(norm(x) if x else T.field.zero for x in res)

    def __eq__(self, other):
        return (isinstance(other, AlgebraHom) and self.source == other.source and self.target == other.target
                and bool(np.all(self.matrix == other.matrix)))

    def __hash__(self):
        return hash((self.source, self.target, tuple(self.matrix.reshape(-1).tolist())))

    def __repr__(self):
        return f"<AlgebraHom {self.source!r} -> {self.target!r}>"

    def __matmul__(self, other: "AlgebraHom") -> "AlgebraHom":
        """``g @ f`` is the composite g∘f."""
        if other.target != self.source:
            raise ValueError("maps are not composable")
        F = self.source.field
        return AlgebraHom(other.source, self.target, F.reduce(self.matrix @ other.matrix), check=False)

    @property
    def rank(self) -> int:
        return la.rank(self.source.field, self.matrix)

    def is_surjective(self) -> bool:
        return self.rank == self.target.dim

    def is_injective(self) -> bool:
        return self.rank == self.source.dim

    def kernel(self) -> np.ndarray:
        """Echelonised basis rows of the kernel (source coordinates)."""
        F = self.source.field
        ker = la.nullspace(F, self.matrix)
        return la.row_basis(F, ker) if ker.shape[0] else ker

    def section(self) -> np.ndarray:
        """A linear right inverse (source.dim × target.dim) of a surjective map."""
        F = self.source.field
        cols = []
        for i in range(self.target.dim):
            x = la.solve(F, self.matrix, F.eye(self.target.dim)[i])
            if x is None:
                raise NotSurjective("map is not surjective")
            cols.append(x)
        return F.array([list(c) for c in cols]).T if cols else F.zeros((self.source.dim, 0))

    def images(self) -> dict[str, str]:
        return {lab: self.target.format(c) for lab, c in zip(self.source.labels, self._cols)}

    def to_json(self) -> dict:
        return {
            "source": self.source.to_json(),
            "target": self.target.to_json(),
            "matrix": [[_scalar_json(x) for x in row] for row in self.matrix.tolist()],
        }


def _scalar_json(x):
    return int(x) if isinstance(x, (int, np.integer)) else str(x)


def identity(A: LocalAlgebra) -> AlgebraHom:
    return AlgebraHom(A, A, A.field.eye(A.dim), check=False)


def residue_map(A: LocalAlgebra) -> AlgebraHom:
    F = A.field
    M = F.zeros((1, A.dim))
    M[0, 0] = F.one
    return AlgebraHom(A, residue_field(F), M, check=False)


def structure_map(A: LocalAlgebra) -> AlgebraHom:
    """The inclusion k → A."""
    F = A.field
    M = F.zeros((A.dim, 1))
    M[0, 0] = F.one
    return AlgebraHom(residue_field(F), A, M, check=False)


def generators(A: LocalAlgebra) -> list[Element]:
    """Basis vectors of m that lift a basis of m/m²."""
    F = A.field
    chosen = A.m_powers[1] if len(A.m_powers) > 1 else F.zeros((0, A.dim))
    gens = []
    for i in range(1, A.dim):
        e = F.eye(A.dim)[i:i + 1]
        if not la.in_span(F, chosen, e[0]):
            chosen = np.concatenate([chosen, e], axis=0)
            gens.append(A.basis(i))
    return gens


def _monomial_basis(A: LocalAlgebra, gens: Sequence[Element]):
    """Monomials in ``gens`` forming a basis of A, each with a recipe (parent, generator)."""
    F = A.field
    recipes = [(None, None)]
    vecs = [A.one]
    span = F.array([list(A.one)])
    frontier = [0]
    while frontier:
        nxt = []
        for idx in frontier:
            for g, gv in enumerate(gens):
                v = A.mul(vecs[idx], gv)
                cand = np.concatenate([span, F.array([list(v)])], axis=0)
                if la.rank(F, cand) > span.shape[0]:
                    span = cand
                    vecs.append(v)
                    recipes.append((idx, g))
                    nxt.append(len(vecs) - 1)
        frontier = nxt
    if span.shape[0] != A.dim:
        raise ValueError("elements do not generate the algebra")
    return recipes, la.inverse(F, span.T)


def hom_from_generator_images(source: LocalAlgebra, target: LocalAlgebra, gens: Sequence[Element],
                              images: Sequence[Element], *, _cache=None) -> AlgebraHom | None:
    """The algebra map sending ``gens[i] ↦ images[i]``, or None if no such map exists."""
    F = source.field
    recipes, change = _cache if _cache is not None else _monomial_basis(source, gens)
    imgs = [target.one]
    for parent, g in recipes[1:]:
        imgs.append(target.mul(imgs[parent], images[g]))
    M = F.reduce(F.array([list(v) for v in imgs]).T @ change)
    hom = AlgebraHom(source, target, M, check=False)
    return None if hom.defect() else hom


def hom_from_images(source: LocalAlgebra, target: LocalAlgebra, images: dict) -> AlgebraHom:
    """Map out of a monomial presentation, given images of the variables."""
    if source.variables is None:
        raise ValueError("source has no monomial presentation")
    gens = [source.element(v) for v in source.variables]
    imgs = []
    for v in source.variables:
        spec = images.get(v, "0")
        imgs.append(target.element(spec) if not isinstance(spec, tuple) else spec)
    hom = hom_from_generator_images(source, target, gens, imgs)
    if hom is None:
        raise NotAHomomorphism("images do not satisfy the relations")
    return hom


def homomorphisms(source: LocalAlgebra, target: LocalAlgebra) -> list[AlgebraHom]:
    """All local algebra maps (finite field; brute force over generator images)."""
    gens = generators(source)
    cache = _monomial_basis(source, gens)
    pool = list(target.maximal_ideal_elements())
    out = []
    for imgs in itertools.product(pool, repeat=len(gens)):
        h = hom_from_generator_images(source, target, gens, imgs, _cache=cache)
        if h is not None:
            out.append(h)
    return out


def find_isomorphism(A: LocalAlgebra, B: LocalAlgebra) -> AlgebraHom | None:
    if A.dim != B.dim or A.field != B.field:
        return None
    if [p.shape[0] for p in A.m_powers] != [p.shape[0] for p in B.m_powers]:
        return None
    for h in homomorphisms(A, B):
        if h.is_injective():
            return h
    return None


# fiber and tensor products --------------------------------------------------------------

@dataclass
class FiberProduct:
    """B = A′ ×_A A″ with its projections; unpacks as ``(algebra, first, second)``."""

    algebra: LocalAlgebra
    first: AlgebraHom
    second: AlgebraHom
    _embed: np.ndarray = dc_field(repr=False)  # rows: basis of B inside A′ ⊕ A″
    _coords: la.Basis = dc_field(repr=False)
    base_first: AlgebraHom | None = None  # A′ → A
    base_second: AlgebraHom | None = None  # A″ → A

    def __iter__(self):
        return iter((self.algebra, self.first, self.second))

    def pair(self, a1: Element, a2: Element) -> Element:
        """The element of B with the given projections (must be compatible)."""
        F = self.algebra.field
        v = F.array(list(a1) + list(a2))
        if not self._coords.contains(v):
            raise ValueError("pair is not compatible over the common target")
        return self.algebra.from_vector(self._coords.coords(v))


def fiber_product(p1: AlgebraHom, p2: AlgebraHom) -> FiberProduct:
    if p1.target != p2.target:
        raise ValueError("maps do not share a target")
    if not (p1.is_surjective() or p2.is_surjective()):
        raise NeitherMapSurjective("at least one map into the base must be surjective")
    F = p1.source.field
    A1, A2 = p1.source, p2.source
    n1, n2 = A1.dim, A2.dim
    D = np.concatenate([p1.matrix, F.reduce(-p2.matrix)], axis=1)
    K = la.nullspace(F, D)
    # maximal ideal of B: kernel elements with zero constant term in A′ (hence in A″)
    sel = F.zeros((1, n1 + n2))
    sel[0, 0] = F.one
    mB = la.nullspace(F, np.concatenate([D, sel], axis=0))
    mB = la.row_basis(F, mB) if mB.shape[0] else mB
    unit = F.zeros((1, n1 + n2))
    unit[0, 0] = F.one
    unit[0, n1] = F.one
    rows = np.concatenate([unit, mB], axis=0)
    assert rows.shape[0] == K.shape[0]
    coords = la.Basis(F, rows)
    n = rows.shape[0]
    elems1 = [A1.from_vector(r[:n1]) for r in rows]
    elems2 = [A2.from_vector(r[n1:]) for r in rows]

    def product(i, j):
        v = list(A1.mul(elems1[i], elems1[j])) + list(A2.mul(elems2[i], elems2[j]))
        return coords.coords(F.array(v)).tolist()

    labels = ["1"] + [f"b{i}" for i in range(1, n)]
    B = _algebra_from_products(F, labels, product, n, name=f"({A1.name or 'A1'} x {A2.name or 'A2'})")
    pr1 = AlgebraHom(B, A1, rows[:, :n1].T.copy(), check=False)
    pr2 = AlgebraHom(B, A2, rows[:, n1:].T.copy(), check=False)
    return FiberProduct(B, pr1, pr2, rows, coords, p1, p2)


def ideal_closure(A: LocalAlgebra, rows: np.ndarray) -> np.ndarray:
    """Smallest subspace containing ``rows`` and stable under multiplication by A."""
    F = A.field
    cur = la.row_basis(F, rows) if rows.shape[0] else F.zeros((0, A.dim))
    mats = [A.mult_matrix(A.basis(i)) for i in range(1, A.dim)]
    while cur.shape[0]:
        prods = [F.reduce(cur @ M.T) for M in mats]
        nxt = la.row_basis(F, np.concatenate([cur] + prods, axis=0))
        if nxt.shape[0] == cur.shape[0]:
            return nxt
        cur = nxt
    return cur


def quotient_algebra(A: LocalAlgebra, ideal_rows: np.ndarray, *, name: str = "") -> tuple[LocalAlgebra, AlgebraHom]:
    """A/J for an ideal J ⊆ m (given by spanning rows); returns the algebra and projection."""
    F = A.field
    J = ideal_closure(A, ideal_rows)
    Q = la.Quotient(F, J, A.dim)
    lifts = [A.from_vector(Q.lift[:, c]) for c in range(Q.dim)]
    keep = [int(np.nonzero(Q.lift[:, c])[0][0]) for c in range(Q.dim)]
    if keep[:1] != [0]:
        raise ValueError("ideal is not proper")

    def product(i, j):
        return Q(F.array(list(A.mul(lifts[i], lifts[j])))).tolist()

    labels = [A.labels[i] for i in keep]
    kw = {}
    if A.variables is not None and _is_monomial_ideal(J):
        kw = dict(variables=A.variables, exponents=tuple(A.exponents[i] for i in keep))
    C = _algebra_from_products(F, labels, product, Q.dim, name=name, **kw)
    return C, AlgebraHom(A, C, Q.proj.copy(), check=False)


def _is_monomial_ideal(J: np.ndarray) -> bool:
    return bool(np.all((J != 0).sum(axis=1) == 1)) if J.shape[0] else True


def tensor_over(p1: AlgebraHom, p2: AlgebraHom):
    """A′ ⊗_A A″ for surjective ``p1: A → A′``: computed as A″/(p2(ker p1)).

    Returns ``(C, A′ → C, A″ → C)``.
    """
    if p1.source != p2.source:
        raise ValueError("maps do not share a source")
    if not p1.is_surjective():
        raise FirstMapNotSurjective("the first map must be surjective")
    F = p1.source.field
    A2 = p2.target
    ker = p1.kernel()
    gens = F.reduce(ker @ p2.matrix.T) if ker.shape[0] else F.zeros((0, A2.dim))
    C, q2 = quotient_algebra(A2, gens)
    q1_matrix = F.reduce(q2.matrix @ F.reduce(p2.matrix @ p1.section()))
    q1 = AlgebraHom(p1.target, C, q1_matrix, check=False)
    return C, q1, q2


# squares --------------------------------------------------------------------------------

@dataclass(frozen=True)
class Square:
    """Two maps out of a common source: ``first: A → A′`` and ``second: A → A″``."""

    first: AlgebraHom
    second: AlgebraHom

    def __post_init__(self):
        if self.first.source != self.second.source:
            raise ValueError("square legs must share a source")

    @property
    def source(self) -> LocalAlgebra:
        return self.first.source


@dataclass(frozen=True)
class SquareVerdict:
    holds: bool
    failed_clause: str | None = None
    witness: object = None
    description: str = ""

    def __bool__(self):
        return self.holds

    def to_json(self) -> dict:
        out = {"schlessinger": self.holds}
        if not self.holds:
            out["failed_clause"] = self.failed_clause
            out["witness"] = self.description
        return out


def is_schlessinger_square(sq: Square) -> SquareVerdict:
    p1, p2 = sq.first, sq.second
    A = sq.source
    F = A.field
    stacked = np.concatenate([p1.matrix, p2.matrix], axis=0)
    ker = la.nullspace(F, stacked)
    if ker.shape[0]:
        w = A.from_vector(ker[0])
        return SquareVerdict(False, "injectivity", w, f"{A.format(w)} maps to zero in A' x A''")
    if not p1.is_surjective():
        img = la.row_basis(F, p1.matrix.T.copy())
        for i in range(p1.target.dim):
            e = p1.target.basis(i)
            if not la.in_span(F, img, F.array(list(e))):
                return SquareVerdict(False, "surjectivity", e, f"{p1.target.labels[i]} is not in the image of A -> A'")
    A2 = p2.target
    kern = p1.kernel()
    S = la.row_basis(F, F.reduce(kern @ p2.matrix.T)) if kern.shape[0] else F.zeros((0, A2.dim))
    for s in S:
        s_el = A2.from_vector(s)
        for j in range(1, A2.dim):
            prod = A2.mul(s_el, A2.basis(j))
            if not la.in_span(F, S, F.array(list(prod))):
                return SquareVerdict(
                    False, "closure", (s_el, A2.basis(j)),
                    f"{A2.format(s_el)} * {A2.labels[j]} leaves the image of ker(A -> A')",
                )
    return SquareVerdict(True)


def pushforward_square(sq: Square, f: AlgebraHom) -> Square:
    """Base change of both legs along ``f: A → B`` (each B′ = A′ ⊗_A B)."""
    if f.source != sq.source:
        raise ValueError("f must start at the square's source")
    return Square(_push_leg(sq.first, f), _push_leg(sq.second, f))


def _push_leg(leg: AlgebraHom, f: AlgebraHom) -> AlgebraHom:
    if leg.is_surjective():
        _, _, b_leg = tensor_over(leg, f)
        return b_leg
    if f.is_surjective():
        _, b_leg, _ = tensor_over(f, leg)
        return b_leg
    raise LegNotSurjective("neither the leg nor the pushforward map is surjective")


@dataclass
class SelfProductReport:
    """For a Schlessinger square A → A′, A → A″ with D = A″ ⊗_A A″.

    ``I`` is the kernel of D → A‴ ⊗_{A′} A‴ (A‴ = A′ ⊗_A A″) and ``delta`` the
    kernel of multiplication D → A″.
    """

    D: LocalAlgebra
    I: np.ndarray
    delta: np.ndarray
    intersection_dim: int
    square: SquareVerdict

    @property
    def holds(self) -> bool:
        return self.intersection_dim == 0 and self.square.holds


def _pure_tensor(F: Field, x, y) -> np.ndarray:
    return F.array(np.outer(np.asarray(x, dtype=object), np.asarray(y, dtype=object)).reshape(-1).tolist())


def self_product_check(sq: Square) -> SelfProductReport:
    p1, p2 = sq.first, sq.second
    F = p1.source.field
    A2 = p2.target
    n2 = A2.dim
    D = tensor_product(p2, p2)
    # multiplication D → A″
    amb_mult = F.array([list(A2.mul(A2.basis(i), A2.basis(j))) for i in range(n2) for j in range(n2)]).T
    mult = F.reduce(amb_mult @ D.lift)
    # D → A‴ ⊗_{A′} A‴
    _, q1, q2 = tensor_over(p1, p2)
    E = tensor_product(q1, q1)
    amb_E = F.array([list(_pure_tensor(F, q2(A2.basis(i)), q2(A2.basis(j)))) for i in range(n2) for j in range(n2)]).T
    to_E = F.reduce(E.proj @ F.reduce(amb_E @ D.lift)) if E.proj.size else F.zeros((E.algebra.dim, D.algebra.dim))
    I = la.nullspace(F, to_E)
    delta = la.nullspace(F, mult)
    meet = la.intersect(F, I, delta) if I.shape[0] and delta.shape[0] else F.zeros((0, D.algebra.dim))
    B = D.algebra
    _, qI = quotient_algebra(B, I) if I.shape[0] else (B, identity(B))
    _, qd = quotient_algebra(B, delta) if delta.shape[0] else (B, identity(B))
    return SelfProductReport(B, I, delta, meet.shape[0], is_schlessinger_square(Square(qI, qd)))


# extensions -----------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Extension:
    """A surjection A′ → A with kernel data."""

    map: AlgebraHom
    kernel_basis: np.ndarray
    small: bool
    tiny: bool

    @property
    def source(self) -> LocalAlgebra:
        return self.map.source

    @property
    def target(self) -> LocalAlgebra:
        return self.map.target

    @property
    def kernel_dim(self) -> int:
        return self.kernel_basis.shape[0]

    def kernel_elements(self) -> list[Element]:
        return [self.source.from_vector(r) for r in self.kernel_basis]

    def to_json(self) -> dict:
        return {
            "source_dim": self.source.dim,
            "target_dim": self.target.dim,
            "kernel": [self.source.format(k) for k in self.kernel_elements()],
            "small": self.small,
            "tiny": self.tiny,
        }


def classify_extension(p: AlgebraHom) -> Extension:
    if not p.is_surjective():
        raise NotSurjective("an extension must be surjective")
    A1 = p.source
    ker = p.kernel()
    small = all(
        A1.mul(A1.from_vector(k), A1.basis(j)) == A1.zero for k in ker for j in range(1, A1.dim)
    )
    return Extension(p, ker, small, small and ker.shape[0] == 1)


def factor_into_tiny(p: AlgebraHom) -> list[Extension]:
    """Chain of tiny extensions composing to ``p``, peeled off the socle-most lines first."""
    if not p.is_surjective():
        raise NotSurjective("an extension must be surjective")
    F = p.source.field
    C = p.source
    to_C = identity(C)
    K = p.kernel()
    chain: list[Extension] = []
    steps = K.shape[0]
    for step in range(steps):
        if step == steps - 1:
            # close the chain with the map induced by p on the last intermediate algebra
            link = AlgebraHom(C, p.target, F.reduce(p.matrix @ _quotient_section(to_C)), check=False)
        else:
            line = None
            for power in reversed(C.m_powers):
                meet = la.intersect(F, K, power)
                if meet.shape[0]:
                    line = meet[:1]
                    break
            assert line is not None
            C2, link = quotient_algebra(C, line)
            K = F.reduce(K @ link.matrix.T)
            K = la.row_basis(F, K)
            to_C = link @ to_C
            C = C2
        chain.append(classify_extension(link))
    return chain


def _quotient_section(q: AlgebraHom) -> np.ndarray:
    return q.section()


# k[V], sigma and m_lambda -----------------------------------------------------------------

def sigma(A1: LocalAlgebra, kernel_basis) -> tuple[FiberProduct, AlgebraHom]:
    """σ: A′ ×_k k[I] → A′, (x, π(x) + i) ↦ x + i for an embedded square-zero ideal I."""
    F = A1.field
    I = kernel_basis if isinstance(kernel_basis, np.ndarray) else F.array([list(v) for v in kernel_basis])
    d = I.shape[0]
    kI = k_of_V(F, d)
    fp = fiber_product(residue_map(A1), residue_map(kI))
    B = fp.algebra
    cols = []
    for i in range(B.dim):
        x = fp.first(B.basis(i))
        y = fp.second(B.basis(i))
        v = F.array(list(x))
        for t in range(d):
            if y[t + 1]:
                v = F.reduce(v + y[t + 1] * I[t])
        cols.append(list(v))
    return fp, AlgebraHom(B, A1, F.array(cols).T.copy())


def m_lambda(F: Field, lam, d: int) -> AlgebraHom:
    V = k_of_V(F, d)
    M = F.eye(d + 1)
    for i in range(1, d + 1):
        M[i, i] = F(lam)
    return AlgebraHom(V, V, M)


@dataclass
class TensorProduct:
    """A′ ⊗_A A″ for arbitrary local maps, as a quotient of A′ ⊗_k A″.

    ``proj`` sends ambient coordinates (index i·n″ + j for e′_i ⊗ e″_j) to
    coordinates of ``algebra``; ``lift`` is a right inverse.
    """

    algebra: LocalAlgebra
    first: AlgebraHom
    second: AlgebraHom
    proj: np.ndarray
    lift: np.ndarray

    def __iter__(self):
        return iter((self.algebra, self.first, self.second))


def tensor_product(p1: AlgebraHom, p2: AlgebraHom) -> TensorProduct:
    if p1.source != p2.source:
        raise ValueError("maps do not share a source")
    F = p1.source.field
    A, A1, A2 = p1.source, p1.target, p2.target
    n1, n2 = A1.dim, A2.dim
    N = n1 * n2

    def amb(x, y):
        return F.array(np.outer(np.asarray(x, dtype=object), np.asarray(y, dtype=object)).reshape(-1).tolist())

    rels = []
    for a in range(1, A.dim):
        ea = A.basis(a)
        u, v = p1(ea), p2(ea)
        for i in range(n1):
            for j in range(n2):
                rels.append(F.reduce(amb(A1.mul(u, A1.basis(i)), A2.basis(j)) - amb(A1.basis(i), A2.mul(v, A2.basis(j)))))
    S = F.array([list(r) for r in rels]) if rels else F.zeros((0, N))
    Q = la.Quotient(F, S, N)
    # residue functional on the quotient, then a basis: unit first, then its kernel
    res = F.zeros((1, N))
    res[0, 0] = F.one
    res_q = F.reduce(res @ Q.lift)
    unit_q = Q(amb(A1.one, A2.one))
    ker_q = la.nullspace(F, res_q)
    ker_q = la.row_basis(F, ker_q) if ker_q.shape[0] else ker_q
    rows = np.concatenate([unit_q.reshape(1, -1), ker_q], axis=0)
    basis = la.Basis(F, rows)
    proj = F.reduce(basis.coords(Q.proj.T).T) if Q.dim else F.zeros((0, N))
    lift = F.reduce(Q.lift @ rows.T)
    n = rows.shape[0]
    vecs = [lift[:, c] for c in range(n)]

    def decompose(v):
        M = np.asarray(v).reshape(n1, n2)
        return [(i, j, M[i, j]) for i in range(n1) for j in range(n2) if M[i, j] != 0]

    parts = [decompose(v) for v in vecs]

    def product(a, b):
        acc = F.zeros(N)
        for i, j, c in parts[a]:
            for k, l, d in parts[b]:
                acc = F.reduce(acc + c * d * amb(A1.mul(A1.basis(i), A1.basis(k)), A2.mul(A2.basis(j), A2.basis(l))))
        return F.reduce(proj @ acc).tolist()

    labels = ["1"] + [f"c{i}" for i in range(1, n)]
    C = _algebra_from_products(F, labels, product, n)
    j1 = F.array([list(F.reduce(proj @ amb(A1.basis(i), A2.one))) for i in range(n1)]).T.copy()
    j2 = F.array([list(F.reduce(proj @ amb(A1.one, A2.basis(j)))) for j in range(n2)]).T.copy()
    return TensorProduct(C, AlgebraHom(A1, C, j1, check=False), AlgebraHom(A2, C, j2, check=False), proj, lift)
