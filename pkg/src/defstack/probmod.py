"""Built-in deformation problems: module structures and quotient modules over a fixed algebra B.

B is a finite-dimensional commutative k-algebra (not necessarily local).  A
B-module of rank r over A is a tuple of r×r matrices over A, one per non-unit
basis element of B, reducing to the given module M modulo m_A.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import amatrix as am
from . import linalg as la
from .artin import AlgebraHom, LocalAlgebra, fiber_product
from .defun import EntrywiseProblem, check_count
from .errors import InvalidModule, InvalidQuotient, RestrictionMismatch
from .field import Field


class BaseAlgebra:
    """Commutative, associative, unital algebra with basis e_0 = 1, e_1, ..."""

    def __init__(self, F: Field, labels, table, *, name: str = ""):
        T = table if isinstance(table, np.ndarray) else F.array(table)
        n = len(labels)
        if T.shape != (n, n, n):
            raise InvalidModule("table shape does not match labels")
        eye = F.eye(n)
        for j in range(n):
            if np.any(T[0, j] != eye[j]) or np.any(T[j, 0] != eye[j]):
                raise InvalidModule("e0 is not a unit")
        if np.any(T != T.transpose(1, 0, 2)):
            raise InvalidModule("B must be commutative")
        left = F.reduce(np.tensordot(T, T, axes=([2], [0])))
        right = F.reduce(np.tensordot(T, T, axes=([2], [1])).transpose(2, 0, 1, 3))
        if np.any(left != right):
            raise InvalidModule("B is not associative")
        self.field = F
        self.labels = tuple(labels)
        self.dim = n
        self.table = T
        self.name = name
        self.recipes = self._recipes()

    @classmethod
    def from_local(cls, A: LocalAlgebra) -> "BaseAlgebra":
        B = cls(A.field, A.labels, A.table, name=A.name)
        B._local = A
        return B

    def __repr__(self):
        return f"<BaseAlgebra {self.name or self.labels} over {self.field!r}>"

    def _recipes(self):
        """Generators among the basis and, for every basis vector, a product recipe in them.

        ``recipes`` lists (monomial word, coordinates) so that e_i is a linear combination
        of generator words.
        """
        F = self.field
        n = self.dim
        T = self.table
        words = [()]
        vecs = [F.eye(n)[0]]
        gens: list[int] = []

        def span_rank(vs):
            return la.rank(F, F.array([list(v) for v in vs]))

        def closure(gs):
            ws, vs = [()], [F.eye(n)[0]]
            frontier = [0]
            while frontier:
                nxt = []
                for idx in frontier:
                    for g in gs:
                        v = F.reduce(vs[idx] @ T[:, g, :])
                        if span_rank(vs + [v]) > len(vs):
                            ws.append(ws[idx] + (g,))
                            vs.append(v)
                            nxt.append(len(vs) - 1)
                frontier = nxt
            return ws, vs

        for i in range(1, n):
            words, vecs = closure(gens)
            if len(vecs) == n:
                break
            if span_rank(vecs + [F.eye(n)[i]]) > len(vecs):
                gens.append(i)
        words, vecs = closure(gens)
        change = la.inverse(F, F.array([list(v) for v in vecs]).T)
        self.generators = gens
        return words, change


def _as_k_matrices(F: Field, mats, r=None):
    out = [F.array(m) for m in mats]
    for m in out:
        if m.ndim != 2 or m.shape[0] != m.shape[1] or (r is not None and m.shape[0] != r):
            raise InvalidModule("action matrices must be square of the module rank")
    return out


def _validate_action(B: BaseAlgebra, mats: list[np.ndarray], err=InvalidModule):
    """mats[i] acts for basis element i (mats[0] = identity)."""
    F = B.field
    n = B.dim
    for i in range(n):
        for j in range(i, n):
            lhs = F.reduce(mats[i] @ mats[j])
            rhs = F.zeros(lhs.shape)
            for m in range(n):
                if B.table[i, j, m]:
                    rhs = F.reduce(rhs + B.table[i, j, m] * mats[m])
            if np.any(lhs != rhs):
                raise err(f"action does not respect e{i}*e{j}", pair=(i, j))


class ModuleProblem(EntrywiseProblem):
    """Flat deformations of a B-module M: free A-modules with B-action lifting M."""

    name = "module"

    def __init__(self, B: BaseAlgebra, M, rank: int | None = None):
        super().__init__(B.field)
        F = B.field
        self.B = B
        mats = _as_k_matrices(F, M)
        if len(mats) != B.dim - 1:
            raise InvalidModule(f"expected {B.dim - 1} action matrices, got {len(mats)}")
        if rank is None:
            if not mats:
                raise InvalidModule("the rank must be given when B = k")
            rank = mats[0].shape[0]
        self.rank = r = rank
        self.M = [F.eye(r)] + _as_k_matrices(F, mats, r)
        _validate_action(B, self.M)

    @classmethod
    def free(cls, B: BaseAlgebra, rank: int) -> "ModuleProblem":
        """B acting on k^rank through its residue map (B local), i.e. the trivial module k^rank."""
        F = B.field
        mats = [F.zeros((rank, rank)) for _ in range(B.dim - 1)]
        return cls(B, mats, rank)

    def params(self):
        return {"kind": "module", "B": list(self.B.labels), "rank": self.rank,
                "M": [m.tolist() for m in self.M[1:]]}

    def _relations_hold(self, A: LocalAlgebra, acts: list) -> bool:
        B, r = self.B, self.rank
        F = self.field
        for i in range(1, B.dim):
            for j in range(i, B.dim):
                lhs = am.mul(A, acts[i], acts[j], r)
                rhs = tuple(A.zero for _ in range(r * r))
                for m in range(B.dim):
                    c = B.table[i, j, m]
                    if c:
                        rhs = am.add(A, rhs, tuple(A.scale(F(c), x) for x in acts[m]))
                if lhs != rhs:
                    return False
        return True

    def enumerate_objects(self, A: LocalAlgebra) -> list:
        r = self.rank
        gens = self.B.generators
        pool = list(A.maximal_ideal_elements())
        n_cand = len(pool) ** (r * r * len(gens))
        check_count(n_cand // 64, "candidate module structures (/64)")
        base = {g: am.from_scalars(A, self.M[g].tolist()) for g in gens}
        out = []
        for pert in itertools.product(itertools.product(pool, repeat=r * r), repeat=len(gens)):
            gm = {g: am.add(A, base[g], pert[k]) for k, g in enumerate(gens)}
            acts = self._assemble(A, gm)
            if self._relations_hold(A, acts):
                out.append(tuple(x for X in acts[1:] for x in X))
        return out

    def _assemble(self, A: LocalAlgebra, gen_mats: dict) -> list:
        r = self.rank
        words, change = self.B.recipes
        word_mats = []
        for w in words:
            X = am.identity(A, r)
            for g in w:
                X = am.mul(A, X, gen_mats[g], r)
            word_mats.append(X)
        # change[:, i] expresses e_i in the word basis
        acts = []
        for i in range(self.B.dim):
            acc = tuple(A.zero for _ in range(r * r))
            for wi in range(len(words)):
                c = self.field(change[wi, i])
                if c:
                    acc = am.add(A, acc, tuple(A.scale(c, x) for x in word_mats[wi]))
            acts.append(acc)
        return acts

    def enumerate_group(self, A: LocalAlgebra) -> list:
        r = self.rank
        pool = list(A.maximal_ideal_elements())
        check_count(len(pool) ** (r * r), "group elements")
        ident = am.identity(A, r)
        return [am.add(A, ident, N) for N in itertools.product(pool, repeat=r * r)]

    def blocks(self, obj) -> list:
        rr = self.rank * self.rank
        return [obj[k * rr:(k + 1) * rr] for k in range(self.B.dim - 1)]

    def act(self, A, g, obj):
        r = self.rank
        if r == 1:
            return obj  # conjugation by scalars is trivial
        g_inv = am.inverse(A, g, r)
        return tuple(x for X in self.blocks(obj) for x in am.conjugate(A, g, X, r, g_inv))

    def compose(self, A, g, h):
        return am.mul(A, g, h, self.rank)

    def identity(self, A):
        return am.identity(A, self.rank)

    def inverse(self, A, g):
        return am.inverse(A, g, self.rank)

    def base_object(self, A):
        return tuple(x for m in self.M[1:] for x in am.from_scalars(A, m.tolist()))

    def describe(self, A, obj):
        return {self.B.labels[k + 1]: am.to_text(A, X, self.rank) for k, X in enumerate(self.blocks(obj))}


@dataclass
class ModuleStructure:
    """A free rank-r A-module with B-action; ``basis_reduction`` certifies freeness."""

    algebra: LocalAlgebra
    rank: int
    action: tuple
    basis_reduction: list

    @property
    def is_free(self) -> bool:
        F = self.algebra.field
        return la.rank(F, F.array(self.basis_reduction)) == self.rank if self.rank else True


def module_fiber_product(problem: ModuleProblem, N1, N2, p1: AlgebraHom, p2: AlgebraHom):
    """Glue N′ over A′ and N″ over A″ along A′ → A ← A″; returns (FiberProduct, ModuleStructure)."""
    fp = fiber_product(p1, p2)
    A = p1.target
    if problem.fiber(A).iso(problem.pushforward(p1, N1), problem.pushforward(p2, N2)) is None:
        raise RestrictionMismatch("modules are not isomorphic over the common quotient")
    glued = problem.glue(fp, N1, N2)
    B = fp.algebra
    r = problem.rank
    # the standard basis of B^r reduces to the standard basis of k^r, so the module is free
    red = [[1 if i == j else 0 for j in range(r)] for i in range(r)]
    return fp, ModuleStructure(B, r, glued, red)


class QuotientProblem(EntrywiseProblem):
    """Deformations of a quotient E ↠ F of B-modules, as normalised charts q = [I | X]."""

    name = "quotient"

    def __init__(self, B: BaseAlgebra, E, q0):
        super().__init__(B.field)
        F = B.field
        self.B = B
        mats = [F.array(m) for m in E]
        if len(mats) != B.dim - 1:
            raise InvalidQuotient(f"expected {B.dim - 1} action matrices for E")
        q = F.array(q0)
        if q.ndim != 2:
            raise InvalidQuotient("q0 must be a matrix")
        self.n = n = q.shape[1]
        self.E = [F.eye(n)] + mats
        _validate_action(B, self.E, InvalidQuotient)
        R, piv = la.rref(F, q)
        if len(piv) != q.shape[0]:
            raise InvalidQuotient("q0 is not surjective")
        self.s = s = q.shape[0]
        self.pivots = piv
        self.free_cols = [c for c in range(n) if c not in piv]
        self.q0 = R[:s]
        for b in self.E[1:]:
            if self._induced(F, self.q0, b) is None:
                raise InvalidQuotient("the kernel of q0 is not a submodule")
        self._raw = (E, q0)

    def params(self):
        return {"kind": "quotient", "B": list(self.B.labels), "E": [m.tolist() for m in self.E[1:]],
                "q0": self.q0.tolist()}

    @staticmethod
    def _induced(F, q, b):
        """F-action matrix fb with q·b = fb·q for normalised q, or None if ker q is not stable."""
        qb = F.reduce(q @ b)
        _, piv = la.rref(F, q)
        fb = qb[:, piv]
        return fb if np.all(F.reduce(fb @ q) == qb) else None

    def _chart(self, A: LocalAlgebra, X) -> list:
        """Full s×n chart over A (flat) from the free-column entries X."""
        s, n = self.s, self.n
        nf = len(self.free_cols)
        out = [A.zero] * (s * n)
        for i in range(s):
            out[i * n + self.pivots[i]] = A.one
            for k, c in enumerate(self.free_cols):
                out[i * n + c] = X[i * nf + k]
        return out

    def _stable(self, A: LocalAlgebra, q) -> bool:
        """ker q is B-stable ⟺ q·E(b) = (q·E(b))[:, pivots]·q for each generator b."""
        s, n = self.s, self.n
        for g in self.B.generators:
            Eb = self.E[g]
            qb = [A.zero] * (s * n)
            for i in range(s):
                for j in range(n):
                    acc = A.zero
                    for k in range(n):
                        c = Eb[k, j]
                        if c and any(q[i * n + k]):
                            acc = A.add(acc, A.scale(self.field(c), q[i * n + k]))
                    qb[i * n + j] = acc
            for i in range(s):
                for j in range(n):
                    acc = A.zero
                    for t in range(s):
                        x = qb[i * n + self.pivots[t]]
                        if any(x):
                            acc = A.add(acc, A.mul(x, q[t * n + j]))
                    if acc != qb[i * n + j]:
                        return False
        return True

    def enumerate_objects(self, A: LocalAlgebra) -> list:
        nf = len(self.free_cols)
        pool = list(A.maximal_ideal_elements())
        check_count(len(pool) ** (self.s * nf) // 64, "candidate quotients (/64)")
        base = [A.scale(self.field(self.q0[i, c]), A.one) for i in range(self.s) for c in self.free_cols]
        out = []
        for pert in itertools.product(pool, repeat=self.s * nf):
            X = tuple(A.add(b, e) for b, e in zip(base, pert))
            if self._stable(A, self._chart(A, X)):
                out.append(X)
        return out

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

    def lift_morphism(self, f, g):
        return ()

    def base_object(self, A):
        return tuple(A.scale(self.field(self.q0[i, c]), A.one) for i in range(self.s) for c in self.free_cols)

    def describe(self, A, obj):
        n = self.n
        q = self._chart(A, obj)
        return [[A.format(q[i * n + j]) for j in range(n)] for i in range(self.s)]

    def kernel_module(self):
        """(G action matrices, F action matrices) over k for the oracle Hom_B(G, F)."""
        F = self.field
        G = la.nullspace(F, self.q0)  # rows spanning ker q0
        Gb = la.Basis(F, G) if G.shape[0] else None
        g_acts, f_acts = [], []
        lift = F.zeros((self.n, self.s))
        for i, c in enumerate(self.pivots):
            lift[c, i] = F.one
        for b in self.E[1:]:
            if Gb is not None:
                img = F.reduce(G @ b.T)  # rows: b·g for basis g
                g_acts.append(F.reduce(Gb.coords(img).T))
            else:
                g_acts.append(F.zeros((0, 0)))
            f_acts.append(F.reduce(self.q0 @ b @ lift))
        return g_acts, f_acts


def base_algebra(obj) -> BaseAlgebra:
    if isinstance(obj, BaseAlgebra):
        return obj
    if isinstance(obj, LocalAlgebra):
        return BaseAlgebra.from_local(obj)
    raise TypeError("expected a BaseAlgebra or LocalAlgebra")


def module_problem(B, M, rank: int | None = None) -> ModuleProblem:
    return ModuleProblem(base_algebra(B), M, rank)


def quotient_problem(B, E, q0) -> QuotientProblem:
    return QuotientProblem(base_algebra(B), E, q0)
