"""Exact linear algebra over a :class:`~defstack.field.Field`.

Matrices are 2-D numpy arrays (int64 reduced mod p, or object arrays of
Fractions over QQ).  Vectors in spanning sets are stored as *rows*.
"""
from __future__ import annotations

from fractions import Fraction

import numpy as np

from .field import Field

try:  # fast exact rational elimination when available
    import flint
except ImportError:  # pragma: no cover
    flint = None


def as_matrix(F: Field, M, ncols: int | None = None) -> np.ndarray:
    if isinstance(M, np.ndarray) and M.ndim == 2:
        return M
    if ncols is not None and len(M) == 0:
        return F.zeros((0, ncols))
    return F.array(M)


def rref(F: Field, M: np.ndarray) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form and pivot columns."""
    if not F.is_finite and flint is not None and M.size and min(M.shape) > 2:
        return _rref_flint(M)
    A = M.copy()
    nrows, ncols = A.shape
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        if r == nrows:
            break
        nz = np.nonzero(A[r:, c])[0]
        if len(nz) == 0:
            continue
        piv = r + int(nz[0])
        if piv != r:
            A[[r, piv]] = A[[piv, r]]
        A[r] = F.reduce(A[r] * F.inv(A[r, c]))
        col = A[:, c].copy()
        col[r] = 0
        others = np.nonzero(col)[0]
        if len(others):
            A[others] = F.reduce(A[others] - np.outer(col[others], A[r]))
        pivots.append(c)
        r += 1
    return A, pivots


def _rref_flint(M: np.ndarray) -> tuple[np.ndarray, list[int]]:
    m, n = M.shape
    fm = flint.fmpq_mat(m, n, [flint.fmpq(x.numerator, x.denominator) for x in M.reshape(-1)])
    R, r = fm.rref()
    out = np.empty((m, n), dtype=object)
    pivots = []
    for i in range(m):
        for j in range(n):
            q = R[i, j]
            out[i, j] = Fraction(int(q.p), int(q.q))
    for i in range(r):
        row = out[i]
        pivots.append(int(np.nonzero(row)[0][0]))
    return out, pivots


def rank(F: Field, M: np.ndarray) -> int:
    if M.size == 0:
        return 0
    return len(rref(F, M)[1])


def row_basis(F: Field, M: np.ndarray) -> np.ndarray:
    """Echelonised basis (as rows) of the row space of ``M``."""
    if M.shape[0] == 0:
        return M[:0]
    R, piv = rref(F, M)
    return R[: len(piv)]


def nullspace(F: Field, M: np.ndarray) -> np.ndarray:
    """Rows spanning ``{x : M @ x = 0}``."""
    ncols = M.shape[1]
    if M.shape[0] == 0:
        return F.eye(ncols)
    R, piv = rref(F, M)
    free = [c for c in range(ncols) if c not in set(piv)]
    out = F.zeros((len(free), ncols))
    for k, f in enumerate(free):
        out[k, f] = F.one
        for row, pc in enumerate(piv):
            out[k, pc] = F.norm(-R[row, f])
    return out


def solve(F: Field, M: np.ndarray, b) -> np.ndarray | None:
    """One solution of ``M @ x = b`` or ``None`` when inconsistent."""
    m, n = M.shape
    b = as_matrix(F, [list(b)]).reshape(m, 1) if not isinstance(b, np.ndarray) else b.reshape(m, 1)
    if m == 0:
        return F.zeros(n)
    aug = np.concatenate([M, b], axis=1)
    R, piv = rref(F, aug)
    if n in piv:
        return None
    x = F.zeros(n)
    for row, pc in enumerate(piv):
        x[pc] = R[row, n]
    return x


def inverse(F: Field, M: np.ndarray) -> np.ndarray:
    n = M.shape[0]
    aug = np.concatenate([M, F.eye(n)], axis=1)
    R, piv = rref(F, aug)
    if piv[:n] != list(range(n)):
        raise ValueError("matrix is singular")
    return R[:, n:]


def in_span(F: Field, rows: np.ndarray, v) -> bool:
    if rows.shape[0] == 0:
        return not np.any(np.asarray(v) != 0)
    return solve(F, rows.T, np.asarray(v)) is not None


def coordinates(F: Field, rows: np.ndarray, v) -> np.ndarray:
    """Coordinates of ``v`` in the (independent) spanning rows; raises if absent."""
    x = solve(F, rows.T, np.asarray(v))
    if x is None:
        raise ValueError("vector not in span")
    return x


def intersect(F: Field, U: np.ndarray, W: np.ndarray) -> np.ndarray:
    """Basis rows of span(U) ∩ span(W)."""
    if U.shape[0] == 0 or W.shape[0] == 0:
        return U[:0]
    stacked = np.concatenate([U, F.reduce(-W)], axis=0).T
    ker = nullspace(F, stacked)
    vecs = F.reduce(ker[:, : U.shape[0]] @ U) if ker.shape[0] else U[:0]
    return row_basis(F, vecs)


class Quotient:
    """The projection ``V -> V / S`` for a subspace ``S`` of ``F^n``.

    ``proj`` has shape (q, n) with kernel exactly ``S``; ``lift`` has shape
    (n, q) with ``proj @ lift = I``.
    """

    def __init__(self, F: Field, sub_rows: np.ndarray, n: int):
        self.F = F
        self.n = n
        S = row_basis(F, sub_rows) if sub_rows.shape[0] else F.zeros((0, n))
        _, piv = rref(F, S) if S.shape[0] else (S, [])
        comp = [c for c in range(n) if c not in set(piv)]
        # basis of F^n: S rows followed by unit vectors on non-pivot columns
        units = F.zeros((len(comp), n))
        for k, c in enumerate(comp):
            units[k, c] = F.one
        full = np.concatenate([S, units], axis=0) if n else F.zeros((0, 0))
        inv = inverse(F, full.T) if n else F.zeros((0, 0))
        self.sub = S
        self.dim = len(comp)
        self.proj = inv[S.shape[0]:, :]
        self.lift = units.T.copy()

    def __call__(self, v) -> np.ndarray:
        return self.F.reduce(self.proj @ np.asarray(v))


def induced_map(F: Field, f: np.ndarray, source: Quotient, target: Quotient) -> np.ndarray:
    """Matrix of the map ``V/S -> W/T`` induced by ``f: V -> W`` (``f(S) ⊆ T``)."""
    return F.reduce(target.proj @ F.reduce(f @ source.lift))


def block_diag(F: Field, blocks: list[np.ndarray]) -> np.ndarray:
    rows = sum(b.shape[0] for b in blocks)
    cols = sum(b.shape[1] for b in blocks)
    out = F.zeros((rows, cols))
    r = c = 0
    for b in blocks:
        out[r : r + b.shape[0], c : c + b.shape[1]] = b
        r += b.shape[0]
        c += b.shape[1]
    return out


class Basis:
    """Fast coordinates with respect to independent rows ``B`` (r × n).

    Coordinates are read off the pivot columns of ``B``; the result is only
    meaningful for vectors inside the span (use :meth:`contains` to check).
    """

    def __init__(self, F: Field, rows: np.ndarray):
        self.F = F
        self.rows = rows
        self.dim = rows.shape[0]
        if self.dim:
            _, piv = rref(F, rows)
            if len(piv) != self.dim:
                raise ValueError("rows are dependent")
            self.pivots = piv
            self._inv = inverse(F, rows[:, piv])
        else:
            self.pivots = []
            self._inv = F.zeros((0, 0))

    def coords(self, v) -> np.ndarray:
        v = np.asarray(v)
        if not self.dim:
            return self.F.zeros(v.shape[:-1] + (0,))
        return self.F.reduce(v[..., self.pivots] @ self._inv)

    def contains(self, v) -> bool:
        v = np.asarray(v)
        if not self.dim:
            return not np.any(v != 0)
        back = self.F.reduce(self.coords(v) @ self.rows)
        return bool(np.all(back == v))
