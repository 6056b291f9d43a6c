"""Independent reference computations used to validate the main engines.

Nothing here touches the groupoid machinery: Ext groups come from Hochschild
cochains of the action map B → End_k(M), Hom spaces from linear solves, and
cohomology of finite spaces from the simplicial cochains of the order complex.
"""
from __future__ import annotations

import itertools
import math

import numpy as np

from . import linalg as la
from .field import Field


def _tab(B):
    return B.table, B.dim


def hochschild_z1_b1_counts(F: Field, B, mats) -> tuple[int, int]:
    """|Z¹| and |B¹| of normalised Hochschild cochains B → End_k(M), by exhaustive enumeration.

    ``mats[i]`` is the action of basis element i (``mats[0] = I``).  A cochain is
    fixed by its values on e_1..e_{n−1}; the cocycle rule is
    δ(ab) = ρ(a)δ(b) + δ(a)ρ(b), coboundaries are a ↦ ρ(a)φ − φρ(a).
    """
    T, n = _tab(B)
    r = mats[0].shape[0]
    p = F.p
    entries = list(itertools.product(range(p), repeat=r * r))
    zero = F.zeros((r, r))
    z1 = 0
    for choice in itertools.product(entries, repeat=n - 1):
        delta = [zero] + [F.array(list(c)).reshape(r, r) for c in choice]
        ok = True
        for i in range(1, n):
            for j in range(i, n):
                lhs = zero
                for m in range(n):
                    if T[i, j, m]:
                        lhs = F.reduce(lhs + T[i, j, m] * delta[m])
                rhs = F.reduce(mats[i] @ delta[j] + delta[i] @ mats[j])
                if np.any(lhs != rhs):
                    ok = False
                    break
            if not ok:
                break
        z1 += ok
    bounds = set()
    for c in entries:
        phi = F.array(list(c)).reshape(r, r)
        bounds.add(tuple(tuple(F.reduce(mats[i] @ phi - phi @ mats[i]).reshape(-1).tolist()) for i in range(1, n)))
    return z1, len(bounds)


def ext1_dim_bruteforce(F: Field, B, mats) -> int:
    z, b = hochschild_z1_b1_counts(F, B, mats)
    return _log(z // b, F.p)


def _log(x: int, p: int) -> int:
    d = round(math.log(x, p)) if x > 1 else 0
    assert p ** d == x
    return d


def _cochain_matrix_1(F, B, mats):
    """Linear map C¹ → C² (normalised) as a matrix; C¹ coordinates: (i, a, b) for δ(e_i)[a, b]."""
    T, n = _tab(B)
    r = mats[0].shape[0]
    dim1 = (n - 1) * r * r
    pairs = [(i, j) for i in range(1, n) for j in range(1, n)]
    out = F.zeros((len(pairs) * r * r, dim1))
    for col in range(dim1):
        i0, rest = divmod(col, r * r)
        delta = [F.zeros((r, r)) for _ in range(n)]
        delta[i0 + 1].reshape(-1)[rest] = F.one
        blocks = []
        for i, j in pairs:
            v = F.reduce(mats[i] @ delta[j] - sum((T[i, j, m] * delta[m] for m in range(n)), F.zeros((r, r)))
                         + delta[i] @ mats[j])
            blocks.append(v.reshape(-1))
        out[:, col] = F.reduce(np.concatenate(blocks))
    return out


def _coboundary_0(F, B, mats):
    """C⁰ = End_k(M) → C¹: φ ↦ (a ↦ ρ(a)φ − φρ(a))."""
    _, n = _tab(B)
    r = mats[0].shape[0]
    out = F.zeros(((n - 1) * r * r, r * r))
    for col in range(r * r):
        phi = F.zeros((r, r))
        phi.reshape(-1)[col] = F.one
        out[:, col] = F.reduce(np.concatenate([(mats[i] @ phi - phi @ mats[i]).reshape(-1) for i in range(1, n)]))
    return out


def _cochain_matrix_2(F, B, mats):
    """C² → C³ for normalised Hochschild cochains with values in End_k(M)."""
    T, n = _tab(B)
    r = mats[0].shape[0]
    idx1 = range(1, n)
    pairs = [(i, j) for i in idx1 for j in idx1]
    pos = {pq: k for k, pq in enumerate(pairs)}
    triples = [(a, b, c) for a in idx1 for b in idx1 for c in idx1]
    rr = r * r
    out = F.zeros((len(triples) * rr, len(pairs) * rr))

    def c_val(cvec, i, j):
        if i == 0 or j == 0:
            return F.zeros((r, r))
        k = pos[(i, j)]
        return cvec[k * rr:(k + 1) * rr].reshape(r, r)

    def c_lin(cvec, coeffs, j, left: bool):
        acc = F.zeros((r, r))
        for m in range(n):
            if coeffs[m]:
                acc = acc + coeffs[m] * (c_val(cvec, m, j) if left else c_val(cvec, j, m))
        return acc

    for col in range(len(pairs) * rr):
        cvec = F.zeros(len(pairs) * rr)
        cvec[col] = F.one
        blocks = []
        for a, b, c in triples:
            v = (mats[a] @ c_val(cvec, b, c)
                 - c_lin(cvec, T[a, b], c, True)
                 + c_lin(cvec, T[b, c], a, False)
                 - c_val(cvec, a, b) @ mats[c])
            blocks.append(F.reduce(v).reshape(-1))
        out[:, col] = F.reduce(np.concatenate(blocks)) if blocks else out[:, col]
    return out


def ext_dims_linear(F: Field, B, mats) -> tuple[int, int, int]:
    """(dim Hom_B(M,M), dim Ext¹_B(M,M), dim Ext²_B(M,M)) by ranks of Hochschild coboundaries."""
    r = mats[0].shape[0]
    _, n = _tab(B)
    if n == 1:
        return r * r, 0, 0
    d0 = _coboundary_0(F, B, mats)
    d1 = _cochain_matrix_1(F, B, mats)
    d2 = _cochain_matrix_2(F, B, mats)
    r0, r1, r2 = la.rank(F, d0), la.rank(F, d1), la.rank(F, d2)
    c0, c1 = r * r, (n - 1) * r * r
    c2 = (n - 1) ** 2 * r * r
    return c0 - r0, (c1 - r1) - r0, (c2 - r2) - r1


def hom_dim(F: Field, actions_src, actions_dst, src_dim: int | None = None, dst_dim: int | None = None) -> int:
    """dim {φ : φ·S_b = D_b·φ for every b} by a linear solve (φ has shape dst × src)."""
    m = actions_src[0].shape[0] if actions_src else src_dim
    k = actions_dst[0].shape[0] if actions_dst else dst_dim
    if m == 0 or k == 0:
        return 0
    if not actions_src:
        return k * m
    rows = []
    for S, D in zip(actions_src, actions_dst):
        # vec(φS − Dφ) in row-major coordinates of φ
        block = F.zeros((k * m, k * m))
        for a in range(k):
            for b in range(m):
                col = a * m + b
                phi = F.zeros((k, m))
                phi[a, b] = F.one
                block[:, col] = F.reduce(phi @ S - D @ phi).reshape(-1)
        rows.append(block)
    return k * m - la.rank(F, np.concatenate(rows, axis=0))


# finite spaces ----------------------------------------------------------------------------


def order_complex_cohomology(points, leq, max_degree: int = 2) -> list[int]:
    """Betti numbers over any field (ranks computed over QQ) of the chain complex of ``≤``-chains."""
    from .field import QQ

    pts = list(points)
    strict = {(a, b) for a in pts for b in pts if a != b and leq(a, b)}
    chains = [[(p,) for p in pts]]
    for _ in range(max_degree + 1):
        nxt = [c + (q,) for c in chains[-1] for q in pts if (c[-1], q) in strict]
        chains.append(nxt)
    index = [{c: i for i, c in enumerate(level)} for level in chains]

    def delta(k):
        src, dst = chains[k], chains[k + 1]
        M = QQ.zeros((len(dst), len(src)))
        for row, c in enumerate(dst):
            for drop in range(len(c)):
                face = c[:drop] + c[drop + 1:]
                M[row, index[k][face]] += (-1) ** drop
        return M

    ranks = [la.rank(QQ, delta(k)) if chains[k + 1] and chains[k] else 0 for k in range(max_degree + 1)]
    out = []
    for k in range(max_degree + 1):
        prev = ranks[k - 1] if k else 0
        out.append(len(chains[k]) - ranks[k] - prev)
    return out
