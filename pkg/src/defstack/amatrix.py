"""Square matrices with entries in a LocalAlgebra, stored flat (row-major tuples)."""
from __future__ import annotations

from .artin import AlgebraHom, Element, LocalAlgebra

Matrix = tuple  # tuple of r*r elements


def identity(A: LocalAlgebra, r: int) -> Matrix:
    one, zero = A.one, A.zero
    return tuple(one if i == j else zero for i in range(r) for j in range(r))


def from_scalars(A: LocalAlgebra, rows) -> Matrix:
    """Embed a k-matrix (nested lists of field elements) via the unit."""
    return tuple(A.scale(A.field(c), A.one) for row in rows for c in row)


def mul(A: LocalAlgebra, X: Matrix, Y: Matrix, r: int) -> Matrix:
    out = []
    zero = A.zero
    for i in range(r):
        for j in range(r):
            acc = zero
            for k in range(r):
                x = X[i * r + k]
                y = Y[k * r + j]
                if any(x) and any(y):
                    acc = A.add(acc, A.mul(x, y))
            out.append(acc)
    return tuple(out)


def add(A: LocalAlgebra, X: Matrix, Y: Matrix) -> Matrix:
    return tuple(A.add(x, y) for x, y in zip(X, Y))


def sub(A: LocalAlgebra, X: Matrix, Y: Matrix) -> Matrix:
    return tuple(A.sub(x, y) for x, y in zip(X, Y))


def inverse(A: LocalAlgebra, X: Matrix, r: int) -> Matrix:
    """Inverse of a matrix whose reduction mod m is invertible."""
    F = A.field
    from . import linalg as la

    red = F.array([[X[i * r + j][0] for j in range(r)] for i in range(r)])
    red_inv = la.inverse(F, red)
    c = from_scalars(A, red_inv.tolist())
    u = mul(A, c, X, r)  # u ≡ I mod m
    n = sub(A, identity(A, r), u)
    total = power = identity(A, r)
    for _ in range(A.nilpotency_degree):
        power = mul(A, power, n, r)
        total = add(A, total, power)
    return mul(A, total, c, r)


def conjugate(A: LocalAlgebra, g: Matrix, X: Matrix, r: int, g_inv: Matrix | None = None) -> Matrix:
    g_inv = inverse(A, g, r) if g_inv is None else g_inv
    return mul(A, mul(A, g, X, r), g_inv, r)


def push(f: AlgebraHom, X) -> tuple:
    return tuple(f(x) for x in X)


def residue(A: LocalAlgebra, X) -> tuple:
    return tuple(x[0] for x in X)


def is_zero(X) -> bool:
    return not any(any(x) for x in X)


def entries_in_ideal(X) -> bool:
    return all(x[0] == 0 for x in X)


def to_text(A: LocalAlgebra, X: Matrix, r: int) -> list[list[str]]:
    return [[A.format(X[i * r + j]) for j in range(r)] for i in range(r)]


def apply_to_vector(A: LocalAlgebra, X: Matrix, v: tuple, r: int) -> tuple:
    out = []
    for i in range(r):
        acc = A.zero
        for k in range(r):
            acc = A.add(acc, A.mul(X[i * r + k], v[k]))
        out.append(acc)
    return tuple(out)


def scalar_rows(X, r: int, c: int) -> list[list]:
    """Residue k-matrix of a flat r×c matrix over A."""
    return [[X[i * c + j][0] for j in range(c)] for i in range(r)]

