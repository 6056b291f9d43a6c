"""Exact base fields: the rationals and prime fields."""
from __future__ import annotations

from fractions import Fraction
from typing import Iterator

import numpy as np


def _is_prime(p: int) -> bool:
    if p < 2:
        return False
    d = 2
    while d * d <= p:
        if p % d == 0:
            return False
        d += 1
    return True


class Field:
    """Either QQ (``p is None``) or the prime field GF(p).

    Elements of GF(p) are python ints in ``range(p)``; elements of QQ are
    :class:`fractions.Fraction`.  Both support the ordinary python operators,
    so callers combine elements with ``+``/``*`` and then call :meth:`norm`.
    """

    __slots__ = ("p", "_inv")

    def __init__(self, p: int | None = None):
        if p is not None and not _is_prime(p):
            raise ValueError(f"{p} is not prime")
        self.p = p
        self._inv = None
        if p is not None:
            self._inv = [0] + [pow(a, p - 2, p) for a in range(1, p)]

    # identity -----------------------------------------------------------
    def __eq__(self, other):
        return isinstance(other, Field) and other.p == self.p

    def __hash__(self):
        return hash(("Field", self.p))

    def __repr__(self):
        return "QQ" if self.p is None else f"GF({self.p})"

    @property
    def is_finite(self) -> bool:
        return self.p is not None

    @property
    def characteristic(self) -> int:
        return 0 if self.p is None else self.p

    @property
    def order(self) -> int | None:
        return self.p

    # scalars ------------------------------------------------------------
    @property
    def zero(self):
        return 0 if self.p is not None else Fraction(0)

    @property
    def one(self):
        return 1 if self.p is not None else Fraction(1)

    def __call__(self, x):
        if self.p is not None:
            if isinstance(x, Fraction):
                return (x.numerator * self._inv[x.denominator % self.p]) % self.p
            return int(x) % self.p
        return Fraction(x)

    def norm(self, x):
        return x % self.p if self.p is not None else x

    def inv(self, x):
        if self.p is not None:
            x = int(x) % self.p
            if x == 0:
                raise ZeroDivisionError("inverse of zero in " + repr(self))
            return self._inv[x]
        if x == 0:
            raise ZeroDivisionError("inverse of zero in QQ")
        return 1 / Fraction(x)

    def elements(self) -> Iterator:
        if self.p is None:
            raise ValueError("QQ is infinite; enumeration needs a prime field")
        return iter(range(self.p))

    # arrays -------------------------------------------------------------
    def array(self, data, shape=None) -> np.ndarray:
        if self.p is not None:
            arr = np.array(data, dtype=np.int64)
            if shape is not None:
                arr = arr.reshape(shape)
            return arr % self.p
        arr = np.array(data, dtype=object)
        if shape is not None:
            arr = arr.reshape(shape)
        return np.vectorize(Fraction, otypes=[object])(arr) if arr.size else arr

    def zeros(self, shape) -> np.ndarray:
        if self.p is not None:
            return np.zeros(shape, dtype=np.int64)
        arr = np.empty(shape, dtype=object)
        arr.fill(Fraction(0))
        return arr

    def eye(self, n: int) -> np.ndarray:
        out = self.zeros((n, n))
        for i in range(n):
            out[i, i] = self.one
        return out

    def reduce(self, arr: np.ndarray) -> np.ndarray:
        return arr % self.p if self.p is not None else arr

    def to_json(self):
        return "Q" if self.p is None else {"Fp": self.p}

    @classmethod
    def from_json(cls, obj) -> "Field":
        if obj in ("Q", "QQ"):
            return QQ
        if isinstance(obj, dict) and "Fp" in obj:
            return GF(int(obj["Fp"]))
        if isinstance(obj, str) and obj.startswith("Fp:"):
            return GF(int(obj[3:]))
        raise ValueError(f"unrecognised field {obj!r}")


QQ = Field(None)
_cache: dict[int, Field] = {}


def GF(p: int) -> Field:
    if p not in _cache:
        _cache[p] = Field(p)
    return _cache[p]
