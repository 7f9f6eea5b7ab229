"""Arithmetic over F_p.

Field elements are plain Python ints in ``[0, p)``; the modulus lives on a
:class:`PrimeField` context rather than on every element.  Besides the scalar
field this module provides the rings the focal-value engine is written
against:

* :class:`PrimeField` -- ints mod p
* :class:`DualRing` -- :class:`DualNumber` values a + b*eps with eps**2 = 0
* :class:`ArrayField` -- numpy int64 arrays, one entry per form in a batch
* :class:`ArrayDualRing` -- arrays of shape ``(batch, 1 + nvars)`` holding a
  value and ``nvars`` first-order derivative slots

All rings expose the same small contract used by the engine: ``add``,
``sub``, ``neg``, ``mul``, ``dot`` (sum of products, reduced once), ``lin``
(integer linear combination), ``zero_like`` and ``value`` (the plain F_p part).
"""
from __future__ import annotations

from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .errors import ZeroInverse

DEFAULT_P = 29
_TABLE_LIMIT = 1 << 16


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


class PrimeField:
    """The prime field F_p with elements represented as ints."""

    def __init__(self, p: int = DEFAULT_P):
        if p == 2 or not is_prime(p):
            raise ValueError(f"modulus must be an odd prime, got {p}")
        self.p = p
        self._inv = None
        self._sqrt = None
        if p <= _TABLE_LIMIT:
            inv = [0] * p
            inv[1] = 1
            for a in range(2, p):
                # inv(a) = -(p // a) * inv(p mod a)
                inv[a] = (p - (p // a) * inv[p % a] % p) % p
            self._inv = inv

    def __repr__(self):
        return f"PrimeField({self.p})"

    def __call__(self, a: int) -> int:
        return int(a) % self.p

    # ring contract
    def add(self, a, b):
        return (a + b) % self.p

    def sub(self, a, b):
        return (a - b) % self.p

    def neg(self, a):
        return -a % self.p

    def mul(self, a, b):
        return a * b % self.p

    def dot(self, pairs):
        return sum(a * b for a, b in pairs) % self.p

    def lin(self, terms):
        return sum(c * x for c, x in terms) % self.p

    def zero_like(self, a):
        return 0

    def value(self, a):
        return a

    def inv(self, a: int) -> int:
        a %= self.p
        if a == 0:
            raise ZeroInverse(f"0 has no inverse mod {self.p}")
        if self._inv is not None:
            return self._inv[a]
        return pow(a, -1, self.p)

    def is_square(self, a: int) -> bool:
        """Euler's criterion; 0 counts as a square."""
        a %= self.p
        return a == 0 or pow(a, (self.p - 1) // 2, self.p) == 1

    def sqrt(self, a: int) -> int | None:
        """Smallest square root of ``a`` or ``None`` for non-residues."""
        a %= self.p
        if self._sqrt is None:
            table: dict[int, int] = {}
            for x in range(self.p - 1, -1, -1):
                table[x * x % self.p] = x
            self._sqrt = table
        return self._sqrt.get(a)


@lru_cache(maxsize=None)
def get_field(p: int = DEFAULT_P) -> PrimeField:
    return PrimeField(p)


def field_inverse(a: int, p: int = DEFAULT_P) -> int:
    return get_field(p).inv(a)


class DualNumber(NamedTuple):
    re: int
    eps: int


class DualRing:
    """F_p[eps]/(eps^2) over a :class:`PrimeField`."""

    def __init__(self, field: PrimeField):
        self.field = field
        self.p = field.p

    def __call__(self, re: int, eps: int = 0) -> DualNumber:
        return DualNumber(re % self.p, eps % self.p)

    def add(self, a, b):
        p = self.p
        return DualNumber((a.re + b.re) % p, (a.eps + b.eps) % p)

    def sub(self, a, b):
        p = self.p
        return DualNumber((a.re - b.re) % p, (a.eps - b.eps) % p)

    def neg(self, a):
        return DualNumber(-a.re % self.p, -a.eps % self.p)

    def mul(self, a, b):
        p = self.p
        return DualNumber(a.re * b.re % p, (a.re * b.eps + a.eps * b.re) % p)

    def dot(self, pairs):
        re = eps = 0
        for a, b in pairs:
            re += a.re * b.re
            eps += a.re * b.eps + a.eps * b.re
        return DualNumber(re % self.p, eps % self.p)

    def lin(self, terms):
        re = eps = 0
        for c, x in terms:
            re += c * x.re
            eps += c * x.eps
        return DualNumber(re % self.p, eps % self.p)

    def zero_like(self, a):
        return DualNumber(0, 0)

    def value(self, a):
        return a.re

    def inv(self, a: DualNumber) -> DualNumber:
        # (a + b eps)^-1 = a^-1 - b a^-2 eps
        r = self.field.inv(a.re)
        return DualNumber(r, -a.eps * r * r % self.p)


def dual_mul(x: DualNumber, y: DualNumber, p: int = DEFAULT_P) -> DualNumber:
    return DualRing(get_field(p)).mul(x, y)


class ArrayField:
    """F_p acting elementwise on int64 arrays (one entry per batch member)."""

    def __init__(self, p: int = DEFAULT_P):
        if p >= _TABLE_LIMIT:
            raise ValueError("batch arithmetic requires p < 2**16")
        self.p = p

    def add(self, a, b):
        return (a + b) % self.p

    def sub(self, a, b):
        return (a - b) % self.p

    def neg(self, a):
        return -a % self.p

    def mul(self, a, b):
        return a * b % self.p

    def dot(self, pairs):
        it = iter(pairs)
        a, b = next(it)
        acc = a * b
        for a, b in it:
            acc += a * b
        acc %= self.p
        return acc

    def lin(self, terms):
        it = iter(terms)
        c, x = next(it)
        acc = c * x
        for c, x in it:
            acc += c * x
        acc %= self.p
        return acc

    def zero_like(self, a):
        return np.zeros_like(a)

    def value(self, a):
        return a


class ArrayDualRing(ArrayField):
    """Multi-dual numbers: value plus ``nvars`` derivative slots, batched.

    Elements have shape ``(batch, 1 + nvars)``; column 0 is the value.
    """

    def __init__(self, p: int = DEFAULT_P, nvars: int = 14):
        super().__init__(p)
        self.nvars = nvars

    def _mul_raw(self, a, b):
        out = a[:, :1] * b
        out += a * b[:, :1]
        out[:, 0] = a[:, 0] * b[:, 0]
        return out

    def mul(self, a, b):
        out = self._mul_raw(a, b)
        out %= self.p
        return out

    def dot(self, pairs):
        it = iter(pairs)
        a, b = next(it)
        acc = self._mul_raw(a, b)
        for a, b in it:
            acc += self._mul_raw(a, b)
        acc %= self.p
        return acc

    def value(self, a):
        return a[:, 0]


def lift_dual(values: np.ndarray, p: int = DEFAULT_P) -> np.ndarray:
    """Lift a ``(batch, n)`` array to multi-duals seeded with the identity.

    Returns shape ``(n, batch, 1 + n)``: variable ``i`` has value
    ``values[:, i]`` and derivative 1 in slot ``i``.
    """
    values = np.asarray(values, dtype=np.int64) % p
    batch, n = values.shape
    out = np.zeros((n, batch, 1 + n), dtype=np.int64)
    for i in range(n):
        out[i, :, 0] = values[:, i]
        out[i, :, 1 + i] = 1
    return out


def matrix_rank(m, p: int = DEFAULT_P) -> int:
    """Rank over F_p by Gaussian elimination with first-nonzero pivoting."""
    a = np.array(m, dtype=np.int64) % p
    if a.ndim != 2 or a.size == 0:
        return 0
    rows, cols = a.shape
    rank = 0
    for c in range(cols):
        nz = np.flatnonzero(a[rank:, c])
        if nz.size == 0:
            continue
        piv = rank + nz[0]
        if piv != rank:
            a[[rank, piv]] = a[[piv, rank]]
        a[rank] = a[rank] * pow(int(a[rank, c]), -1, p) % p
        below = a[rank + 1:, c].copy()
        if below.any():
            a[rank + 1:] = (a[rank + 1:] - np.outer(below, a[rank])) % p
        rank += 1
        if rank == rows:
            break
    return rank


def batch_matrix_rank(ms: np.ndarray, p: int = DEFAULT_P) -> np.ndarray:
    """Ranks of a stack of matrices ``(batch, rows, cols)`` over F_p.

    Elimination runs on all matrices at once; each matrix picks its own
    pivot row per column.
    """
    a = np.array(ms, dtype=np.int64) % p
    batch, rows, cols = a.shape
    rank = np.zeros(batch, dtype=np.int64)
    inv = np.array([0] + [pow(x, -1, p) for x in range(1, p)], dtype=np.int64)
    idx = np.arange(batch)
    row_ids = np.arange(rows)
    for c in range(cols):
        # candidate pivots: rows at or below the current rank with nonzero entry
        cand = (a[:, :, c] != 0) & (row_ids[None, :] >= rank[:, None])
        has = cand.any(axis=1) & (rank < rows)
        if not has.any():
            continue
        b = idx[has]
        r = rank[has]
        piv = cand[has].argmax(axis=1)
        # swap pivot row into position r
        prow = a[b, piv].copy()
        a[b, piv] = a[b, r]
        prow = prow * inv[prow[:, c]][:, None] % p
        a[b, r] = prow
        factors = a[b, :, c].copy()
        factors[np.arange(b.size), r] = 0
        factors[row_ids[None, :] < r[:, None]] = 0
        a[b] = (a[b] - factors[:, :, None] * prow[:, None, :]) % p
        rank[has] += 1
    return rank
