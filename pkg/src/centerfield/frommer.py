"""Focal values of Poincare forms via Frommer's recurrence.

For ``omega = (x + P2 + P3) dx + (y + Q2 + Q3) dy`` we build, degree by
degree, ``F = x^2 + y^2 + F3 + F4 + ...`` with

    F_x * Q - F_y * P = sum_j s_j * (x^(2j+2) + y^(2j+2)).

Collecting degree ``k`` gives ``D(F_k) = -R_k + s * (x^k + y^k)`` where
``D(h) = y h_x - x h_y`` and ``R_k`` gathers products of already known
``F_i`` with ``P2, Q2, P3, Q3``.  In coefficients (``h[a]`` multiplies
``x^a y^(k-a)``)

    D(h)[b] = (b + 1) h[b+1] - (k - b + 1) h[b-1]

so equations with even ``b`` involve only odd ``h`` and vice versa.  Both
chains are solved by substitution, dividing only by integers ``<= k``.  For
even ``k`` the even-``b`` chain is overdetermined by one equation, which fixes
``s``; the odd-``b`` chain has a one dimensional kernel ``(x^2+y^2)^(k/2)``,
fixed by setting the ``x^k`` coefficient of ``F_k`` to zero.

The recurrence is written against the small ring contract of
:mod:`centerfield.arith`, so the same code produces plain values, exact
Jacobians (multi-dual numbers) and batched values (numpy arrays).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .arith import (
    DEFAULT_P,
    ArrayDualRing,
    ArrayField,
    batch_matrix_rank,
    get_field,
    lift_dual,
    matrix_rank,
)
from .errors import ModulusTooSmall, NotOnVariety

NCOEFFS = 14
COEFF_NAMES = (
    "p20", "p11", "p02", "p30", "p21", "p12", "p03",
    "q20", "q11", "q02", "q30", "q21", "q12", "q03",
)


def max_focal_index(p: int) -> int:
    return (p - 3) // 2


def check_modulus(m: int, p: int) -> None:
    if m < 1:
        raise ValueError("focal bound m must be positive")
    if m > max_focal_index(p):
        raise ModulusTooSmall(
            f"s_{m} is not defined mod {p}; need m <= {max_focal_index(p)}")


class _Recurrence:
    """Streaming computation of s_1, s_2, ... for one ring."""

    def __init__(self, ring, coeffs: Sequence, p: int):
        c = list(coeffs)
        if len(c) != NCOEFFS:
            raise ValueError(f"expected {NCOEFFS} coefficients, got {len(c)}")
        self.ring = ring
        self.p = p
        self.inv = get_field(p)._inv
        # homogeneous parts indexed by the power of x
        self.P2 = [c[2], c[1], c[0]]
        self.P3 = [c[6], c[5], c[4], c[3]]
        self.Q2 = [c[9], c[8], c[7]]
        self.Q3 = [c[13], c[12], c[11], c[10]]
        self._negs()
        self.F = {}  # degree -> coefficient list, only the last two are kept
        self.k = 3

    def _negs(self):
        r = self.ring
        self.nP2 = [r.neg(x) for x in self.P2]
        self.nP3 = [r.neg(x) for x in self.P3]

    def select(self, mask) -> None:
        """Keep only the batch members where ``mask`` is true."""
        pick = lambda xs: [x[mask] for x in xs]
        self.P2, self.P3 = pick(self.P2), pick(self.P3)
        self.Q2, self.Q3 = pick(self.Q2), pick(self.Q3)
        self._negs()
        self.F = {d: pick(h) for d, h in self.F.items()}

    def _grad(self, h):
        """(F_x, F_y) coefficient lists of a homogeneous polynomial."""
        r = self.ring
        d = len(h) - 1
        fx = [r.lin([(a, h[a])]) for a in range(1, d + 1)]
        fy = [r.lin([(d - a, h[a])]) for a in range(d)]
        return fx, fy

    def _residual(self, k):
        r = self.ring
        P = {2: self.P2, 3: self.P3}
        nP = {2: self.nP2, 3: self.nP3}
        Q = {2: self.Q2, 3: self.Q3}
        pairs = [[] for _ in range(k + 1)]
        for i in (2, 3):
            j = k + 1 - i  # degree of the F piece multiplying the degree-i piece
            if j < 3:
                continue
            fx, fy = self._grad(self.F[j])
            for a in range(j):
                for e in range(i + 1):
                    pairs[a + e].append((fx[a], Q[i][e]))
                    pairs[a + e].append((fy[a], nP[i][e]))
        out = [r.dot(ps) if ps else None for ps in pairs]
        i = k - 1  # F_2 = x^2 + y^2 contributes 2x * Q_i - 2y * P_i
        if i in (2, 3):
            for b in range(k + 1):
                terms = []
                if b >= 1:
                    terms.append((2, Q[i][b - 1]))
                if b <= i:
                    terms.append((-2, P[i][b]))
                t = r.lin(terms)
                out[b] = t if out[b] is None else r.add(out[b], t)
        return out

    def _kernel_shift(self, k):
        """Odd-chain solution for right hand side e_0 (the x^0 y^k slot)."""
        p, inv = self.p, self.inv
        u = [0] * (k + 1)
        u[1] = 1
        for b in range(2, k, 2):
            u[b + 1] = (k - b + 1) * u[b - 1] * inv[b + 1] % p
        return u

    def _solve(self, k, R):
        r, p, inv = self.ring, self.p, self.inv
        h = [None] * (k + 1)
        h[1] = r.neg(R[0])
        for b in range(2, k, 2):
            ib = inv[b + 1]
            h[b + 1] = r.lin([(-ib % p, R[b]), (ib * (k - b + 1) % p, h[b - 1])])
        s = None
        if k % 2 == 0:
            u = self._kernel_shift(k)
            c = inv[(1 + u[k - 1]) % p]
            s = r.lin([(c, R[k]), (-c % p, h[k - 1])])
            for a in range(1, k, 2):
                if u[a]:
                    h[a] = r.lin([(1, h[a]), (u[a], s)])
            h[k] = r.zero_like(R[k])
            start = k - 1
        else:
            h[k - 1] = R[k]
            start = k - 2
        for b in range(start, 0, -2):
            ib = inv[k - b + 1]
            h[b - 1] = r.lin([(ib * (b + 1) % p, h[b + 1]), (ib, R[b])])
        return h, s

    def _degree(self, k):
        h, s = self._solve(k, self._residual(k))
        self.F[k] = h
        self.F.pop(k - 2, None)
        return s

    def next_value(self):
        """Advance two degrees and return the next focal value."""
        self._degree(self.k)
        s = self._degree(self.k + 1)
        self.k += 2
        return s


@dataclass(frozen=True)
class FocalOutcome:
    """Focal values s_1..s_j as computed, with the vanishing status.

    ``first_nonzero`` is the 1-based index of the first nonzero value, or
    ``None`` when all ``m`` requested values vanish.
    """

    values: tuple
    m: int
    first_nonzero: int | None
    jacobian_rank: int | None = None

    @property
    def all_vanish(self) -> bool:
        return self.first_nonzero is None

    @property
    def vanish_upto(self) -> int:
        return self.m if self.first_nonzero is None else self.first_nonzero - 1

    @property
    def status(self) -> str:
        if self.all_vanish:
            return "AllVanish"
        return f"FirstNonzero({self.first_nonzero})"


def _coeffs_of(w) -> list[int]:
    c = getattr(w, "coeffs", w)
    return [int(x) for x in c]


def focal_values(w, m: int = 13, early_abort: bool = True,
                 p: int = DEFAULT_P, with_rank: bool = False) -> FocalOutcome:
    """Focal values of a Poincare form (``PoincareForm`` or 14 ints)."""
    check_modulus(m, p)
    c = [x % p for x in _coeffs_of(w)]
    rec = _Recurrence(get_field(p), c, p)
    values = []
    first = None
    for j in range(1, m + 1):
        s = rec.next_value()
        values.append(s)
        if s and first is None:
            first = j
            if early_abort:
                break
    rank = None
    if with_rank and first is None:
        rank = matrix_rank(focal_jacobian(c, m, p), p)
    return FocalOutcome(tuple(values), m, first, rank)


def _as_batch(coeffs, p) -> np.ndarray:
    a = np.asarray(coeffs, dtype=np.int64)
    if a.ndim == 1:
        a = a[None, :]
    if a.shape[1] != NCOEFFS:
        raise ValueError(f"expected rows of {NCOEFFS} coefficients")
    return a % p


def focal_values_batch(coeffs, m: int = 13, p: int = DEFAULT_P) -> np.ndarray:
    """All of s_1..s_m for a batch of forms, shape ``(batch, m)``."""
    check_modulus(m, p)
    a = _as_batch(coeffs, p)
    rec = _Recurrence(ArrayField(p), list(a.T.copy()), p)
    return np.stack([rec.next_value() for _ in range(m)], axis=1)


def vanishing_orders(coeffs, m: int = 13, p: int = DEFAULT_P) -> np.ndarray:
    """Number of leading vanishing focal values (0..m) for each form.

    Forms drop out of the batch as soon as a focal value is nonzero, so the
    cost is dominated by s_1.
    """
    check_modulus(m, p)
    a = _as_batch(coeffs, p)
    order = np.zeros(a.shape[0], dtype=np.int64)
    alive = np.arange(a.shape[0])
    rec = _Recurrence(ArrayField(p), list(a.T.copy()), p)
    for j in range(1, m + 1):
        z = rec.next_value() == 0
        alive = alive[z]
        if alive.size == 0:
            break
        order[alive] = j
        if j < m and not z.all():
            rec.select(z)
    return order


def focal_jacobian_batch(coeffs, m: int = 13, p: int = DEFAULT_P,
                         chunk: int = 4096):
    """Values and exact Jacobians of s_1..s_m for a batch of forms.

    Returns ``(values, jac)`` with shapes ``(batch, m)`` and
    ``(batch, m, 14)``; ``jac[b, j, i]`` is the derivative of s_{j+1} with
    respect to coefficient ``i``.
    """
    check_modulus(m, p)
    a = _as_batch(coeffs, p)
    ring = ArrayDualRing(p, NCOEFFS)
    vals, jacs = [], []
    for lo in range(0, a.shape[0], chunk):
        lifted = lift_dual(a[lo:lo + chunk], p)
        rec = _Recurrence(ring, list(lifted), p)
        s = np.stack([rec.next_value() for _ in range(m)], axis=1)
        vals.append(s[:, :, 0])
        jacs.append(s[:, :, 1:])
    if not vals:
        return (np.zeros((0, m), dtype=np.int64),
                np.zeros((0, m, NCOEFFS), dtype=np.int64))
    return np.concatenate(vals), np.concatenate(jacs)


def focal_jacobian(w, m: int = 13, p: int = DEFAULT_P) -> np.ndarray:
    """The ``m x 14`` matrix of partials ds_j/dc_i at ``w``."""
    _, jac = focal_jacobian_batch([_coeffs_of(w)], m, p)
    return jac[0]


def tangent_codim(w, m: int = 13, p: int = DEFAULT_P) -> int:
    """Codimension of the tangent space to Z_m at a point of Z_m."""
    vals, jac = focal_jacobian_batch([_coeffs_of(w)], m, p)
    bad = np.flatnonzero(vals[0])
    if bad.size:
        raise NotOnVariety(f"s_{bad[0] + 1} = {vals[0, bad[0]]} != 0")
    return matrix_rank(jac[0], p)


def tangent_codims(coeffs, m: int = 13, p: int = DEFAULT_P) -> np.ndarray:
    """Tangent codimensions for a batch of points of Z_m."""
    vals, jac = focal_jacobian_batch(coeffs, m, p)
    if vals.any():
        row = int(np.flatnonzero(vals.any(axis=1))[0])
        raise NotOnVariety(f"batch member {row} is not on Z_{m}")
    if jac.shape[0] == 0:
        return np.zeros(0, dtype=np.int64)
    return batch_matrix_rank(jac, p)
