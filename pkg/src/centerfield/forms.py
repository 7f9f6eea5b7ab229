"""Degree-3 differential forms P dx + Q dy over F_p.

Coefficients are stored in the fixed monomial order

    1, x, y, x^2, xy, y^2, x^3, x^2y, xy^2, y^3

for both P and Q (:data:`MONOMIALS`).  A :class:`GeneralForm` is a point of
the 20-dimensional space V, a :class:`PoincareForm` a point of the
14-dimensional slice W with linear part exactly ``x dx + y dy``.

Affine group elements act on forms by push-forward: ``act_affine(g, w)``
moves a zero of ``w`` at ``z`` to ``g(z)``, and
``act_affine(g, act_affine(h, w)) == act_affine(g.compose(h), w)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .arith import DEFAULT_P, get_field, matrix_rank
from .errors import (
    DegenerateQuadric,
    NonSquareDiscriminant,
    NotAZero,
    NotSymmetric,
    NotSymmetricZero,
    SingularMatrix,
)

MONOMIALS = ((0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2),
             (3, 0), (2, 1), (1, 2), (0, 3))
_INDEX = {e: i for i, e in enumerate(MONOMIALS)}
# Poincare coefficient k sits at this (P or Q, monomial slot)
_POINCARE_SLOTS = tuple([(0, i) for i in (3, 4, 5, 6, 7, 8, 9)]
                        + [(1, i) for i in (3, 4, 5, 6, 7, 8, 9)])


@dataclass(frozen=True)
class GeneralForm:
    pcoeffs: tuple
    qcoeffs: tuple

    def __post_init__(self):
        if len(self.pcoeffs) != 10 or len(self.qcoeffs) != 10:
            raise ValueError("P and Q need 10 coefficients each")

    @classmethod
    def from_list(cls, values, p: int = DEFAULT_P) -> "GeneralForm":
        values = [int(v) % p for v in values]
        if len(values) != 20:
            raise ValueError(f"expected 20 coefficients, got {len(values)}")
        return cls(tuple(values[:10]), tuple(values[10:]))

    def to_list(self) -> list[int]:
        return list(self.pcoeffs) + list(self.qcoeffs)

    def is_poincare(self) -> bool:
        P, Q = self.pcoeffs, self.qcoeffs
        return P[:3] == (0, 1, 0) and Q[:3] == (0, 0, 1)

    def to_poincare(self) -> "PoincareForm":
        if not self.is_poincare():
            raise ValueError("linear part is not x dx + y dy")
        polys = (self.pcoeffs, self.qcoeffs)
        return PoincareForm(tuple(polys[k][i] for k, i in _POINCARE_SLOTS))


@dataclass(frozen=True)
class PoincareForm:
    """Coefficients (p20, p11, p02, p30, p21, p12, p03, q20, ..., q03)."""

    coeffs: tuple

    def __post_init__(self):
        if len(self.coeffs) != 14:
            raise ValueError("a Poincare form has 14 coefficients")

    @classmethod
    def from_list(cls, values, p: int = DEFAULT_P) -> "PoincareForm":
        return cls(tuple(int(v) % p for v in values))

    def to_general(self) -> GeneralForm:
        polys = [[0] * 10, [0] * 10]
        polys[0][1] = 1
        polys[1][2] = 1
        for (k, i), c in zip(_POINCARE_SLOTS, self.coeffs):
            polys[k][i] = c
        return GeneralForm(tuple(polys[0]), tuple(polys[1]))


@dataclass(frozen=True)
class AffineElement:
    """``(x, y) -> (m11 x + m21 y + v1, m12 x + m22 y + v2)``."""

    m11: int
    m12: int
    m21: int
    m22: int
    v1: int = 0
    v2: int = 0

    @classmethod
    def from_matrix(cls, a, v=(0, 0)) -> "AffineElement":
        """Build from a row-major matrix ``a`` acting on column vectors."""
        return cls(a[0][0], a[1][0], a[0][1], a[1][1], v[0], v[1])

    @classmethod
    def identity(cls) -> "AffineElement":
        return cls(1, 0, 0, 1)

    @classmethod
    def translation(cls, v1: int, v2: int) -> "AffineElement":
        return cls(1, 0, 0, 1, v1, v2)

    def matrix(self):
        return ((self.m11, self.m21), (self.m12, self.m22))

    def det(self, p: int = DEFAULT_P) -> int:
        return (self.m11 * self.m22 - self.m21 * self.m12) % p

    def apply(self, pt, p: int = DEFAULT_P):
        x, y = pt
        return ((self.m11 * x + self.m21 * y + self.v1) % p,
                (self.m12 * x + self.m22 * y + self.v2) % p)

    def compose(self, other: "AffineElement", p: int = DEFAULT_P) -> "AffineElement":
        """``self o other``: apply ``other`` first."""
        a, b = self.matrix(), other.matrix()
        m = [[sum(a[i][k] * b[k][j] for k in range(2)) % p for j in range(2)]
             for i in range(2)]
        v = self.apply((other.v1, other.v2), p)
        return AffineElement.from_matrix(m, v)

    def inverse(self, p: int = DEFAULT_P) -> "AffineElement":
        d = self.det(p)
        if d == 0:
            raise SingularMatrix("affine element has singular linear part")
        di = get_field(p).inv(d)
        (a, b), (c, e) = self.matrix()
        m = [[e * di % p, -b * di % p], [-c * di % p, a * di % p]]
        g = AffineElement.from_matrix(m)
        w1, w2 = g.apply((self.v1, self.v2), p)
        return AffineElement.from_matrix(m, (-w1 % p, -w2 % p))


# -- bivariate polynomial helpers on 4x4 coefficient grids c[i, j] ~ x^i y^j

def _grid(coeffs) -> np.ndarray:
    g = np.zeros((4, 4), dtype=np.int64)
    for c, (i, j) in zip(coeffs, MONOMIALS):
        g[i, j] = c
    return g


def _ungrid(g, p) -> tuple:
    for i in range(4):
        for j in range(4):
            if i + j > 3 and g[i, j] % p:
                raise ValueError("degree exceeds 3")
    return tuple(int(g[i, j]) % p for i, j in MONOMIALS)


def _mul(a, b, p):
    out = np.zeros((4, 4), dtype=np.int64)
    for i, j in zip(*np.nonzero(a)):
        for k, l in zip(*np.nonzero(b)):
            if i + k < 4 and j + l < 4:
                out[i + k, j + l] += a[i, j] * b[k, l]
    return out % p


def _substitute(g, lx, ly, p):
    """Compose a polynomial grid with affine forms ``lx``, ``ly``.

    Each of ``lx``, ``ly`` is (coef of x, coef of y, constant).
    """
    def linear(l):
        t = np.zeros((4, 4), dtype=np.int64)
        t[1, 0], t[0, 1], t[0, 0] = l[0] % p, l[1] % p, l[2] % p
        return t

    one = np.zeros((4, 4), dtype=np.int64)
    one[0, 0] = 1
    xs, ys = [one], [one]
    for _ in range(3):
        xs.append(_mul(xs[-1], linear(lx), p))
        ys.append(_mul(ys[-1], linear(ly), p))
    out = np.zeros((4, 4), dtype=np.int64)
    for i, j in zip(*np.nonzero(g)):
        out += g[i, j] * _mul(xs[i], ys[j], p)
    return out % p


def _pullback(w: GeneralForm, h: AffineElement, p: int) -> GeneralForm:
    """``h^* w``: substitute the coordinate map ``h`` into ``w``."""
    (a11, a12), (a21, a22) = h.matrix()
    lx, ly = (a11, a12, h.v1), (a21, a22, h.v2)
    P = _substitute(_grid(w.pcoeffs), lx, ly, p)
    Q = _substitute(_grid(w.qcoeffs), lx, ly, p)
    return GeneralForm(_ungrid((a11 * P + a21 * Q) % p, p),
                       _ungrid((a12 * P + a22 * Q) % p, p))


def act_affine(g: AffineElement, w, p: int = DEFAULT_P) -> GeneralForm:
    """Push ``w`` forward along ``g``."""
    if isinstance(w, PoincareForm):
        w = w.to_general()
    if g.det(p) == 0:
        raise SingularMatrix("affine element has singular linear part")
    return _pullback(w, g.inverse(p), p)


# -- built-in centers

def hamiltonian_form(f3, f4, p: int = DEFAULT_P) -> PoincareForm:
    """``dF`` for ``F = (x^2+y^2)/2 + F3 + F4``.

    ``f3`` holds the coefficients of x^3, x^2y, xy^2, y^3 and ``f4`` those of
    x^4, x^3y, x^2y^2, xy^3, y^4.
    """
    f30, f21, f12, f03 = f3
    f40, f31, f22, f13, f04 = f4
    c = (3 * f30, 2 * f21, f12, 4 * f40, 3 * f31, 2 * f22, f13,
         f21, 2 * f12, 3 * f03, f31, 2 * f22, 3 * f13, 4 * f04)
    return PoincareForm.from_list(c, p)


def reversible_form(params, p: int = DEFAULT_P) -> PoincareForm:
    """Forms symmetric under ``(x, y, t) -> (x, -y, -t)``.

    ``params`` = (p20, p02, p30, p12, q11, q21, q03): P is even and Q odd in y.
    """
    p20, p02, p30, p12, q11, q21, q03 = params
    c = (p20, 0, p02, p30, 0, p12, 0, 0, q11, 0, 0, q21, 0, q03)
    return PoincareForm.from_list(c, p)


# -- zeros and local quadrics

def _evaluate(coeffs, x, y, p):
    return sum(c * pow(x, i, p) * pow(y, j, p)
               for c, (i, j) in zip(coeffs, MONOMIALS)) % p


def _partials(coeffs, x, y, p):
    dx = sum(c * i * pow(x, i - 1, p) * pow(y, j, p)
             for c, (i, j) in zip(coeffs, MONOMIALS) if i) % p
    dy = sum(c * j * pow(x, i, p) * pow(y, j - 1, p)
             for c, (i, j) in zip(coeffs, MONOMIALS) if j) % p
    return dx, dy


@lru_cache(maxsize=8)
def _monomial_table(p: int) -> np.ndarray:
    """Values of the 10 monomials on the grid F_p^2, shape (10, p, p)."""
    xs = np.arange(p, dtype=np.int64)
    xp = np.stack([xs ** k % p for k in range(4)])
    return np.stack([np.outer(xp[i], xp[j]) % p for i, j in MONOMIALS])


def find_zeros(w, p: int = DEFAULT_P):
    """All ``(point, is_symmetric)`` with P = Q = 0, in lexicographic order.

    A zero is symmetric when additionally ``dP/dy == dQ/dx`` there, i.e. the
    exterior derivative of the form vanishes.
    """
    if isinstance(w, PoincareForm):
        w = w.to_general()
    table = _monomial_table(p)
    P = np.tensordot(np.array(w.pcoeffs, dtype=np.int64), table, 1) % p
    Q = np.tensordot(np.array(w.qcoeffs, dtype=np.int64), table, 1) % p
    out = []
    for x, y in zip(*np.nonzero((P == 0) & (Q == 0))):
        x, y = int(x), int(y)
        py = _partials(w.pcoeffs, x, y, p)[1]
        qx = _partials(w.qcoeffs, x, y, p)[0]
        out.append(((x, y), py == qx))
    return out


@dataclass(frozen=True)
class LocalQuadric:
    """Symmetric matrix ((l11, l12), (l12, l22)) of the linear part at a zero."""

    l11: int
    l12: int
    l22: int
    p: int = DEFAULT_P

    def matrix(self):
        return ((self.l11, self.l12), (self.l12, self.l22))

    @property
    def det(self) -> int:
        return (self.l11 * self.l22 - self.l12 * self.l12) % self.p

    @property
    def rank(self) -> int:
        return matrix_rank(self.matrix(), self.p)

    def value(self, u) -> int:
        a, b = u
        return (self.l11 * a * a + 2 * self.l12 * a * b + self.l22 * b * b) % self.p


def local_quadric(w, v, p: int = DEFAULT_P) -> LocalQuadric:
    if isinstance(w, PoincareForm):
        w = w.to_general()
    x, y = v[0] % p, v[1] % p
    if _evaluate(w.pcoeffs, x, y, p) or _evaluate(w.qcoeffs, x, y, p):
        raise NotAZero(f"form does not vanish at {(x, y)}")
    px, py = _partials(w.pcoeffs, x, y, p)
    qx, qy = _partials(w.qcoeffs, x, y, p)
    if py != qx:
        raise NotSymmetric(f"d(omega) does not vanish at {(x, y)}")
    return LocalQuadric(px, py, qy, p)


def _congruence_to_identity(L: LocalQuadric, p: int):
    """A matrix M0 (row-major) with M0^t L M0 = I."""
    F = get_field(p)
    d = L.det
    if d == 0:
        raise DegenerateQuadric("local quadric has rank < 2")
    r = F.sqrt(d)
    if r is None:
        raise NonSquareDiscriminant(f"det L = {d} is not a square mod {p}")
    # search from (1, 0) so that L = I yields M0 = I
    u = next(((a % p, b) for a in range(1, p + 1) for b in range(p)
              if L.value((a, b)) == 1), None)
    if u is None:  # unreachable for nondegenerate binary forms
        raise DegenerateQuadric("quadric does not represent 1")
    # w = J L u is L-orthogonal to u with q(w) = det L
    lu = ((L.l11 * u[0] + L.l12 * u[1]) % p, (L.l12 * u[0] + L.l22 * u[1]) % p)
    ri = F.inv(r)
    w = (-lu[1] * ri % p, lu[0] * ri % p)
    return ((u[0], w[0]), (u[1], w[1]))


def normalizing_element(w, v, coset_choice: AffineElement | None = None,
                        p: int = DEFAULT_P) -> AffineElement:
    """Affine ``g`` with ``act_affine(g, w)`` a Poincare form, ``g(v) = 0``.

    The solutions form a coset ``M0 * O(2)``; ``coset_choice`` (an element of
    O(2), identity by default) picks the member.
    """
    try:
        L = local_quadric(w, v, p)
    except (NotAZero, NotSymmetric) as exc:
        raise NotSymmetricZero(str(exc)) from exc
    m0 = _congruence_to_identity(L, p)
    o = (coset_choice or AffineElement.identity()).matrix()
    m = [[sum(m0[i][k] * o[k][j] for k in range(2)) % p for j in range(2)]
         for i in range(2)]
    # the pull-back x -> M x + v normalizes; act_affine wants its inverse
    return AffineElement.from_matrix(m, (v[0] % p, v[1] % p)).inverse(p)


def normalize_to_poincare(w, v, coset_choice: AffineElement | None = None,
                          p: int = DEFAULT_P) -> PoincareForm:
    g = normalizing_element(w, v, coset_choice, p)
    out = act_affine(g, w, p)
    if not out.is_poincare():  # M^t L M = I forces the linear part
        raise AssertionError("normalization did not reach x dx + y dy")
    return out.to_poincare()


# -- the orthogonal group

@lru_cache(maxsize=8)
def circle_points(p: int = DEFAULT_P) -> tuple:
    """All (a, b) in F_p^2 with a^2 + b^2 = 1."""
    return tuple((a, b) for a in range(p) for b in range(p)
                 if (a * a + b * b) % p == 1)


def o2_order(p: int = DEFAULT_P) -> int:
    return 2 * len(circle_points(p))


def o2_element(index: int, p: int = DEFAULT_P) -> AffineElement:
    """Enumerate O(2)(F_p): rotations first, then reflections."""
    pts = circle_points(p)
    a, b = pts[index % len(pts)]
    if index < len(pts):
        m = ((a, -b % p), (b, a))
    else:
        m = ((a, b), (b, -a % p))
    return AffineElement.from_matrix(m)


def random_o2_element(rng, p: int = DEFAULT_P) -> AffineElement:
    """Uniform element of O(2)(F_p); ``rng`` is a numpy Generator."""
    g = o2_element(int(rng.integers(o2_order(p))), p)
    (a, b), (c, d) = g.matrix()
    assert (a * a + c * c) % p == 1 and (b * b + d * d) % p == 1 \
        and (a * b + c * d) % p == 0
    return g
