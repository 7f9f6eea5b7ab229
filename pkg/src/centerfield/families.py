"""Parametrized families of forms with a center and the family scan.

A family is a polynomial map ``phi: A^n -> V`` given by 20 sparse integer
polynomials, one per coefficient slot of P and Q (monomial order as in
:mod:`centerfield.forms`).  On disk a family is JSON::

    {"name": "...", "n": 7, "d1": 0, "d2": 0,
     "coeffs": [[[[e_1, ..., e_n], c], ...], ... 20 lists ...]}

``d1`` is the generic fiber dimension of ``phi`` and ``d2`` the generic
dimension of the set of group elements carrying ``phi(a)`` back into the
image; both are inputs.  The orbit family ``G x A^n -> V`` then has
dimension ``n + 6 - d1 - d2`` and meets W in dimension ``n + 1 - d1 - d2``.
"""
from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from multiprocessing import Pool
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .arith import DEFAULT_P, DualRing, get_field, matrix_rank
from .errors import DegenerateQuadric, NonSquareDiscriminant, OutOfRange
from .forms import GeneralForm, find_zeros, normalize_to_poincare, random_o2_element
from .frommer import check_modulus, tangent_codims, vanishing_orders
from .store import ExperimentManifest, ScanRecord

# (n, d1, d2) of the rational reversible families CR_i.  CR_5, CR_7, CR_12
# and CR_16 lie inside other families and are left out; CR_4 is contained in
# CR_6, so both rows describe one component.
CR_DIMENSIONS = {
    "CR1": (10, 0, 3), "CR2": (6, 0, 1), "CR3": (5, 0, 1), "CR4": (7, 0, 2),
    "CR6": (8, 0, 3), "CR8": (5, 0, 1), "CR9": (5, 0, 1), "CR10": (5, 0, 1),
    "CR11": (8, 0, 2), "CR13": (5, 0, 1), "CR14": (6, 0, 1), "CR15": (5, 0, 1),
    "CR17": (2, 0, 0),
}


@dataclass(frozen=True)
class FamilyDef:
    name: str
    n: int
    coeff_polys: tuple
    d1: int = 0
    d2: int = 0
    notes: str = ""

    def __post_init__(self):
        if len(self.coeff_polys) != 20:
            raise ValueError("a family needs 20 coefficient polynomials")
        if self.d1 < 0 or self.d2 < 0:
            raise ValueError("d1 and d2 must be non-negative")
        for poly in self.coeff_polys:
            for exps, c in poly:
                if len(exps) != self.n or min(exps, default=0) < 0:
                    raise ValueError(f"bad exponent vector {exps} for n={self.n}")
                if not isinstance(c, int):
                    raise ValueError("coefficients must be integers")

    @classmethod
    def from_dict(cls, d) -> "FamilyDef":
        polys = tuple(tuple((tuple(int(e) for e in exps), int(c)) for exps, c in poly)
                      for poly in d["coeffs"])
        return cls(d["name"], int(d["n"]), polys, int(d.get("d1", 0)),
                   int(d.get("d2", 0)), d.get("notes", ""))

    def to_dict(self) -> dict:
        return {"name": self.name, "n": self.n, "d1": self.d1, "d2": self.d2,
                "notes": self.notes,
                "coeffs": [[[list(e), c] for e, c in poly] for poly in self.coeff_polys]}

    @classmethod
    def load(cls, path) -> "FamilyDef":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()) + "\n")


def _linear_family(name, n, slots, d2, notes):
    """Family whose slots are ``const`` or ``k * a_i`` (``slots``: slot -> list)."""
    polys = [[] for _ in range(20)]
    for slot, terms in slots.items():
        for var, c in terms:
            e = [0] * n
            if var is not None:
                e[var] = 1
            polys[slot].append((tuple(e), c))
    return FamilyDef(name, n, tuple(tuple(p) for p in polys), 0, d2, notes)


def hamiltonian_family() -> FamilyDef:
    """``d((x^2+y^2)/2 + F3 + F4)``; parameters are the 9 coefficients of F3, F4."""
    # slots 0..9 are P, 10..19 are Q
    slots = {
        1: [(None, 1)], 3: [(0, 3)], 4: [(1, 2)], 5: [(2, 1)],
        6: [(4, 4)], 7: [(5, 3)], 8: [(6, 2)], 9: [(7, 1)],
        12: [(None, 1)], 13: [(1, 1)], 14: [(2, 2)], 15: [(3, 3)],
        16: [(5, 1)], 17: [(6, 2)], 18: [(7, 3)], 19: [(8, 4)],
    }
    return _linear_family("hamiltonian", 9, slots, 1, "exact forms dF, deg F = 4")


def reversible_family() -> FamilyDef:
    """P even and Q odd in y; parameters (p20, p02, p30, p12, q11, q21, q03)."""
    slots = {
        1: [(None, 1)], 3: [(0, 1)], 5: [(1, 1)], 6: [(2, 1)], 8: [(3, 1)],
        12: [(None, 1)], 14: [(4, 1)], 17: [(5, 1)], 19: [(6, 1)],
    }
    return _linear_family("reversible", 7, slots, 0, "symmetric under y -> -y")


BUILTIN_FAMILIES = {"hamiltonian": hamiltonian_family, "reversible": reversible_family}


def _eval_sparse(terms, point, ring):
    acc = ring(0, 0)
    for exps, c in terms:
        t = ring(c, 0)
        for x, e in zip(point, exps):
            for _ in range(e):
                t = ring.mul(t, x)
        acc = ring.add(acc, t)
    return acc


def eval_family(f: FamilyDef, a, p: int = DEFAULT_P) -> GeneralForm:
    vals = []
    for poly in f.coeff_polys:
        acc = 0
        for exps, c in poly:
            t = c
            for x, e in zip(a, exps):
                if e:
                    t = t * pow(int(x), e, p)
            acc += t
        vals.append(acc % p)
    return GeneralForm.from_list(vals, p)


def dphi_matrix(f: FamilyDef, a, p: int = DEFAULT_P) -> np.ndarray:
    """The ``20 x n`` matrix of partials of ``phi`` at ``a``, by dual numbers."""
    ring = DualRing(get_field(p))
    out = np.zeros((20, f.n), dtype=np.int64)
    for i in range(f.n):
        point = [ring(int(x), int(k == i)) for k, x in enumerate(a)]
        for slot, poly in enumerate(f.coeff_polys):
            out[slot, i] = _eval_sparse(poly, point, ring).eps
    return out


def rank_dphi(f: FamilyDef, a, p: int = DEFAULT_P) -> int:
    return matrix_rank(dphi_matrix(f, a, p), p)


class CodimInfo(NamedTuple):
    dim: int
    codim: int
    dim_im_psi: int


def codim_in_W(n: int, d1: int = 0, d2: int = 0) -> CodimInfo:
    dim = n + 1 - d1 - d2
    if not 0 <= dim <= 14:
        raise OutOfRange(f"n + 1 - d1 - d2 = {dim} is outside [0, 14]")
    return CodimInfo(dim, 14 - dim, n + 6 - d1 - d2)


SKIP_REASONS = ("no_symmetric_zero", "degenerate_quadric",
                "non_square_discriminant", "nonvanishing")


@dataclass
class FamilyScanReport:
    family: str
    p: int
    m: int
    seed: int
    draws: int
    dim: int
    histogram: dict = field(default_factory=dict)
    skips: dict = field(default_factory=dict)
    weighted: dict = field(default_factory=dict)
    hits: list = field(default_factory=list)
    candidates: int = 0

    def _scale(self, counts) -> dict:
        return {c: Fraction(n) / self.draws * Fraction(self.p) ** (self.dim - 14 + c)
                for c, n in sorted(counts.items())}

    @property
    def scaled(self) -> dict:
        """codim -> weighted count / draws * p^(dim - 14 + codim).

        A draw with k usable zeros gives each of its hits weight 1/k, so
        forms with many rational symmetric zeros are not oversampled.
        """
        return self._scale(self.weighted)

    @property
    def scaled_unweighted(self) -> dict:
        """Same scaling applied to the raw hit counts."""
        return self._scale(self.histogram)

    def to_manifest(self, start: int = 0) -> ExperimentManifest:
        return ExperimentManifest(
            kind="family", p=self.p, m=self.m, seed=self.seed,
            config={"family": self.family, "dim": self.dim},
            ranges=[[start, start + self.draws]] if self.draws else [],
            total=self.draws, histogram=dict(self.histogram),
            orders={}, skips=dict(self.skips),
            weighted={c: str(w) for c, w in self.weighted.items()})


def draw_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng([seed, index])


def _family_candidates(f, seed, p, lo, hi):
    skips = Counter()
    cands, where, weight = [], [], []
    for i in range(lo, hi):
        rng = draw_rng(seed, i)
        a = rng.integers(0, p, f.n)
        w = eval_family(f, a, p)
        sym = [z for z, is_sym in find_zeros(w, p) if is_sym]
        if not sym:
            skips["no_symmetric_zero"] += 1
        before = len(cands)
        for z in sym:
            try:
                pf = normalize_to_poincare(w, z, random_o2_element(rng, p), p)
            except DegenerateQuadric:
                skips["degenerate_quadric"] += 1
                continue
            except NonSquareDiscriminant:
                skips["non_square_discriminant"] += 1
                continue
            cands.append(pf.coeffs)
            where.append(i)
        k = len(cands) - before
        if k:
            weight.extend([Fraction(1, k)] * k)
    return cands, where, weight, skips


def _family_chunk(args):
    f, seed, p, m, lo, hi = args
    cands, where, weight, skips = _family_candidates(f, seed, p, lo, hi)
    hist, wsum, hits = Counter(), Counter(), []
    if cands:
        pts = np.array(cands, dtype=np.int64)
        orders = vanishing_orders(pts, m, p)
        full = np.flatnonzero(orders == m)
        skips["nonvanishing"] += int(len(cands) - full.size)
        for i, r in zip(full.tolist(), tangent_codims(pts[full], m, p).tolist()):
            hist[r] += 1
            wsum[r] += weight[i]
            hits.append(ScanRecord(p, tuple(cands[i]), m, r, seed, where[i]))
    return hist, wsum, skips, hits, len(cands)


def family_scan(f: FamilyDef, draws: int = 2000, seed: int = 0, p: int = DEFAULT_P,
                m: int = 13, jobs: int = 1, chunk: int = 250) -> FamilyScanReport:
    """Sample points of ``W`` meeting the orbit family of ``f``.

    Each draw evaluates ``phi`` at a random parameter, moves every rational
    symmetric zero to the origin, normalizes the local quadric to the
    identity with a uniformly random O(2) coset member, and tallies the
    tangent codimension of those results whose first ``m`` focal values
    vanish.
    """
    check_modulus(m, p)
    dim = codim_in_W(f.n, f.d1, f.d2).dim
    tasks = [(f, seed, p, m, lo, min(draws, lo + chunk)) for lo in range(0, draws, chunk)]
    if jobs > 1 and len(tasks) > 1:
        with Pool(jobs) as pool:
            parts = pool.map(_family_chunk, tasks, chunksize=1)
    else:
        parts = [_family_chunk(t) for t in tasks]
    hist, wsum, skips, hits, ncand = Counter(), Counter(), Counter(), [], 0
    for h, w, s, r, k in parts:
        hist.update(h)
        wsum.update(w)
        skips.update(s)
        hits.extend(r)
        ncand += k
    return FamilyScanReport(
        f.name, p, m, seed, draws, dim,
        histogram=dict(sorted(hist.items())),
        weighted=dict(sorted(wsum.items())),
        skips={k: skips.get(k, 0) for k in SKIP_REASONS},
        hits=hits, candidates=ncand)
