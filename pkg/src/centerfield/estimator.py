"""Random sampling of W(F_p), the focal-value scan and component estimates.

Points are generated counter-style: point ``i`` of seed ``s`` is read from a
fixed block of a Philox stream keyed by ``s``, so any partition of the index
range into shards reproduces the same points.

The component estimate for tangent codimension ``c`` is

    count_c / N * p^c      with error      2 * sqrt(count_c) / N * p^c

(a 95% band).  If the codim-c locus is singular the estimate is best read as
a lower bound on the number of reduced components.
"""
from __future__ import annotations

import math
import time
from collections import Counter
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal, localcontext
from fractions import Fraction
from multiprocessing import Pool

import numpy as np

from . import __version__
from .arith import DEFAULT_P
from .forms import PoincareForm
from .frommer import check_modulus, tangent_codims, vanishing_orders
from .store import ExperimentManifest, ScanRecord

CHUNK = 1 << 16
_WORDS = 16  # 64-bit words per point: 4 Philox blocks, 14 used


def sample_points(seed: int, start: int, count: int, p: int = DEFAULT_P) -> np.ndarray:
    """Points ``start .. start+count-1`` as a ``(count, 14)`` int64 array."""
    bg = np.random.Philox(key=seed)
    bg.advance(start * (_WORDS // 4))
    raw = bg.random_raw(count * _WORDS).reshape(count, _WORDS)[:, :14]
    return (raw % np.uint64(p)).astype(np.int64)


def sample_point(seed: int, index: int, p: int = DEFAULT_P) -> PoincareForm:
    return PoincareForm(tuple(int(c) for c in sample_points(seed, index, 1, p)[0]))


@dataclass
class ScanConfig:
    p: int = DEFAULT_P
    m: int = 13
    count: int = 1
    seed: int = 0
    jobs: int = 1
    min_vanish: int | None = None
    start: int = 0

    def __post_init__(self):
        check_modulus(self.m, self.p)
        if self.count < 0:
            raise ValueError("count must be non-negative")
        if self.min_vanish is None:
            self.min_vanish = self.m
        if not 0 <= self.min_vanish <= self.m:
            raise ValueError("min_vanish must lie in [0, m]")


@dataclass
class RankHistogram:
    counts: dict = field(default_factory=dict)
    total: int = 0

    def merge(self, other: "RankHistogram") -> "RankHistogram":
        c = Counter(self.counts)
        c.update(other.counts)
        return RankHistogram(dict(sorted(c.items())), self.total + other.total)


@dataclass
class ScanResult:
    manifest: ExperimentManifest
    records: list

    @property
    def histogram(self) -> RankHistogram:
        return RankHistogram(dict(self.manifest.histogram), self.manifest.total)


def _scan_chunk(args):
    seed, p, m, min_vanish, lo, hi = args
    pts = sample_points(seed, lo, hi - lo, p)
    orders = vanishing_orders(pts, m, p)
    keep = np.flatnonzero(orders >= min_vanish)
    full = keep[orders[keep] == m]
    ranks = dict(zip(full.tolist(), tangent_codims(pts[full], m, p).tolist()))
    records = [
        ScanRecord(p, tuple(pts[i].tolist()), int(orders[i]), ranks.get(int(i)),
                   seed, lo + int(i))
        for i in keep
    ]
    hist = Counter(ranks.values())
    by_order = Counter({k: n for k, n in enumerate(np.bincount(orders).tolist()) if n})
    return lo, hi, hist, by_order, records


def _chunks(start, count):
    lo, end = start, start + count
    while lo < end:
        hi = min(end, (lo // CHUNK + 1) * CHUNK)
        yield lo, hi
        lo = hi


def scan(cfg: ScanConfig) -> ScanResult:
    """Evaluate focal values at points ``[start, start+count)``.

    Points where all ``m`` values vanish get their tangent codimension
    tallied; points with at least ``min_vanish`` vanishing values are
    returned as records.  Chunk boundaries do not depend on ``jobs``.
    """
    t0 = time.perf_counter()
    tasks = [(cfg.seed, cfg.p, cfg.m, cfg.min_vanish, lo, hi)
             for lo, hi in _chunks(cfg.start, cfg.count)]
    if cfg.jobs > 1 and len(tasks) > 1:
        with Pool(cfg.jobs) as pool:
            parts = pool.map(_scan_chunk, tasks, chunksize=1)
    else:
        parts = [_scan_chunk(t) for t in tasks]
    hist, orders, records = Counter(), Counter(), []
    for _, _, h, o, r in parts:
        hist.update(h)
        orders.update(o)
        records.extend(r)
    mf = ExperimentManifest(
        kind="scan", p=cfg.p, m=cfg.m, seed=cfg.seed, version=__version__,
        config={"min_vanish": cfg.min_vanish},
        ranges=[[cfg.start, cfg.start + cfg.count]] if cfg.count else [],
        total=cfg.count,
        histogram={int(k): v for k, v in sorted(hist.items())},
        orders={int(k): v for k, v in sorted(orders.items()) if v},
        wall_time=time.perf_counter() - t0,
    )
    return ScanResult(mf, records)


def round2(x) -> Decimal:
    with localcontext() as ctx:
        ctx.prec = 60
        if isinstance(x, Fraction):
            x = Decimal(x.numerator) / Decimal(x.denominator)
        return Decimal(x).quantize(Decimal("0.01"), rounding=ROUND_HALF_UP)


@dataclass(frozen=True)
class EstimateRow:
    codim: int
    count: int
    estimate: Fraction
    error: Decimal

    @property
    def estimate_2dp(self) -> Decimal:
        return round2(self.estimate)

    @property
    def error_2dp(self) -> Decimal:
        return round2(self.error)


def estimate_components(h: RankHistogram, p: int = DEFAULT_P) -> list[EstimateRow]:
    """One row per codimension with a nonzero count."""
    if h.total < 1:
        raise ValueError("histogram total must be at least 1")
    rows = []
    for c, n in sorted(h.counts.items()):
        if n <= 0:
            continue
        scale = Fraction(p ** c, h.total)
        with localcontext() as ctx:
            ctx.prec = 60
            err = 2 * Decimal(n).sqrt() * Decimal(scale.numerator) / Decimal(scale.denominator)
        rows.append(EstimateRow(int(c), int(n), n * scale, err))
    return rows


def orbit_miss_probability(n_samples: int, p: int = DEFAULT_P, group_order: int = 1568) -> float:
    """Chance that ``n_samples`` uniform draws miss a given free orbit.

    ``(1 - group_order / p^14) ** n_samples``, evaluated in log space.  There
    are about ``p^14 / group_order`` such orbits.
    """
    if group_order < 1:
        raise ValueError("group_order must be positive")
    if n_samples == 0:
        return 1.0
    q = group_order / p ** 14
    if q >= 1:
        return 0.0
    return math.exp(n_samples * math.log1p(-q))


def fundamental_orbit_count(p: int = DEFAULT_P, group_order: int = 1568) -> float:
    return p ** 14 / group_order
