import math
from decimal import Decimal
from fractions import Fraction

import numpy as np
import pytest
from scipy.stats import chi2

from centerfield.errors import ModulusTooSmall
from centerfield.estimator import (
    RankHistogram,
    ScanConfig,
    estimate_components,
    fundamental_orbit_count,
    orbit_miss_probability,
    sample_point,
    sample_points,
    scan,
)
from centerfield.frommer import focal_values
from centerfield.store import merge

P = 29
N_LARGE = 402376372880300032
PUBLISHED_COUNTS = {1: 208, 2: 61435, 3: 2506200, 4: 27367779, 5: 19681046795,
           6: 1328814108, 7: 89629060, 8: 3082816, 9: 332067, 10: 31422,
           11: 2556, 12: 1}


def test_sample_point_deterministic():
    assert sample_point(11, 12345) == sample_point(11, 12345)
    assert sample_point(11, 12345) != sample_point(11, 12346)
    assert sample_point(11, 0) != sample_point(12, 0)


def test_sample_points_independent_of_partition():
    whole = sample_points(3, 100, 500)
    parts = np.concatenate([sample_points(3, 100, 123), sample_points(3, 223, 377)])
    assert np.array_equal(whole, parts)
    assert sample_point(3, 250).coeffs == tuple(whole[150])


def test_consecutive_points_differ():
    pts = sample_points(9, 0, 20_000)
    assert not (pts[1:] == pts[:-1]).all(axis=1).any()


def test_sample_points_uniform():
    pts = sample_points(2024, 0, 1_000_000)
    assert pts.min() >= 0 and pts.max() < P
    crit = chi2.ppf(1 - 1e-6, P - 1)  # roughly a 5 sigma threshold
    for slot in range(14):
        counts = np.bincount(pts[:, slot], minlength=P)
        stat = ((counts - 1e6 / P) ** 2 / (1e6 / P)).sum()
        assert stat < crit, slot


def test_scan_first_value_rate():
    res = scan(ScanConfig(p=P, m=13, count=100_000, seed=7, min_vanish=1))
    hits = len(res.records)
    assert abs(hits - 100_000 / P) < 4 * math.sqrt(100_000 / P)
    assert res.manifest.orders.get(0, 0) + hits == 100_000
    for r in res.records[:50]:
        out = focal_values(r.coeffs)
        assert out.vanish_upto == r.vanish_upto >= 1


def test_scan_config_validation():
    with pytest.raises(ModulusTooSmall):
        ScanConfig(p=29, m=14)
    with pytest.raises(ValueError):
        ScanConfig(count=-1)
    with pytest.raises(ValueError):
        ScanConfig(m=5, min_vanish=6)
    assert ScanConfig(m=7).min_vanish == 7


def test_scan_job_count_irrelevant():
    a = scan(ScanConfig(count=150_000, seed=5, jobs=1, min_vanish=2))
    b = scan(ScanConfig(count=150_000, seed=5, jobs=3, min_vanish=2))
    assert a.manifest == b.manifest
    assert a.records == b.records


def test_disjoint_ranges_merge_to_full_scan():
    full = scan(ScanConfig(count=90_000, seed=1, min_vanish=2))
    shards = [scan(ScanConfig(count=30_000, seed=1, min_vanish=2, start=s)).manifest
              for s in (60_000, 0, 30_000)]
    assert merge(shards) == full.manifest
    assert full.histogram.merge(RankHistogram()).counts == full.manifest.histogram


def test_published_estimates_reproduced():
    rows = estimate_components(RankHistogram(PUBLISHED_COUNTS, N_LARGE), P)
    table = {r.codim: (str(r.estimate_2dp), str(r.error_2dp)) for r in rows}
    assert [table[c][0] for c in range(5, 13)] == [
        "1.00", "1.96", "3.84", "3.83", "11.97", "32.85", "77.50", "0.88"]
    assert table[9][1] == "0.04"
    assert table[10][1] == "0.37"
    assert table[11][1] == "3.07"
    assert table[12][1] == "1.76"


def test_estimates_are_exact_rationals():
    row = estimate_components(RankHistogram({5: 19681046795}, N_LARGE), P)[0]
    assert row.estimate == Fraction(19681046795 * P ** 5, N_LARGE)
    assert isinstance(row.error, Decimal) and row.error >= 0


def test_zero_counts_produce_no_rows():
    assert estimate_components(RankHistogram({5: 0, 6: 3}, 10), P)[0].codim == 6
    with pytest.raises(ValueError):
        estimate_components(RankHistogram({}, 0), P)


def test_orbit_miss_probability():
    assert 0.115 <= orbit_miss_probability(N_LARGE, P, 1568) <= 0.125
    assert orbit_miss_probability(0, P, 1568) == 1.0
    n = P ** 14 // 1568
    assert orbit_miss_probability(n, P, 1568) == pytest.approx(math.exp(-1), rel=1e-9)
    assert fundamental_orbit_count(P, 1568) == pytest.approx(P ** 14 / 1568)
    with pytest.raises(ValueError):
        orbit_miss_probability(1, P, 0)
