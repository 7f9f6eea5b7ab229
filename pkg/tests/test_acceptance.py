"""Acceptance criteria 1-9.

Each criterion is a function returning ``(passed, detail)``.  Under pytest
one PASS/FAIL line per criterion is written to the terminal; running this
file directly prints the same lines.

Criterion 5 scans 2e8 points and dominates the runtime (several minutes
per CPU core available).
"""
import math
import os
import sys
import tempfile
from collections import Counter
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from centerfield.estimator import (  # noqa: E402
    RankHistogram,
    ScanConfig,
    estimate_components,
    orbit_miss_probability,
    scan,
)
from centerfield.families import CR_DIMENSIONS, codim_in_W  # noqa: E402
from centerfield.forms import act_affine, random_o2_element  # noqa: E402
from centerfield.frommer import (  # noqa: E402
    focal_jacobian,
    focal_values,
    focal_values_batch,
    tangent_codim,
    tangent_codims,
    vanishing_orders,
)
from centerfield.store import RecordSink, merge, read_records  # noqa: E402
from conftest import random_hamiltonian, random_reversible  # noqa: E402
from oracles import lagrange_derivative_at_zero  # noqa: E402

P = 29
N_LARGE = 402376372880300032
PUBLISHED_COUNTS = {1: 208, 2: 61435, 3: 2506200, 4: 27367779, 5: 19681046795,
                  6: 1328814108, 7: 89629060, 8: 3082816, 9: 332067, 10: 31422,
                  11: 2556, 12: 1}
PUBLISHED_ESTIMATES = {5: ("1.00", None), 6: ("1.96", None), 7: ("3.84", None),
                   8: ("3.83", None), 9: ("11.97", "0.04"), 10: ("32.85", "0.37"),
                   11: ("77.50", "3.07"), 12: ("0.88", "1.76")}
CR_CODIM = {"CR1": 6, "CR2": 8, "CR3": 9, "CR4": 8, "CR6": 8, "CR8": 9, "CR9": 9,
            "CR10": 9, "CR11": 7, "CR13": 9, "CR14": 8, "CR15": 9, "CR17": 11}
JOBS = os.cpu_count() or 1


def criterion_1():
    rows = estimate_components(RankHistogram(PUBLISHED_COUNTS, N_LARGE), P)
    got = {r.codim: (str(r.estimate_2dp), str(r.error_2dp)) for r in rows}
    bad = [c for c, (e, err) in PUBLISHED_ESTIMATES.items()
           if got[c][0] != e or (err is not None and got[c][1] != err)]
    return not bad, f"mismatched codims {bad}" if bad else "8 rows reproduced"


def criterion_2():
    miss = orbit_miss_probability(N_LARGE, P, 1568)
    return 0.115 <= miss <= 0.125, f"miss = {miss:.5f}"


def _center_suite(forms, expected_codim, threshold):
    pts = np.array([w.coeffs for w in forms], dtype=np.int64)
    orders = vanishing_orders(pts, 13, P)
    all_vanish = int((orders == 13).sum())
    codims = tangent_codims(pts[orders == 13], 13, P)
    frac = float((codims == expected_codim).mean()) if codims.size else 0.0
    ok = all_vanish == len(pts) and frac >= threshold
    return ok, (f"AllVanish {all_vanish}/{len(pts)}, codim {expected_codim} "
                f"fraction {frac:.4f}, histogram {dict(sorted(Counter(codims.tolist()).items()))}")


def criterion_3():
    rng = np.random.default_rng(3)
    return _center_suite([random_hamiltonian(rng) for _ in range(10_000)], 5, 0.80)


def criterion_4():
    rng = np.random.default_rng(4)
    forms = []
    for k in range(10_000):
        w = random_reversible(rng)
        if k % 2:
            w = act_affine(random_o2_element(rng), w).to_poincare()
        forms.append(w)
    return _center_suite(forms, 6, 0.75)


def criterion_5(n=200_000_000, seed=2024):
    res = scan(ScanConfig(p=P, m=13, count=n, seed=seed, jobs=JOBS))
    h = res.histogram
    k = h.counts.get(5, 0)
    est = {r.codim: r.estimate for r in estimate_components(h, P)} if h.total else {}
    e5 = float(est.get(5, 0))
    ok = 4 <= k <= 17 and 0.41 <= e5 <= 1.74
    return ok, (f"N={n} seed={seed}: codim-5 hits k={k}, estimate {e5:.2f}, "
                f"histogram {h.counts}, {res.manifest.wall_time:.0f}s")


def criterion_6():
    got = {name: codim_in_W(*CR_DIMENSIONS[name]).codim for name in CR_CODIM}
    bad = {k: v for k, v in got.items() if v != CR_CODIM[k]}
    return not bad and len(got) == 13, f"mismatches {bad}" if bad else "13 rows"


def criterion_7():
    rng = np.random.default_rng(7)
    checked = 0
    for _ in range(100):
        c, d = rng.integers(0, P, 14), rng.integers(0, P, 14)
        jac = focal_jacobian(c, 3, P)
        for j in (1, 2, 3):
            line = np.array([(c + t * d) % P for t in range(2 * j + 1)])
            samples = focal_values_batch(line, j, P)[:, j - 1]
            if int(jac[j - 1] @ d % P) != lagrange_derivative_at_zero(samples, P):
                return False, f"mismatch at s_{j}, c={c.tolist()}, d={d.tolist()}"
            checked += 1
    return True, f"{checked} directional derivatives agree"


def criterion_8():
    rng = np.random.default_rng(8)
    weights = np.array([1, 1, 1, 2, 2, 2, 2, 1, 1, 1, 2, 2, 2, 2])
    for _ in range(100):
        c = rng.integers(0, P, 14)
        lam = int(rng.integers(1, P))
        scaled = c * np.array([pow(lam, int(w), P) for w in weights]) % P
        a = focal_values(c, 13, early_abort=False).values
        b = focal_values(scaled, 13, early_abort=False).values
        if any(bj != aj * pow(lam, 2 * j, P) % P for j, (aj, bj) in enumerate(zip(a, b), 1)):
            return False, f"scaling law fails for c={c.tolist()}, lambda={lam}"
    for k in range(100):
        w = random_hamiltonian(rng) if k % 2 else random_reversible(rng)
        moved = act_affine(random_o2_element(rng), w).to_poincare()
        if not focal_values(moved).all_vanish or tangent_codim(moved) != tangent_codim(w):
            return False, f"O(2) invariance fails for {w.coeffs}"
    return True, "100 scaling checks, 100 O(2) checks"


def criterion_9(n=1_000_000, seed=99):
    results = {j: scan(ScanConfig(p=P, m=13, count=n, seed=seed, jobs=j, min_vanish=2))
               for j in (1, 4, 8)}
    shards = [scan(ScanConfig(p=P, m=13, count=n // 4, seed=seed, min_vanish=2,
                              start=s * (n // 4))) for s in (3, 1, 0, 2)]
    merged = merge(s.manifest for s in shards)
    base = results[1].manifest
    same = all(r.manifest == base for r in results.values()) and merged == base
    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "hits.jsonl"
        with RecordSink(path, 13) as sink:
            for s in shards:
                for r in s.records:
                    sink.write(r)
        records = read_records(path)
    replay_ok = sorted(records, key=lambda r: r.index) == results[8].records and all(
        (lambda o: o.vanish_upto == r.vanish_upto and o.jacobian_rank == r.jac_rank)(
            focal_values(r.coeffs, 13, with_rank=True))
        for r in records)
    return same and replay_ok, (f"histograms identical: {same}; {len(records)} persisted "
                                f"records replay: {replay_ok}")


CRITERIA = {1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4,
            5: criterion_5, 6: criterion_6, 7: criterion_7, 8: criterion_8,
            9: criterion_9}


def _line(num, ok, detail):
    return f"acceptance criterion {num}: {'PASS' if ok else 'FAIL'} ({detail})"


@pytest.mark.parametrize("num", sorted(CRITERIA))
def test_criterion(num, request):
    ok, detail = CRITERIA[num]()
    line = _line(num, ok, detail)
    tr = request.config.pluginmanager.getplugin("terminalreporter")
    if tr is not None:
        tr.write_line("")
        tr.write_line(line)
    print(line)
    assert ok, line


if __name__ == "__main__":
    wanted = [int(a) for a in sys.argv[1:]] or sorted(CRITERIA)
    failed = 0
    for num in wanted:
        ok, detail = CRITERIA[num]()
        failed += not ok
        print(_line(num, ok, detail), flush=True)
    sys.exit(1 if failed else 0)
