import json

import pytest

from centerfield.errors import IncompatibleManifests, InvalidRecord
from centerfield.estimator import ScanConfig, scan
from centerfield.frommer import focal_values
from centerfield.store import (
    ExperimentManifest,
    RecordSink,
    ScanRecord,
    append_record,
    merge,
    read_records,
)

HIT = ScanRecord(29, tuple(range(14)), 13, 5, 7, 42)
PARTIAL = ScanRecord(29, (1,) * 14, 2, None, 7, 43)


def test_round_trip(tmp_path):
    path = tmp_path / "hits.jsonl"
    with RecordSink(path, 13) as sink:
        append_record(sink, HIT)
        append_record(sink, PARTIAL)
    assert read_records(path) == [HIT, PARTIAL]
    lines = path.read_text().splitlines()
    assert len(lines) == 2
    assert "jac_rank" not in json.loads(lines[1])
    assert ScanRecord.from_json(HIT.to_json()) == HIT


def test_append_only(tmp_path):
    path = tmp_path / "hits.jsonl"
    RecordSink(path, 13).write(HIT)
    RecordSink(path, 13).write(PARTIAL)
    assert read_records(path) == [HIT, PARTIAL]


@pytest.mark.parametrize("bad", [
    ScanRecord(29, (0,) * 14, 12, 5, 0, 0),
    ScanRecord(29, (0,) * 14, 13, None, 0, 0),
    ScanRecord(29, (0,) * 13, 1, None, 0, 0),
    ScanRecord(29, (29,) + (0,) * 13, 1, None, 0, 0),
    ScanRecord(29, (0,) * 14, 14, 3, 0, 0),
])
def test_invalid_records_rejected(tmp_path, bad):
    path = tmp_path / "hits.jsonl"
    with pytest.raises(InvalidRecord):
        RecordSink(path, 13).write(bad)
    assert not path.exists() or path.read_text() == ""


def test_unwritable_sink(tmp_path):
    with pytest.raises(OSError):
        RecordSink(tmp_path / "missing" / "x.jsonl", 13).write(HIT)


def _manifest(lo, hi, hist, **kw):
    return ExperimentManifest("scan", 29, 13, 1, config={"min_vanish": 13},
                              ranges=[[lo, hi]], total=hi - lo, histogram=hist,
                              orders={13: sum(hist.values())}, **kw)


def test_merge_commutative_and_identity():
    a = _manifest(0, 10, {5: 1})
    b = _manifest(10, 30, {5: 2, 6: 1}, wall_time=3.0)
    assert merge([a, b]) == merge([b, a])
    assert merge([a, b]).ranges == [[0, 30]]
    assert merge([a, a.empty_like()]) == a
    c = _manifest(30, 40, {7: 1})
    assert merge([merge([a, b]), c]) == merge([a, merge([b, c])])


def test_merge_rejects_incompatible():
    a = _manifest(0, 10, {})
    with pytest.raises(IncompatibleManifests):
        merge([a, _manifest(5, 15, {})])
    other = _manifest(10, 20, {})
    other.seed = 2
    with pytest.raises(IncompatibleManifests):
        merge([a, other])
    with pytest.raises(IncompatibleManifests):
        merge([])


def test_manifest_save_load(tmp_path):
    a = _manifest(0, 10, {5: 1}, skips={"x": 2}, weighted={5: "1/2"})
    a.save(tmp_path / "m.json")
    assert ExperimentManifest.load(tmp_path / "m.json") == a
    a.check()
    a.total = 11
    with pytest.raises(IncompatibleManifests):
        a.check()


def test_four_shards_equal_unsharded(tmp_path):
    full = scan(ScanConfig(count=80_000, seed=3, min_vanish=3))
    shards = [scan(ScanConfig(count=20_000, seed=3, min_vanish=3, start=k * 20_000))
              for k in range(4)]
    paths = []
    for k, s in enumerate(shards):
        path = tmp_path / f"shard{k}.jsonl"
        with RecordSink(path, 13) as sink:
            for r in s.records:
                sink.write(r)
        s.manifest.save(str(path) + ".manifest.json")
        paths.append(path)
    merged = merge(ExperimentManifest.load(str(p) + ".manifest.json") for p in paths)
    assert merged == full.manifest
    joined = tmp_path / "all.jsonl"
    joined.write_text("".join(p.read_text() for p in paths))
    assert read_records(joined) == full.records
    for r in full.records:
        out = focal_values(r.coeffs, 13, with_rank=True)
        assert out.vanish_upto == r.vanish_upto and out.jacobian_rank == r.jac_rank
