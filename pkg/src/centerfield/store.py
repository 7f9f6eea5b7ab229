"""Append-only JSONL hit records and mergeable experiment manifests."""
from __future__ import annotations

import json
from collections import Counter
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path

from . import __version__
from .errors import IncompatibleManifests, InvalidRecord


@dataclass(frozen=True)
class ScanRecord:
    p: int
    coeffs: tuple
    vanish_upto: int
    jac_rank: int | None
    seed: int
    index: int
    version: str = __version__

    def to_json(self) -> str:
        d = asdict(self)
        d["coeffs"] = list(self.coeffs)
        if self.jac_rank is None:
            del d["jac_rank"]
        return json.dumps(d, sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, line: str) -> "ScanRecord":
        d = json.loads(line)
        return cls(p=d["p"], coeffs=tuple(d["coeffs"]), vanish_upto=d["vanish_upto"],
                   jac_rank=d.get("jac_rank"), seed=d["seed"], index=d["index"],
                   version=d["version"])


def validate_record(r: ScanRecord, m: int) -> None:
    if len(r.coeffs) != 14 or any(not 0 <= c < r.p for c in r.coeffs):
        raise InvalidRecord("coefficients must be 14 integers in [0, p)")
    if not 0 <= r.vanish_upto <= m:
        raise InvalidRecord(f"vanish_upto={r.vanish_upto} outside [0, {m}]")
    if (r.jac_rank is not None) != (r.vanish_upto == m):
        raise InvalidRecord("jac_rank must be present exactly when all m values vanish")


class RecordSink:
    """One writer per shard file; each record is one canonical JSON line."""

    def __init__(self, path, m: int):
        self.path = Path(path)
        self.m = m
        self._fh = None

    def __enter__(self):
        self._fh = open(self.path, "a", encoding="utf-8")
        return self

    def __exit__(self, *exc):
        self.close()

    def close(self):
        if self._fh is not None:
            self._fh.close()
            self._fh = None

    def write(self, r: ScanRecord) -> None:
        validate_record(r, self.m)
        if self._fh is None:
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(r.to_json() + "\n")
        else:
            self._fh.write(r.to_json() + "\n")


def append_record(sink: RecordSink, r: ScanRecord) -> None:
    sink.write(r)


def read_records(path) -> list[ScanRecord]:
    with open(path, encoding="utf-8") as fh:
        return [ScanRecord.from_json(line) for line in fh if line.strip()]


def _int_keys(d) -> dict[int, int]:
    return {int(k): int(v) for k, v in d.items() if int(v)}


def _coalesce(ranges):
    out = []
    for lo, hi in sorted(ranges):
        if out and lo < out[-1][1]:
            raise IncompatibleManifests(f"index ranges overlap at {lo}")
        if out and lo == out[-1][1]:
            out[-1][1] = hi
        elif hi > lo:
            out.append([lo, hi])
    return out


@dataclass
class ExperimentManifest:
    """Summary of one (possibly merged) experiment.

    ``histogram`` maps tangent codimension to hit count, ``orders`` maps the
    number of leading vanishing focal values to the number of points.
    Family scans add named ``skips`` counters and ``weighted`` hit counts
    (exact fractions stored as strings).  ``wall_time`` is ignored by
    equality.
    """

    kind: str
    p: int
    m: int
    seed: int
    version: str = __version__
    config: dict = field(default_factory=dict)
    ranges: list = field(default_factory=list)
    total: int = 0
    histogram: dict = field(default_factory=dict)
    orders: dict = field(default_factory=dict)
    skips: dict = field(default_factory=dict)
    weighted: dict = field(default_factory=dict)
    wall_time: float = field(default=0.0, compare=False)

    def key(self):
        return (self.kind, self.p, self.m, self.seed, self.version,
                json.dumps(self.config, sort_keys=True))

    def empty_like(self) -> "ExperimentManifest":
        return ExperimentManifest(self.kind, self.p, self.m, self.seed,
                                  self.version, dict(self.config))

    def to_dict(self) -> dict:
        d = asdict(self)
        for k in ("histogram", "orders"):
            d[k] = {str(c): n for c, n in sorted(d[k].items())}
        d["skips"] = dict(sorted(d["skips"].items()))
        d["weighted"] = {str(c): str(w) for c, w in sorted(d["weighted"].items())}
        return d

    @classmethod
    def from_dict(cls, d) -> "ExperimentManifest":
        d = dict(d)
        d["histogram"] = _int_keys(d.get("histogram", {}))
        d["orders"] = _int_keys(d.get("orders", {}))
        d["skips"] = {k: int(v) for k, v in d.get("skips", {}).items()}
        d["weighted"] = {int(k): str(Fraction(v)) for k, v in d.get("weighted", {}).items()}
        d["ranges"] = [list(r) for r in d.get("ranges", [])]
        return cls(**d)

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path) -> "ExperimentManifest":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def check(self) -> None:
        if sum(hi - lo for lo, hi in self.ranges) != self.total:
            raise IncompatibleManifests("ranges do not cover the stated total")
        if self.kind == "scan" and sum(self.histogram.values()) != self.orders.get(self.m, 0):
            raise IncompatibleManifests("histogram total differs from the number of full hits")


def merge(manifests) -> ExperimentManifest:
    manifests = list(manifests)
    if not manifests:
        raise IncompatibleManifests("nothing to merge")
    first = manifests[0]
    for other in manifests[1:]:
        if other.key() != first.key():
            raise IncompatibleManifests(
                f"cannot merge {other.key()[:5]} into {first.key()[:5]}")
    hist, orders, skips, weighted = Counter(), Counter(), Counter(), Counter()
    ranges = []
    for mf in manifests:
        hist.update(mf.histogram)
        orders.update(mf.orders)
        skips.update(mf.skips)
        weighted.update({c: Fraction(w) for c, w in mf.weighted.items()})
        ranges.extend(mf.ranges)
    out = first.empty_like()
    out.ranges = _coalesce(ranges)
    out.total = sum(mf.total for mf in manifests)
    out.histogram = dict(sorted(hist.items()))
    out.orders = dict(sorted(orders.items()))
    out.skips = dict(sorted(skips.items()))
    out.weighted = {c: str(w) for c, w in sorted(weighted.items())}
    out.wall_time = sum(mf.wall_time for mf in manifests)
    return out
