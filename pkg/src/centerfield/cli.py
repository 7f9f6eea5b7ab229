"""Command-line interface.

Exit codes: 0 success, 1 runtime error, 2 usage error.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from fractions import Fraction
from pathlib import Path


from . import __version__
from .arith import DEFAULT_P, matrix_rank
from .errors import CenterfieldError
from .estimator import (
    round2,
    RankHistogram,
    ScanConfig,
    estimate_components,
    fundamental_orbit_count,
    orbit_miss_probability,
    scan,
)
from .families import (
    BUILTIN_FAMILIES,
    FamilyDef,
    codim_in_W,
    draw_rng,
    family_scan,
    rank_dphi,
)
from .forms import GeneralForm, PoincareForm
from .frommer import focal_jacobian, focal_values
from .store import ExperimentManifest, RecordSink, merge


def _default_seed() -> int:
    return int(os.environ.get("CENTERFIELD_SEED", "0"))


def parse_form(text: str, p: int) -> PoincareForm:
    """14 integers in Poincare order, or 20 whose linear part is x dx + y dy."""
    try:
        vals = [int(t) for t in text.replace(" ", "").split(",") if t]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a list of integers: {text!r}") from exc
    if len(vals) == 14:
        return PoincareForm.from_list(vals, p)
    if len(vals) == 20:
        g = GeneralForm.from_list(vals, p)
        if not g.is_poincare():
            raise CenterfieldError("20-coefficient form must have linear part x dx + y dy")
        return g.to_poincare()
    raise argparse.ArgumentTypeError(f"expected 14 or 20 coefficients, got {len(vals)}")


def _load_family(spec: str) -> FamilyDef:
    if spec in BUILTIN_FAMILIES:
        return BUILTIN_FAMILIES[spec]()
    return FamilyDef.load(spec)


def _load_histogram(path: str) -> tuple[RankHistogram, int]:
    """A scan manifest, or a counts file ``{"total": N, "p": 29, "counts": {c: n}}``.

    A ``.jsonl`` record file is resolved to the manifest written beside it.
    """
    path = Path(path)
    if path.suffix == ".jsonl":
        path = Path(str(path) + ".manifest.json")
    d = json.loads(path.read_text())
    if "counts" in d:
        counts = {int(c): int(n) for c, n in d["counts"].items()}
        return RankHistogram(counts, int(d["total"])), int(d.get("p", DEFAULT_P))
    mf = ExperimentManifest.from_dict(d)
    return RankHistogram(mf.histogram, mf.total), mf.p


def _fmt(x) -> str:
    return str(round2(Fraction(x)))


def estimate_table(h: RankHistogram, p: int) -> list[tuple]:
    rows = estimate_components(h, p)
    return [(r.codim, r.count, r.estimate_2dp, r.error_2dp) for r in rows]


def _print_rows(header, rows, latex=False, out=None):
    out = out or sys.stdout
    if latex:
        for row in rows:
            print(" & ".join(str(x) for x in row) + r" \\", file=out)
        return
    print("\t".join(header), file=out)
    for row in rows:
        print("\t".join(str(x) for x in row), file=out)


def cmd_focal(args):
    w = parse_form(args.form, args.p)
    out = focal_values(w, args.m, early_abort=not args.full, p=args.p)
    for v in out.values:
        print(v)
    print(f"status\t{out.status}")


def cmd_jacobian(args):
    w = parse_form(args.form, args.p)
    out = focal_values(w, args.m, early_abort=False, p=args.p)
    jac = focal_jacobian(w, args.m, args.p)
    for row in jac:
        print(" ".join(str(int(v)) for v in row))
    print(f"rank\t{matrix_rank(jac, args.p)}")
    print(f"status\t{out.status}")


def cmd_scan(args):
    out = Path(args.out)
    if out.exists():
        raise CenterfieldError(f"{out} exists; records are append-only, pick a new path")
    cfg = ScanConfig(p=args.p, m=args.m, count=args.count, seed=args.seed,
                     jobs=args.jobs, min_vanish=args.min_vanish, start=args.start)
    res = scan(cfg)
    out.touch()
    with RecordSink(out, cfg.m) as sink:
        for r in res.records:
            sink.write(r)
    res.manifest.save(str(out) + ".manifest.json")
    _print_rows(("codim", "count"), sorted(res.manifest.histogram.items()))


def cmd_estimate(args):
    h, p = _load_histogram(args.input)
    _print_rows(("codim", "count", "estimate", "error"), estimate_table(h, p), args.latex)


def surplus_table(h: RankHistogram, p: int, known: dict) -> list[tuple]:
    """Rows (codim, estimate, error, known, surplus); surplus = estimate - known."""
    est = {r.codim: r for r in estimate_components(h, p)}
    rows = []
    for c in sorted(set(est) | set(known)):
        k = known.get(c, 0)
        if c in est:
            r = est[c]
            rows.append((c, r.estimate_2dp, r.error_2dp, k, round2(r.estimate - k)))
        else:
            rows.append((c, round2(0), round2(0), k, round2(Fraction(-k))))
    return rows


def cmd_report(args):
    h, p = _load_histogram(args.input)
    known = {int(c): int(n) for c, n in json.loads(Path(args.compare).read_text()).items()}
    _print_rows(("codim", "estimate", "error", "known", "surplus"),
                surplus_table(h, p, known), args.latex)


def cmd_merge(args):
    mf = merge(ExperimentManifest.load(p) for p in args.inputs)
    mf.save(args.out)
    print(f"merged {len(args.inputs)} manifests, total {mf.total}")


def cmd_orbit(args):
    miss = orbit_miss_probability(args.count, args.p, args.group_order)
    print(f"miss ≈ {miss:.2f}")
    print(f"miss_exact\t{miss:.6g}")
    print(f"orbits\t{fundamental_orbit_count(args.p, args.group_order):.3g}")


def cmd_family_scan(args):
    f = _load_family(args.family)
    rep = family_scan(f, args.draws, args.seed, args.p, args.m, args.jobs)
    if args.out:
        out = Path(args.out)
        if out.exists():
            raise CenterfieldError(f"{out} exists; records are append-only, pick a new path")
        out.touch()
        with RecordSink(out, args.m) as sink:
            for r in rep.hits:
                sink.write(r)
        rep.to_manifest().save(str(out) + ".manifest.json")
    print(f"# family {rep.family}: dim(W cap Im psi) = {rep.dim}, draws = {rep.draws}")
    raw = rep.scaled_unweighted
    rows = [(c, n, _fmt(rep.scaled[c]), _fmt(raw[c]))
            for c, n in sorted(rep.histogram.items())]
    _print_rows(("codim", "count", "scaled", "scaled_unweighted"), rows)
    for k, v in rep.skips.items():
        print(f"# skipped {k}\t{v}")


def cmd_family_rank(args):
    f = _load_family(args.family)
    a = draw_rng(args.seed, 0).integers(0, args.p, f.n)
    print(f"n\t{f.n}")
    print(f"rank\t{rank_dphi(f, a, args.p)}")


def cmd_family_codim(args):
    info = codim_in_W(args.n, args.d1, args.d2)
    print(f"dim\t{info.dim}")
    print(f"codim\t{info.codim}")
    print(f"dim_im_psi\t{info.dim_im_psi}")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="centerfield", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(sp, m=True):
        sp.add_argument("--p", type=int, default=DEFAULT_P)
        if m:
            sp.add_argument("--m", type=int, default=13)

    sp = sub.add_parser("focal", help="print s_1..s_m of a Poincare form")
    sp.add_argument("--form", required=True)
    sp.add_argument("--full", action="store_true", help="do not stop at the first nonzero value")
    common(sp)
    sp.set_defaults(func=cmd_focal)

    sp = sub.add_parser("jacobian", help="print ds_j/dc_i and its rank")
    sp.add_argument("--form", required=True)
    common(sp)
    sp.set_defaults(func=cmd_jacobian)

    sp = sub.add_parser("scan", help="random scan of W(F_p)")
    common(sp)
    sp.add_argument("--count", type=int, required=True)
    sp.add_argument("--seed", type=int, default=_default_seed())
    sp.add_argument("--jobs", type=int, default=1)
    sp.add_argument("--start", type=int, default=0)
    sp.add_argument("--min-vanish", type=int, default=None)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_scan)

    sp = sub.add_parser("estimate", help="component estimates from a scan manifest")
    sp.add_argument("--in", dest="input", required=True)
    sp.add_argument("--latex", action="store_true")
    sp.set_defaults(func=cmd_estimate)

    sp = sub.add_parser("report", help="compare estimates with known component counts")
    sp.add_argument("--in", dest="input", required=True)
    sp.add_argument("--compare", required=True)
    sp.add_argument("--latex", action="store_true")
    sp.set_defaults(func=cmd_report)

    sp = sub.add_parser("merge", help="merge shard manifests")
    sp.add_argument("--out", required=True)
    sp.add_argument("inputs", nargs="+")
    sp.set_defaults(func=cmd_merge)

    sp = sub.add_parser("orbit-coverage", help="chance of missing an orbit")
    sp.add_argument("--p", type=int, default=DEFAULT_P)
    sp.add_argument("--group-order", type=int, required=True)
    sp.add_argument("--count", type=int, required=True)
    sp.set_defaults(func=cmd_orbit)

    fam = sub.add_parser("family", help="parametrized families")
    fsub = fam.add_subparsers(dest="family_command", required=True)
    sp = fsub.add_parser("scan")
    sp.add_argument("--family", required=True, help="builtin name or JSON file")
    sp.add_argument("--draws", type=int, default=2000)
    sp.add_argument("--seed", type=int, default=_default_seed())
    sp.add_argument("--jobs", type=int, default=1)
    sp.add_argument("--out")
    common(sp)
    sp.set_defaults(func=cmd_family_scan)
    sp = fsub.add_parser("rank")
    sp.add_argument("--family", required=True)
    sp.add_argument("--seed", type=int, default=_default_seed())
    sp.add_argument("--p", type=int, default=DEFAULT_P)
    sp.set_defaults(func=cmd_family_rank)
    sp = fsub.add_parser("codim")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--d1", type=int, default=0)
    sp.add_argument("--d2", type=int, default=0)
    sp.set_defaults(func=cmd_family_codim)
    return ap


def run_cli(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        args.func(args)
    except argparse.ArgumentTypeError as exc:
        print(f"centerfield: error: {exc}", file=sys.stderr)
        return 2
    except (CenterfieldError, OSError, ValueError) as exc:
        print(f"centerfield: error: {exc}", file=sys.stderr)
        return 1
    return 0


def main():
    sys.exit(run_cli())
