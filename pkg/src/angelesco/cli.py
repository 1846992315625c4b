"""Command-line front end: constants, recurrence tables, verification suites.

All numeric output renders decimals as strings at fixed digits so identical
configurations produce byte-identical files. Recurrence tables are cached
under ANGELESCO_CACHE_DIR (unset disables caching), keyed by geometry,
weights, precision, and table size; cache hits are spot-checked against a
fresh solve at one index.
"""

import argparse
import hashlib
import json
import os
import sys
import tempfile

import mpmath as mp

from . import __version__
from .curve import critical_thresholds, curve, curve_to_json, equilibrium
from .errors import AngelescoError
from .mops import AngelescoSystem, Geometry, NnrrTable, WeightSpec
from .precision import PrecisionContext
from .szego import ratio_report, ratio_report_csv
from .tree import SyntheticSource, assemble_J, assemble_L, build_tree, m_closed, m_recursion, spectrum_probe

DIGITS = 30


def _parse_geometry(text, ctx):
    parts = text.split(",")
    if len(parts) != 4:
        raise ValueError("geometry needs four comma-separated endpoints")
    with ctx.workprec():
        return Geometry(*[mp.mpf(p) for p in parts])


def _parse_weight(text, interval):
    if text == "const":
        return WeightSpec("const", interval=interval)
    if text.startswith("poly:"):
        return WeightSpec("poly", coeffs=tuple(text[5:].split(",")), interval=interval)
    if text.startswith("exppoly:"):
        return WeightSpec("exppoly", coeffs=tuple(text[8:].split(",")), interval=interval)
    raise ValueError("weight must be const, poly:c0,c1,... or exppoly:c0,...")


def _write_out(path, text):
    if path is None:
        sys.stdout.write(text)
        return
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _cache_dir():
    return os.environ.get("ANGELESCO_CACHE_DIR") or None


def _table_cache_key(geometry, weights, bits, n_max):
    blob = json.dumps({
        "geometry": [mp.nstr(v, 40) for v in geometry.as_tuple()],
        "weights": [(w.kind, list(w.coeffs), w.interval) for w in weights],
        "bits": bits,
        "n_max": n_max,
    }, sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()[:24]


def _nnrr_table_cached(system, n_max):
    cache = _cache_dir()
    key = _table_cache_key(system.geometry, system.weights, system.ctx.mantissa_bits, n_max)
    path = os.path.join(cache, f"nnrr_{key}.csv") if cache else None
    if path and os.path.exists(path):
        with open(path) as f:
            table = NnrrTable.from_csv(f.read())
        # spot-check one index against a fresh solve
        with system.ctx.workprec():
            fresh = system.nnrr((1, 1))
            cached = table.get((1, 1))
            ok = all(abs(a - b) <= mp.mpf(10) ** (-(DIGITS - 5)) * (1 + abs(a))
                     for a, b in zip(fresh, cached))
        if ok:
            return table, True
    table = system.table(n_max)
    if path:
        _write_out(path, table.to_csv(digits=DIGITS + 10))
    return table, False


def cmd_constants(args, ctx):
    geometry = _parse_geometry(args.geom, ctx)
    th = critical_thresholds(geometry, ctx)
    cd = curve(geometry, args.c, ctx)
    _write_out(args.out, curve_to_json(cd, th, digits=DIGITS) + "\n")
    return 0


def cmd_nnrr(args, ctx):
    geometry = _parse_geometry(args.geom, ctx)
    weights = (_parse_weight(args.weight1, 1), _parse_weight(args.weight2, 2))
    if args.nmax < 2:
        raise ValueError("nmax must be >= 2")
    system = AngelescoSystem(geometry, weights, ctx)
    table, from_cache = _nnrr_table_cached(system, args.nmax)
    out = args.out or "nnrr.csv"
    _write_out(out, table.to_csv(digits=DIGITS))

    # per-index errors against the ray-limit constants at c = n1/|n|
    errors = ["n1,n2,err_a1,err_a2,err_b1,err_b2"]
    const_cache = {}
    with ctx.workprec():
        for (n1, n2) in sorted(table.entries):
            if n1 + n2 == 0:
                continue
            from fractions import Fraction

            cfrac = Fraction(n1, n1 + n2)
            if cfrac not in const_cache:
                cd = curve(geometry, mp.mpf(cfrac.numerator) / cfrac.denominator,
                           ctx, with_dc=False)
                const_cache[cfrac] = (cd.A1, cd.A2, cd.B1, cd.B2)
            A1, A2, B1, B2 = const_cache[cfrac]
            a1, a2, b1, b2 = table.get((n1, n2))
            errs = [abs(a1 - A1), abs(a2 - A2), abs(b1 - B1), abs(b2 - B2)]
            errors.append(f"{n1},{n2}," + ",".join(mp.nstr(e, 12) for e in errs))
    _write_out(out + ".errors.csv", "\n".join(errors) + "\n")
    report = {"cache_hit": from_cache, "n_max": args.nmax, "table": out}
    _write_out(out + ".report.json", json.dumps(report, sort_keys=True, indent=2) + "\n")
    return 0


def _suite_limits(args, ctx, geometry, weights):
    system = AngelescoSystem(geometry, weights, ctx)
    cd = curve(geometry, "0.5", ctx, with_dc=False)
    ks = sorted({max(2, args.nmax // 3), max(3, args.nmax // 2), args.nmax})
    streams = {k: [] for k in ("a1", "a2", "b1", "b2")}
    with ctx.workprec():
        for k in ks:
            a1, a2, b1, b2 = system.nnrr((k, k))
            streams["a1"].append(abs(a1 - cd.A1))
            streams["a2"].append(abs(a2 - cd.A2))
            streams["b1"].append(abs(b1 - cd.B1))
            streams["b2"].append(abs(b2 - cd.B2))
    ok = all(v[-1] < v[0] for v in streams.values())
    return ok, {
        "ks": ks,
        "errors": {k: [mp.nstr(e, 10) for e in v] for k, v in streams.items()},
        "all_streams_decreasing": ok,
    }


def _suite_marginal(args, ctx, geometry, weights):
    system = AngelescoSystem(geometry, weights, ctx)
    kmax = args.nmax if args.nmax >= 4 else 16
    ks = [max(2, kmax // 4), kmax]
    rows = ratio_report(system, [(1, k) for k in ks], 4)
    errs = [r["abs_err"] for r in rows]
    ok = errs[-1] < errs[0]
    return ok, {
        "ks": ks,
        "abs_err": [mp.nstr(e, 10) for e in errs],
        "improves": ok,
        "csv": ratio_report_csv(rows),
    }


def _suite_spectrum(args, ctx, geometry, weights):
    cd = curve(geometry, "0.5", ctx, with_dc=False)
    tree = build_tree(args.depth)
    targets = [tuple(map(float, geometry.interval(1))), tuple(map(float, geometry.interval(2)))]
    repL = spectrum_probe(assemble_L(tree, 0.5, 1, cd), targets, 0.1)
    src = SyntheticSource(geometry, bits=min(ctx.mantissa_bits, 192))
    repJ = spectrum_probe(assemble_J(tree, src), targets, 0.1)
    ok = repL["inside_fraction"] >= 0.9 and repJ["inside_fraction"] >= 0.9
    return ok, {
        "depth": args.depth,
        "model_inside_fraction": repL["inside_fraction"],
        "model_max_gap": repL["max_coverage_gap"],
        "jacobi_inside_fraction": repJ["inside_fraction"],
        "jacobi_max_gap": repJ["max_coverage_gap"],
        "threshold": 0.9,
    }


def _suite_mfun(args, ctx, geometry, weights):
    cd = curve(geometry, args.c, ctx, with_dc=False)
    zs = [complex(x, y)
          for x in (-2.5, -1.2, 0.0, 1.2, 2.5) for y in (0.3, 0.6, 1.0, 1.6)]
    worst = 0.0
    for z in zs:
        for l in (1, 2):
            worst = max(worst, abs(m_recursion(cd, l, z).get(l) - m_closed(cd, l, z, ctx)))
    ok = worst <= 1e-10
    return ok, {"c": str(args.c), "grid_points": len(zs), "max_difference": worst,
                "threshold": 1e-10}


def _suite_equilibrium(args, ctx, geometry, weights):
    cd = curve(geometry, args.c, ctx, with_dc=False)
    eq = equilibrium(cd, ctx)
    with ctx.workprec():
        err1 = abs(eq.masses[0] - cd.c)
        err2 = abs(eq.masses[1] - (1 - cd.c))
        ok = err1 < mp.mpf("1e-8") and err2 < mp.mpf("1e-8")
        doc = {
            "c": mp.nstr(cd.c, 15),
            "masses": [mp.nstr(v, 20) for v in eq.masses],
            "mass_errors": [mp.nstr(err1, 5), mp.nstr(err2, 5)],
            "ell1": mp.nstr(eq.ell1, 15),
            "ell2": mp.nstr(eq.ell2, 15),
            "threshold": "1e-8",
        }
    return ok, doc


SUITES = {
    "limits": _suite_limits,
    "marginal": _suite_marginal,
    "spectrum": _suite_spectrum,
    "mfun": _suite_mfun,
    "equilibrium": _suite_equilibrium,
}


def cmd_verify(args, ctx):
    geometry = _parse_geometry(args.geom, ctx)
    weights = (_parse_weight(args.weight1, 1), _parse_weight(args.weight2, 2))
    ok, detail = SUITES[args.suite](args, ctx, geometry, weights)
    verdict = {"suite": args.suite, "pass": bool(ok), "detail": detail}
    _write_out(args.out, json.dumps(verdict, sort_keys=True, indent=2, default=str) + "\n")
    return 0 if ok else 1


def build_parser():
    p = argparse.ArgumentParser(prog="angelesco-lab",
                                description="two-interval Angelesco system laboratory")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(q):
        q.add_argument("--geom", default="-2,-1,1,2",
                       help="a1,b1,a2,b2 interval endpoints")
        q.add_argument("--weight1", default="const",
                       help="const | poly:c0,c1,... | exppoly:c0,...")
        q.add_argument("--weight2", default="const")
        q.add_argument("--bits", type=int, default=512)
        q.add_argument("--out", default=None, help="output path (default: stdout)")

    q = sub.add_parser("constants", help="curve constants at one ray parameter")
    common(q)
    q.add_argument("--c", required=True)

    q = sub.add_parser("nnrr", help="recurrence table with ray-limit errors")
    common(q)
    q.add_argument("--nmax", type=int, required=True)

    q = sub.add_parser("verify", help="run a verification suite")
    q.add_argument("suite", choices=sorted(SUITES))
    common(q)
    q.add_argument("--c", default="0.3")
    q.add_argument("--nmax", type=int, default=12)
    q.add_argument("--depth", type=int, default=8)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    ctx = PrecisionContext(args.bits) if hasattr(args, "bits") else PrecisionContext()
    try:
        if args.command == "constants":
            return cmd_constants(args, ctx)
        if args.command == "nnrr":
            return cmd_nnrr(args, ctx)
        return cmd_verify(args, ctx)
    except (AngelescoError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
