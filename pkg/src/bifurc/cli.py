"""Command-line interface.

Subcommands cover the full pipeline: ``diagram`` builds count rasters
and images, ``envelope`` samples envelope curves to CSV and overlays
them onto an existing counts file, ``intersect`` sweeps curve pairs for
intersections, and ``verify`` certifies a record CSV.

Options may also come from a flat ``key=value`` config file (``#``
comments allowed); explicit flags override file values.  Exit codes:
0 success, 1 certification failure (verify), 2 bad usage or config,
3 I/O error.
"""

from __future__ import annotations

import argparse
import sys
import time
from math import pi

import numpy as np

from . import __version__
from .diagram import (CRITICAL_PAIR, DiagramSpec, Raster, build_diagram)
from .envelopes import envelope_polyline, envelope_value
from .families import get_family
from .intersect import (CERT_TOL, REFINE_TOL, find_intersections,
                        verify_periodicity)
from .render import (ToneMap, read_counts, read_records_csv, record_from_row,
                     write_counts, write_counts_csv, write_curve_csv,
                     write_image, write_records_csv)


class ConfigError(ValueError):
    pass


def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


def parse_orders(text: str) -> list[int]:
    """Order lists: ``"3"``, ``"0,2,5"`` and ranges ``"1..4"`` (inclusive)."""
    out: list[int] = []
    for token in text.split(","):
        token = token.strip()
        if ".." in token:
            a, b = token.split("..")
            lo, hi = int(a), int(b)
            if hi < lo:
                raise ConfigError(f"empty order range {token!r}")
            out.extend(range(lo, hi + 1))
        elif token:
            out.append(int(token))
    if not out or any(v < 0 for v in out):
        raise ConfigError(f"bad orders {text!r}")
    return sorted(set(out))


def load_config(path: str) -> dict[str, str]:
    """Flat key=value file with '#' comments."""
    out: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value")
            key, value = line.split("=", 1)
            out[key.strip()] = value.strip()
    return out


# Option registry: dest -> (parser fn, default).  Shared across
# subcommands; each subcommand declares the subset it uses.
_OPTIONS = {
    "map": (str, "sine"),
    "rmin": (float, None),
    "rmax": (float, None),
    "xmin": (float, None),
    "xmax": (float, None),
    "cols": (int, 2000),
    "rows": (int, 1200),
    "transient": (int, 1000),
    "keep": (int, 500),
    "orders": (str, None),
    "branch": (str, "both"),
    "tol": (float, None),
    "threads": (int, 1),
    "out": (str, None),
    "seed": (int, None),
    "inits": (str, None),
    "grid": (int, None),
    "points": (int, 1001),
    "counts": (str, None),
    "csv": (str, None),
    "overlay": (str, None),
    "image": (str, None),
    "records": (str, None),
    "check_tol": (float, 1e-6),
    "tone": (str, "log1p"),
    "gamma": (float, 1.0),
    "invert": (_parse_bool, False),
}


def _merge_config(args: argparse.Namespace) -> argparse.Namespace:
    """Fill unset options from the config file, then from defaults."""
    cfg = load_config(args.config) if args.config else {}
    known = set(_OPTIONS)
    for key in cfg:
        if key.replace("-", "_") not in known:
            raise ConfigError(f"unknown config key {key!r}")
    for dest, (convert, default) in _OPTIONS.items():
        if not hasattr(args, dest):
            continue
        if getattr(args, dest) is not None:
            continue
        raw = cfg.get(dest, cfg.get(dest.replace("_", "-")))
        setattr(args, dest, convert(raw) if raw is not None else default)
    return args


def _add(parser: argparse.ArgumentParser, *names: str, **kw):
    for name in names:
        dest = name.lstrip("-").replace("-", "_")
        spec = _OPTIONS[dest]
        if spec[0] is _parse_bool:
            parser.add_argument(name, action="store_const", const=True,
                                default=None, **kw)
        else:
            parser.add_argument(name, type=spec[0], default=None, **kw)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bifurc",
        description="Bifurcation diagrams, envelope curves and "
                    "periodic-point certification for 1-D maps.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=str, default=None,
                        help="key=value config file; flags override it")
    _add(common, "--map", help="sine | logistic | rational-odd")
    _add(common, "--threads", help="worker threads (default 1)")

    p = sub.add_parser("diagram", parents=[common],
                       help="build a density raster and write image/counts")
    _add(p, "--rmin"); _add(p, "--rmax"); _add(p, "--xmin"); _add(p, "--xmax")
    _add(p, "--cols"); _add(p, "--rows")
    _add(p, "--transient"); _add(p, "--keep")
    _add(p, "--inits",
         help='"pair" (critical-value pair), comma list of y0, or "random:N"')
    _add(p, "--seed", help="seed for random inits; recorded in CSV headers")
    _add(p, "--out", help="output PPM image path")
    _add(p, "--counts", help="output binary counts path")
    _add(p, "--csv", help="output counts CSV path")
    _add(p, "--tone", help="linear | log1p"); _add(p, "--gamma")
    _add(p, "--invert", help="map zero counts to black instead of white")
    p.set_defaults(func=cmd_diagram)

    p = sub.add_parser("envelope", parents=[common],
                       help="sample envelope curves; CSV and/or overlay image")
    _add(p, "--rmin"); _add(p, "--rmax"); _add(p, "--points")
    _add(p, "--orders", help='orders, e.g. "1..4" (default)')
    _add(p, "--branch", help="plus | minus | both")
    _add(p, "--out", help="CSV path; per-curve files derive from it")
    _add(p, "--overlay", help="existing counts file to draw over")
    _add(p, "--image", help="output PPM for the overlay")
    _add(p, "--tone"); _add(p, "--gamma"); _add(p, "--invert")
    p.set_defaults(func=cmd_envelope)

    p = sub.add_parser("intersect", parents=[common],
                       help="locate envelope intersections, write record CSV")
    _add(p, "--rmin"); _add(p, "--rmax")
    _add(p, "--orders", help='orders to pair up, e.g. "0..5" (default)')
    _add(p, "--branch", help="plus | minus | both (both adds mixed pairs)")
    _add(p, "--grid", help="scan points (default 4096 per unit r)")
    _add(p, "--tol", help="refinement tolerance in r (default 1e-12)")
    _add(p, "--out", help="output records CSV")
    p.set_defaults(func=cmd_intersect)

    p = sub.add_parser("verify", parents=[common],
                       help="certify a record CSV; exit 1 on failure")
    _add(p, "--records", help="input records CSV")
    _add(p, "--out", help="output CSV with certification columns filled")
    _add(p, "--tol", help="certification tolerance (default 1e-8)")
    _add(p, "--check-tol",
         help="ordinate consistency tolerance (default 1e-6)")
    p.set_defaults(func=cmd_verify)
    return parser


def _resolve_window(args, family):
    rmin, rmax = args.rmin, args.rmax
    if rmin is None or rmax is None:
        if family.bounded_factor:
            rmin = -2 * pi if rmin is None else rmin
            rmax = 2 * pi if rmax is None else rmax
        else:
            lo, hi = (2.5, 4.0) if family.name == "logistic" else family.domain_hint
            rmin = lo if rmin is None else rmin
            rmax = hi if rmax is None else rmax
    if not rmin < rmax:
        raise ConfigError(f"need rmin < rmax, got {rmin} >= {rmax}")
    return rmin, rmax


def _resolve_inits(args, family, xmin, xmax):
    """Returns (init_policy, seed_used)."""
    text = args.inits
    if text is None:
        if family.bounded_factor:
            return CRITICAL_PAIR, None
        lo, hi = family.domain_hint
        return (0.5 * (lo + hi),), None
    text = text.strip()
    if text in ("pair", CRITICAL_PAIR):
        return CRITICAL_PAIR, None
    if text.startswith("random:"):
        count = int(text.split(":", 1)[1])
        if count < 1:
            raise ConfigError("random inits need a positive count")
        seed = args.seed if args.seed is not None else 0
        rng = np.random.default_rng(seed)
        return tuple(rng.uniform(xmin, xmax, count)), seed
    return tuple(float(v) for v in text.split(",")), None


def _branch_list(text: str) -> list[int]:
    if text == "plus":
        return [1]
    if text == "minus":
        return [-1]
    if text == "both":
        return [1, -1]
    raise ConfigError(f"branch must be plus, minus or both, got {text!r}")


def cmd_diagram(args) -> int:
    family = get_family(args.map)
    rmin, rmax = _resolve_window(args, family)
    xmin, xmax = args.xmin, args.xmax
    if xmin is None or xmax is None:
        if family.bounded_factor:
            w = max(abs(rmin), abs(rmax))
            xmin = -w if xmin is None else xmin
            xmax = w if xmax is None else xmax
        else:
            lo, hi = family.domain_hint
            xmin = lo if xmin is None else xmin
            xmax = hi if xmax is None else xmax
    inits, seed = _resolve_inits(args, family, xmin, xmax)
    symmetric = (xmin == -xmax) and args.rows % 2 == 0
    if args.out is None and args.counts is None and args.csv is None:
        raise ConfigError("diagram needs --out, --counts or --csv")
    spec = DiagramSpec(family, rmin, rmax, args.cols, xmin, xmax, args.rows,
                       transient=args.transient, keep=args.keep,
                       init_policy=inits, symmetric_bins=symmetric)
    t0 = time.perf_counter()
    raster = build_diagram(spec, threads=args.threads)
    dt = time.perf_counter() - t0
    print(f"built {spec.rows}x{spec.columns} raster for {family.name} "
          f"in {dt:.2f}s ({len(raster.escaped_columns)} escaped columns)")
    header = [] if seed is None else [f"seed={seed}"]
    if args.counts:
        write_counts(raster, args.counts)
        print(f"wrote {args.counts}")
    if args.csv:
        write_counts_csv(raster, args.csv, header_lines=header)
        print(f"wrote {args.csv}")
    if args.out:
        tone = ToneMap(mode=args.tone, gamma=args.gamma, invert=args.invert)
        write_image(raster, tone, (), args.out)
        print(f"wrote {args.out}")
    return 0


def _curve_csv_path(base: str, n: int, branch: int) -> str:
    stem, dot, ext = base.rpartition(".")
    suffix = f"_n{n}_{'plus' if branch > 0 else 'minus'}"
    if not dot:
        return base + suffix + ".csv"
    return f"{stem}{suffix}.{ext}"


def _raster_from_counts(path: str, family) -> Raster:
    counts, meta = read_counts(path)
    policy = CRITICAL_PAIR if family.bounded_factor else (
        0.5 * (family.domain_hint[0] + family.domain_hint[1]),)
    spec = DiagramSpec(family, meta["r_min"], meta["r_max"], counts.shape[1],
                       meta["x_min"], meta["x_max"], counts.shape[0],
                       transient=meta["transient"], keep=meta["keep"],
                       init_policy=policy,
                       symmetric_bins=meta["symmetric_bins"])
    return Raster(spec, counts)


def cmd_envelope(args) -> int:
    family = get_family(args.map)
    orders = parse_orders(args.orders or "1..4")
    branches = _branch_list(args.branch)
    if args.out is None and args.image is None:
        raise ConfigError("envelope needs --out (CSV) and/or "
                          "--overlay/--image (PPM)")
    if args.image is not None and args.overlay is None:
        raise ConfigError("--image needs --overlay <countsfile>")

    if args.overlay is not None:
        raster = _raster_from_counts(args.overlay, family)
        rmin, rmax = raster.spec.r_min, raster.spec.r_max
    else:
        rmin, rmax = _resolve_window(args, family)

    curves = [envelope_polyline(family, n, b, rmin, rmax, args.points)
              for n in orders for b in branches]
    if args.out:
        for curve in curves:
            path = _curve_csv_path(args.out, curve.n, curve.branch)
            write_curve_csv(curve, path)
            print(f"wrote {path}")
    if args.image:
        tone = ToneMap(mode=args.tone, gamma=args.gamma, invert=args.invert)
        write_image(raster, tone, curves, args.image)
        print(f"wrote {args.image}")
    return 0


def cmd_intersect(args) -> int:
    family = get_family(args.map)
    if args.rmin is None or args.rmax is None:
        raise ConfigError("intersect needs explicit --rmin and --rmax")
    if args.out is None:
        raise ConfigError("intersect needs --out for the records CSV")
    rmin, rmax = _resolve_window(args, family)
    orders = parse_orders(args.orders or "0..5")
    if len(orders) < 2:
        raise ConfigError("intersect needs at least two orders")
    if args.branch == "both":
        combos = [(1, 1), (-1, -1), (1, -1), (-1, 1)]
    elif args.branch == "plus":
        combos = [(1, 1)]
    elif args.branch == "minus":
        combos = [(-1, -1)]
    else:
        raise ConfigError(f"branch must be plus, minus or both, "
                          f"got {args.branch!r}")
    tol = args.tol if args.tol is not None else REFINE_TOL

    tasks = [(n, m, bpair) for i, n in enumerate(orders)
             for m in orders[i + 1:] for bpair in combos]

    def run(task):
        n, m, bpair = task
        return find_intersections(family, n, m, bpair, rmin, rmax,
                                  grid=args.grid, tol=tol)

    if args.threads > 1 and len(tasks) > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=args.threads) as pool:
            per_task = list(pool.map(run, tasks))
    else:
        per_task = [run(t) for t in tasks]

    records = [rec for recs in per_task for rec in recs]
    records.sort(key=lambda rec: (rec.r_star, rec.n, rec.m, rec.branches))
    write_records_csv(records, args.out)
    print(f"wrote {args.out}: {len(records)} records from "
          f"{len(tasks)} sweeps")
    return 0


def cmd_verify(args) -> int:
    family = get_family(args.map)
    if args.records is None:
        raise ConfigError("verify needs --records <csv>")
    tol = args.tol if args.tol is not None else CERT_TOL
    rows = read_records_csv(args.records)
    reports = []
    bad_consistency = 0
    bad_residual = 0
    for row in rows:
        rec = record_from_row(row)
        e_n = envelope_value(family, rec.n, rec.branches[0], rec.r_star)
        if abs(e_n - rec.b) > args.check_tol:
            bad_consistency += 1
            print(f"INCONSISTENT record n={rec.n} m={rec.m} "
                  f"r*={rec.r_star!r}: ordinate {rec.b!r} is "
                  f"{abs(e_n - rec.b):.3e} from the envelope value")
        report = verify_periodicity(family, rec, tol=tol)
        if report.newton_converged and report.period_residual >= tol:
            bad_residual += 1
        reports.append(report)
    converged = sum(1 for rep in reports if rep.newton_converged)
    print(f"verified {len(reports)} records: {converged} converged, "
          f"{bad_consistency} inconsistent, {bad_residual} over tolerance")
    if args.out:
        write_records_csv(reports, args.out)
        print(f"wrote {args.out}")
    return 1 if (bad_consistency or bad_residual) else 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args = _merge_config(args)
        return args.func(args)
    except (ConfigError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
