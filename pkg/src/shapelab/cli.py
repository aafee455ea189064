"""Command-line front end: spectra, Riesz means, inequality sweeps, shape studies, SVG output."""
from __future__ import annotations

import argparse
import csv
import io
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .errors import NumericError, OptimizationError, ResourceError, ShapelabError, ValidationError
from .fem import fem_spectrum
from .geometry import BoxDomain, ConvexPolygon, DiskDomain, read_polygon, regular_mgon
from .inequalities import FEM_REL_TOL, REPORT_CSV_HEADER, CorpusEntry, EXACT_LAMBDAS, FEM_LAMBDAS, builtin_corpus, run_suite
from .riesz import RieszQuery, riesz_mean
from .shape_opt import FamilySpec, convergence_study, minimize_sum, optimize, study_csv_header, study_row, sum_minimization_study
from .spectra import SPECTRUM_CSV_HEADER, Spectrum, exact_spectrum

EXIT_OK, EXIT_USAGE, EXIT_VERIFY, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# builtins and config ---------------------------------------------------------


def builtin_domain(name):
    """square, disk, mgon:<m>, rect:<a>, box:<a1,...>; all but box have unit measure."""
    kind, _, arg = name.partition(":")
    try:
        if kind == "square" and not arg:
            return BoxDomain((1.0, 1.0))
        if kind == "disk" and not arg:
            return DiskDomain.with_area(1.0)
        if kind == "mgon":
            return regular_mgon(int(arg), 1.0)
        if kind == "rect":
            a = math.sqrt(float(arg))
            return BoxDomain((a, 1.0 / a))
        if kind == "box":
            return BoxDomain(tuple(float(x) for x in arg.split(",")))
    except ValueError as exc:
        raise ValidationError(f"bad builtin {name!r}: {exc}") from None
    raise ValidationError(f"unknown builtin {name!r}; use square, disk, mgon:<m>, rect:<a> or box:<a1,...>")


def parse_config(text):
    """Flat `key = value` lines; `#` starts a comment; later keys override earlier ones."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            raise ValidationError(f"config line {lineno}: expected 'key = value'")
        out[key.strip()] = value.strip()
    return out


def _floats(text, name):
    try:
        return [float(x) for x in str(text).split(",") if x.strip()]
    except ValueError:
        raise ValidationError(f"{name} must be a comma-separated list of numbers") from None


def _ints(text, name):
    vals = _floats(text, name)
    if any(v != int(v) for v in vals):
        raise ValidationError(f"{name} must be integers")
    return [int(v) for v in vals]


def _default_jobs():
    raw = os.environ.get("SHAPELAB_JOBS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ValidationError(f"SHAPELAB_JOBS must be an integer, got {raw!r}") from None


# output ----------------------------------------------------------------------


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def format_csv(header, rows, command):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(v) for v in row])
    stamp = datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")
    buf.write(f"# shapelab {__version__} {command} {stamp}\n")
    return buf.getvalue()


def _emit(text, path):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


# domain and spectrum sources ---------------------------------------------------


def _domain(args):
    if args.builtin and args.domain:
        raise ValidationError("give either --builtin or --domain, not both")
    if args.builtin:
        return builtin_domain(args.builtin)
    if args.domain:
        return read_polygon(args.domain)
    raise ValidationError("a domain is required: --builtin NAME or --domain FILE")


def _spectrum(domain, lam, rel_tol):
    if isinstance(domain, ConvexPolygon):
        return fem_spectrum(domain, lam, rel_tol)
    return exact_spectrum(domain, lam)


def read_spectrum_csv(path, complete_below):
    ev, eb = [], []
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    if not rows or tuple(rows[0]) != SPECTRUM_CSV_HEADER:
        raise ValidationError(f"{path}: expected header {','.join(SPECTRUM_CSV_HEADER)}")
    for r in rows[1:]:
        ev.append(float(r[1]))
        eb.append(float(r[2]))
    source = "fem" if any(eb) else "exact"
    return Spectrum(np.array(ev), complete_below, np.array(eb), source)


# commands ----------------------------------------------------------------------


def cmd_spectrum(args):
    s = _spectrum(_domain(args), args.lam, args.rel_tol)
    _emit(format_csv(SPECTRUM_CSV_HEADER, s.csv_rows(), "spectrum"), args.output)
    return EXIT_OK


def cmd_riesz(args):
    if args.spectrum:
        if args.builtin or args.domain:
            raise ValidationError("give a spectrum file or a domain, not both")
        s = read_spectrum_csv(args.spectrum, args.complete_below if args.complete_below else args.lam)
    else:
        s = _spectrum(_domain(args), args.lam, args.rel_tol)
    v = riesz_mean(s, RieszQuery(args.lam, args.gamma))
    if v.width:
        print(f"{v.value:.17g} [{v.lower:.17g}, {v.upper:.17g}]")
    else:
        print(f"{v.value:.17g}")
    return EXIT_OK


def _corpus(text):
    if text == "builtin":
        return builtin_corpus()
    entries = []
    for item in text.split(";"):
        item = item.strip()
        if not item:
            continue
        if Path(item).is_file():
            dom = read_polygon(item)
            entries.append(CorpusEntry(Path(item).stem, dom, FEM_LAMBDAS))
        else:
            dom = builtin_domain(item)
            entries.append(CorpusEntry(item, dom, FEM_LAMBDAS if isinstance(dom, ConvexPolygon) else EXACT_LAMBDAS))
    if not entries:
        raise ValidationError("empty corpus")
    return entries


def cmd_verify(args):
    reports = run_suite(_corpus(args.corpus), args.suite, args.jobs)
    _emit(format_csv(REPORT_CSV_HEADER, (r.csv_row() for r in reports), "verify"), args.output)
    failed = [r for r in reports if not r.passed]
    if failed:
        r = failed[0]
        print(f"error: {len(failed)} of {len(reports)} checks failed; first: {r.name} on {r.domain_id} at lambda={r.lam:g}", file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


def cmd_optimize(args):
    f = FamilySpec.parse(args.family)
    res = optimize(f, RieszQuery(args.lam, args.gamma), args.budget, args.seed, restarts=args.restarts)
    row = study_row(args.lam, res)
    _emit(format_csv(study_csv_header(f), [row.csv_row(f, args.gamma)], "optimize"), args.output)
    return EXIT_OK


def _sum_cell(job):
    f, m, budget, seed, restarts = job
    return study_row(m, minimize_sum(f, m, budget, seed, restarts=restarts))


def run_study(cfg, jobs=1):
    """Rows and header for a `study` config; the mode key picks convergence or sum."""
    known = {"mode", "family", "gamma", "lambdas", "ms", "budget", "seed", "restarts", "output", "jobs"}
    unknown = set(cfg) - known
    if unknown:
        raise ValidationError(f"unknown config keys: {', '.join(sorted(unknown))}")
    if "family" not in cfg:
        raise ValidationError("config needs a family")
    f = FamilySpec.parse(cfg["family"])
    mode = cfg.get("mode", "convergence")
    budget = _ints(cfg.get("budget", "1000"), "budget")[0]
    seed = _ints(cfg.get("seed", "0"), "seed")[0]
    restarts = _ints(cfg["restarts"], "restarts")[0] if "restarts" in cfg else None
    gamma = _floats(cfg.get("gamma", "1"), "gamma")[0]
    if mode == "convergence":
        if gamma < 1:
            raise ValidationError("optimization commands need gamma >= 1")
        if "lambdas" not in cfg:
            raise ValidationError("convergence mode needs lambdas")
        # warm starts chain the thresholds, so the cells run in order
        rows = convergence_study(f, gamma, _floats(cfg["lambdas"], "lambdas"), budget, seed, restarts)
    elif mode == "sum":
        if "ms" not in cfg:
            raise ValidationError("sum mode needs ms")
        ms = _ints(cfg["ms"], "ms")
        if jobs > 1:
            from ._validation import check_increasing

            check_increasing(ms, "ms")
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                rows = list(pool.map(_sum_cell, [(f, m, budget, seed, restarts) for m in ms]))
        else:
            rows = sum_minimization_study(f, ms, budget, seed, restarts)
    else:
        raise ValidationError(f"mode must be convergence or sum, got {mode!r}")
    return study_csv_header(f), [r.csv_row(f, gamma) for r in rows]


def cmd_study(args):
    cfg = parse_config(Path(args.config).read_text())
    jobs = args.jobs if args.jobs is not None else int(cfg.get("jobs", _default_jobs()))
    header, rows = run_study(cfg, jobs)
    _emit(format_csv(header, rows, "study"), args.output or cfg.get("output"))
    return EXIT_OK


# rendering -------------------------------------------------------------------------


def render_polygons_svg(polys, size=400, pad=20):
    """Polygons on a shared frame, first one filled, later ones outlined."""
    pts = np.vstack([p.vertices for p in polys])
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    scale = (size - 2 * pad) / max(float(np.max(hi - lo)), 1e-300)
    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"]
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">']
    for i, p in enumerate(polys):
        xy = (p.vertices - lo) * scale + pad
        path = " ".join(f"{x:.3f},{size - y:.3f}" for x, y in xy)
        fill = f'fill="{colors[0]}" fill-opacity="0.25"' if i == 0 else 'fill="none"'
        out.append(f'<polygon points="{path}" {fill} stroke="{colors[i % len(colors)]}" stroke-width="1.5"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def render_curve_svg(x, y, width=480, height=320, pad=40, xlabel="", ylabel=""):
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    if x.size < 2:
        raise ValidationError("a curve needs at least two points")
    sx = (width - 2 * pad) / max(float(np.ptp(x)), 1e-300)
    sy = (height - 2 * pad) / max(float(np.ptp(y)), 1e-300)
    px = pad + (x - x.min()) * sx
    py = height - pad - (y - y.min()) * sy
    path = " ".join(f"{a:.3f},{b:.3f}" for a, b in zip(px, py))
    return "\n".join([
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect x="{pad}" y="{pad}" width="{width - 2 * pad}" height="{height - 2 * pad}" fill="none" stroke="#888"/>',
        f'<polyline points="{path}" fill="none" stroke="#1f77b4" stroke-width="1.5"/>',
        f'<text x="{width / 2}" y="{height - 8}" text-anchor="middle" font-size="12">{xlabel}</text>',
        f'<text x="12" y="{height / 2}" text-anchor="middle" font-size="12" transform="rotate(-90 12 {height / 2})">{ylabel}</text>',
        f'<text x="{pad}" y="{pad - 6}" font-size="10">{y.max():.6g}</text>',
        f'<text x="{pad}" y="{height - pad + 12}" font-size="10">{y.min():.6g}</text>',
        "</svg>",
    ]) + "\n"


def _csv_columns(path, xcol, ycol):
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    header = rows[0]
    for c in (xcol, ycol):
        if c not in header:
            raise ValidationError(f"{path}: no column {c!r}")
    ix, iy = header.index(xcol), header.index(ycol)
    return [float(r[ix]) for r in rows[1:]], [float(r[iy]) for r in rows[1:]]


def cmd_render(args):
    if args.curve:
        if not (args.x and args.y):
            raise ValidationError("--curve needs --x and --y column names")
        x, y = _csv_columns(args.curve, args.x, args.y)
        svg = render_curve_svg(x, y, xlabel=args.x, ylabel=args.y)
    else:
        if not args.polygons:
            raise ValidationError("render needs polygon files or --curve")
        svg = render_polygons_svg([read_polygon(p) for p in args.polygons])
    _emit(svg, args.output)
    return EXIT_OK


# parser ------------------------------------------------------------------------------


def build_parser():
    p = _Parser(prog="shapelab", description=__doc__)
    p.add_argument("--version", action="version", version=f"shapelab {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def domain_args(sp):
        sp.add_argument("--builtin", help="square, disk, mgon:<m>, rect:<a>, box:<a1,...>")
        sp.add_argument("--domain", help="polygon file")
        sp.add_argument("--lambda", dest="lam", type=float, required=True)
        sp.add_argument("--rel-tol", type=float, default=FEM_REL_TOL, help="FEM tolerance for polygons")

    sp = sub.add_parser("spectrum", help="eigenvalues below lambda as CSV")
    domain_args(sp)
    sp.add_argument("-o", "--output")
    sp.set_defaults(func=cmd_spectrum)

    sp = sub.add_parser("riesz", help="Riesz mean at lambda")
    domain_args(sp)
    sp.add_argument("--spectrum", help="spectrum CSV instead of a domain")
    sp.add_argument("--complete-below", type=float, help="completeness threshold of the spectrum CSV")
    sp.add_argument("--gamma", type=float, default=1.0)
    sp.set_defaults(func=cmd_riesz)

    sp = sub.add_parser("verify", help="inequality sweep over a corpus")
    sp.add_argument("--suite", default="berezin,improved_berezin,liyau,improved_liyau,hersch")
    sp.add_argument("--corpus", default="builtin", help="'builtin' or ';'-separated builtins and polygon files")
    sp.add_argument("--jobs", type=int, default=None)
    sp.add_argument("-o", "--output")
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("optimize", help="single-threshold shape optimization")
    sp.add_argument("--family", required=True, help="rectangles, boxes:<n>, polygons:<m>, disk_unions:<k>")
    sp.add_argument("--lambda", dest="lam", type=float, required=True)
    sp.add_argument("--gamma", type=float, default=1.0)
    sp.add_argument("--budget", type=int, default=1000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--restarts", type=int, default=None)
    sp.add_argument("-o", "--output")
    sp.set_defaults(func=cmd_optimize)

    sp = sub.add_parser("study", help="convergence or sum-minimization study from a config file")
    sp.add_argument("--config", required=True)
    sp.add_argument("--jobs", type=int, default=None)
    sp.add_argument("-o", "--output")
    sp.set_defaults(func=cmd_study)

    sp = sub.add_parser("render", help="SVG of polygon files or of a CSV curve")
    sp.add_argument("polygons", nargs="*")
    sp.add_argument("--curve", help="CSV file to plot")
    sp.add_argument("--x")
    sp.add_argument("--y")
    sp.add_argument("-o", "--output")
    sp.set_defaults(func=cmd_render)
    return p


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        if getattr(args, "jobs", 0) is None:
            args.jobs = _default_jobs()
        if getattr(args, "jobs", 1) < 1:
            raise ValidationError("--jobs must be at least 1")
        if args.command == "optimize" and args.gamma < 1:
            raise ValidationError("optimization commands need gamma >= 1")
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericError, ResourceError, OptimizationError) as exc:
        print(f"error: {_one_line(exc)}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ShapelabError, ValueError, OSError) as exc:
        print(f"error: {_one_line(exc)}", file=sys.stderr)
        return EXIT_USAGE


def _one_line(exc):
    return " ".join(str(exc).split()) or type(exc).__name__


if __name__ == "__main__":
    sys.exit(main())
