"""Berezin, Li-Yau and Hersch-Protter checks and two-term Weyl residuals.

Each check returns an `InequalityReport` whose margin is the signed slack
normalized by the bound. For FEM spectra the decision uses the worst end
of the eigenvalue brackets, so a pass is certified up to the stated error
bounds.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from ._validation import check_nonnegative, check_positive_int
from .errors import ContractError, ValidationError
from .geometry import BoxDomain, ConvexPolygon, DiskDomain, regular_mgon
from .riesz import RieszQuery, _riesz_sum, riesz_mean
from .spectra import exact_spectrum

REPORT_CSV_HEADER = ("check", "domain_id", "lambda", "gamma", "m", "value", "bound", "margin", "passed")
CHECKS = ("berezin", "improved_berezin", "liyau", "improved_liyau", "hersch")
CHECK_ALIASES = {"li_yau": "liyau", "hersch_protter": "hersch", "improved_li_yau": "improved_liyau"}


def lt_constant(gamma, dim):
    """Semiclassical constant Gamma(g+1) / ((4 pi)^(n/2) Gamma(g+1+n/2))."""
    gamma = check_nonnegative(gamma, "gamma")
    dim = check_nonnegative(dim, "dim")
    return math.exp(gammaln(gamma + 1) - gammaln(gamma + 1 + dim / 2) - (dim / 2) * math.log(4 * math.pi))


def sum_constant_a(n):
    n = check_positive_int(n, "n")
    return 4 * math.pi * n * math.exp(gammaln(n / 2 + 1) * 2 / n) / (n + 2)


def sum_constant_b(n):
    n = check_positive_int(n, "n")
    return 2 * math.pi * math.exp(gammaln(n / 2 + 1) * (1 + 1 / n) - gammaln((n + 1) / 2)) / (n + 1)


@dataclass(frozen=True)
class SemiclassicalConstants:
    gamma: float
    dim: int
    lt_constant: float
    sum_A: float
    sum_B: float


def semiclassical_constants(gamma, dim):
    return SemiclassicalConstants(float(gamma), int(dim), lt_constant(gamma, dim), sum_constant_a(dim), sum_constant_b(dim))


@dataclass(frozen=True)
class InequalityReport:
    name: str
    passed: bool
    margin: float
    domain_id: str = ""
    lam: float = math.nan
    gamma: float = math.nan
    m: int = 0
    value: float = math.nan
    bound: float = math.nan
    extra: dict = field(default_factory=dict, compare=False)

    def csv_row(self):
        return (self.name, self.domain_id, self.lam, self.gamma, self.m, self.value, self.bound, self.margin, self.passed)


def _norm_margin(slack, bound):
    return slack / abs(bound) if bound != 0 else slack


def _query(q, gamma):
    return q if isinstance(q, RieszQuery) else RieszQuery(q, gamma)


def berezin_check(s, g, q, gamma=1.0, domain_id=""):
    """Tr(-Delta - lam)_-^gamma <= L^{gamma,n} |Omega| lam^(gamma + n/2), for gamma >= 1."""
    q = _query(q, gamma)
    if q.gamma < 1:
        raise ContractError("the Berezin inequality needs gamma >= 1")
    tr = riesz_mean(s, q)
    bound = lt_constant(q.gamma, g.dim) * g.area * q.lam ** (q.gamma + g.dim / 2)
    margin = _norm_margin(bound - tr.upper, bound) if bound > 0 else 0.0
    return InequalityReport("berezin", tr.upper <= bound, margin, domain_id, q.lam, q.gamma, 0, tr.value, bound)


def improved_berezin_check(s, g, q, gamma=1.0, domain_id=""):
    """Positivity of the perimeter coefficient in the improved Berezin bound.

    Returns (report, empirical_c) with
    empirical_c = (L^{g,n}|Omega| lam^(g+n/2) - Tr) / (L^{g,n-1}|dOmega| lam^(g+(n-1)/2)).
    At or below pi^2/(4 r^2) the check instead requires Tr = 0.
    """
    q = _query(q, gamma)
    if q.gamma < 1:
        raise ContractError("the improved Berezin inequality needs gamma >= 1")
    tr = riesz_mean(s, q)
    threshold = math.pi**2 / (4 * g.inradius**2)
    if q.lam <= threshold:
        passed = tr.upper == 0.0
        rep = InequalityReport(
            "improved_berezin", passed, 0.0 if passed else -1.0, domain_id, q.lam, q.gamma, 0, tr.value, 0.0,
            {"clause": "below_threshold", "threshold": threshold},
        )
        return rep, math.nan
    n = g.dim
    lead = lt_constant(q.gamma, n) * g.area * q.lam ** (q.gamma + n / 2)
    scale = lt_constant(q.gamma, n - 1) * g.perimeter * q.lam ** (q.gamma + (n - 1) / 2)
    c = (lead - tr.value) / scale
    c_certified = (lead - tr.upper) / scale
    rep = InequalityReport(
        "improved_berezin", c_certified > 0, c_certified, domain_id, q.lam, q.gamma, 0, c, 0.0,
        {"clause": "perimeter_term", "threshold": threshold},
    )
    return rep, c


def li_yau_bounds(g, k):
    return sum_constant_a(g.dim) * (np.asarray(k, dtype=float) / g.area) ** (2 / g.dim)


def li_yau_check(s, g, domain_id=""):
    """lambda_k >= A_n (k/|Omega|)^(2/n) for every k in the certified part of the spectrum."""
    n_cert = s.count(s.complete_below)
    ev = s.eigenvalues[:n_cert]
    if ev.size == 0:
        return InequalityReport("liyau", True, math.inf, domain_id, s.complete_below, math.nan, 0, math.nan, math.nan)
    k = np.arange(1, ev.size + 1)
    bounds = li_yau_bounds(g, k)
    rel = (ev - s.error_bounds[:n_cert] - bounds) / bounds
    worst = int(np.argmin(rel))
    return InequalityReport(
        "liyau", bool(rel[worst] >= 0), float(rel[worst]), domain_id, s.complete_below, math.nan,
        worst + 1, float(ev[worst]), float(bounds[worst]),
    )


def hersch_protter_check(s, g, domain_id=""):
    """lambda_1 >= pi^2 / (4 r^2)."""
    if len(s) == 0:
        raise ContractError("hersch_protter_check needs a nonempty spectrum")
    bound = math.pi**2 / (4 * g.inradius**2)
    lam1 = float(s.eigenvalues[0])
    lo = lam1 - float(s.error_bounds[0])
    return InequalityReport("hersch", lo >= bound, (lo - bound) / bound, domain_id, math.nan, math.nan, 1, lam1, bound)


def improved_li_yau_check(s, g, m, domain_id=""):
    """Positivity of the perimeter coefficient in the improved Li-Yau bound.

    empirical_c = ((1/m) sum lambda_k - A_n (m/|Omega|)^(2/n)) / (B_n (|dOmega|/|Omega|) (m/|Omega|)^(1/n)).
    """
    m = check_positive_int(m, "m")
    if m > s.count(s.complete_below):
        raise ContractError(f"m = {m} exceeds the certified part of the spectrum")
    n = g.dim
    avg = float(s.eigenvalues[:m].mean())
    avg_lo = avg - float(s.error_bounds[:m].mean())
    rho = m / g.area
    lead = sum_constant_a(n) * rho ** (2 / n)
    scale = sum_constant_b(n) * (g.perimeter / g.area) * rho ** (1 / n)
    c = (avg - lead) / scale
    c_certified = (avg_lo - lead) / scale
    rep = InequalityReport("improved_liyau", c_certified > 0, c_certified, domain_id, math.nan, math.nan, m, c, 0.0)
    return rep, c


def weyl_residual(s, g, q, gamma=1.0):
    """(Tr - L^{g,n}|Omega| lam^(g+n/2)) / lam^(g+(n-1)/2)."""
    q = _query(q, gamma)
    if q.gamma < 1:
        raise ContractError("weyl_residual needs gamma >= 1")
    if q.lam <= 0:
        raise ValidationError("weyl_residual needs lambda > 0")
    tr = riesz_mean(s, q).value
    n = g.dim
    lead = lt_constant(q.gamma, n) * g.area * q.lam ** (q.gamma + n / 2)
    return (tr - lead) / q.lam ** (q.gamma + (n - 1) / 2)


def weyl_prediction(g, gamma=1.0):
    """Limit of weyl_residual: -L^{g,n-1} |dOmega| / 4."""
    return -lt_constant(gamma, g.dim - 1) * g.perimeter / 4


# corpus -------------------------------------------------------------------

EXACT_LAMBDAS = (10.0, 50.0, 100.0, 500.0, 1e3, 5e3, 1e4, 1e5)
FEM_LAMBDAS = (50.0, 100.0, 200.0)
BEREZIN_GAMMAS = (1.0, 1.5, 2.0)
LIYAU_MS = (1, 2, 3, 5, 10, 20, 50, 100, 200)
FEM_REL_TOL = 0.01


@dataclass(frozen=True, eq=False)
class CorpusEntry:
    domain_id: str
    domain: object
    lambdas: tuple

    @property
    def is_exact(self):
        return isinstance(self.domain, (BoxDomain, DiskDomain))

    def spectrum(self):
        lam_max = max(self.lambdas)
        if self.is_exact:
            return exact_spectrum(self.domain, lam_max)
        from .fem import fem_spectrum

        return fem_spectrum(self.domain, lam_max, FEM_REL_TOL)


def _unit_rect(aspect):
    a = math.sqrt(aspect)
    return BoxDomain((a, 1 / a))


def _with_thresholds(base, g):
    thr = math.pi**2 / (4 * g.inradius**2)
    extra = [thr * 1.01, thr * 2, thr * 10]
    lam_cap = max(base)
    return tuple(sorted({*base, *(x for x in extra if x <= lam_cap)}))


def builtin_corpus():
    """Boxes (aspect 1-100, 2D and 3D), disks, regular m-gons (m = 3..12), irregular polygons."""
    entries = []
    for aspect in (1, 1.5, 2, 3, 5, 10, 20, 50, 100):
        entries.append((f"rect:{aspect:g}", _unit_rect(aspect), EXACT_LAMBDAS))
    entries.append(("square:2", BoxDomain((2.0, 2.0)), EXACT_LAMBDAS))
    for sides in ((1, 1, 1), (1, 2, 0.5), (3, 1, 1 / 3)):
        entries.append(("box:" + ",".join(f"{a:g}" for a in sides), BoxDomain(sides), EXACT_LAMBDAS))
    for r in (1 / math.sqrt(math.pi), 1.0, 0.25):
        entries.append((f"disk:{r:.6g}", DiskDomain(r), EXACT_LAMBDAS))
    for m in range(3, 13):
        entries.append((f"mgon:{m}", regular_mgon(m, 1.0), FEM_LAMBDAS))
    irregular = {
        "right_triangle": [[0, 0], [1.5, 0], [0, 1.2]],
        "obtuse_triangle": [[0, 0], [2.0, 0], [1.6, 0.6]],
        "trapezoid": [[0, 0], [1.6, 0], [1.1, 0.8], [0.3, 0.8]],
        "kite": [[0, 0], [0.8, -0.5], [1.6, 0], [0.8, 0.9]],
        "pentagon_skew": [[0, 0], [1.2, -0.1], [1.5, 0.7], [0.6, 1.1], [-0.2, 0.6]],
        "parallelogram": [[0, 0], [1.2, 0], [1.7, 0.8], [0.5, 0.8]],
    }
    for name, pts in irregular.items():
        entries.append((name, ConvexPolygon(pts).with_area(1.0), FEM_LAMBDAS))
    out = []
    for did, dom, lams in entries:
        out.append(CorpusEntry(did, dom, _with_thresholds(lams, dom.summary())))
    return out


def normalize_checks(names):
    if isinstance(names, str):
        names = [x.strip() for x in names.split(",") if x.strip()]
    out = []
    for name in names:
        name = CHECK_ALIASES.get(name, name)
        if name not in CHECKS:
            raise ValidationError(f"unknown check {name!r}; choose from {', '.join(CHECKS)}")
        out.append(name)
    return out


def check_entry(entry, checks=CHECKS, spectrum=None):
    """All requested checks on one corpus entry; returns a list of reports."""
    checks = normalize_checks(checks)
    s = entry.spectrum() if spectrum is None else spectrum
    g = entry.domain.summary()
    did = entry.domain_id
    reports = []
    if "berezin" in checks:
        for lam in entry.lambdas:
            for gam in BEREZIN_GAMMAS:
                reports.append(berezin_check(s, g, RieszQuery(lam, gam), domain_id=did))
    if "improved_berezin" in checks:
        for lam in entry.lambdas:
            for gam in BEREZIN_GAMMAS:
                reports.append(improved_berezin_check(s, g, RieszQuery(lam, gam), domain_id=did)[0])
    if "liyau" in checks:
        reports.append(li_yau_check(s, g, domain_id=did))
    if "improved_liyau" in checks:
        n_cert = s.count(s.complete_below)
        for m in LIYAU_MS:
            if m <= n_cert:
                reports.append(improved_li_yau_check(s, g, m, domain_id=did)[0])
    if "hersch" in checks and len(s):
        reports.append(hersch_protter_check(s, g, domain_id=did))
    return reports


def run_suite(corpus=None, checks=CHECKS, jobs=1):
    """Sweep the checks over a corpus, in corpus order."""
    corpus = builtin_corpus() if corpus is None else list(corpus)
    checks = normalize_checks(checks)
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(check_entry, corpus, [checks] * len(corpus)))
    else:
        chunks = [check_entry(e, checks) for e in corpus]
    return [r for chunk in chunks for r in chunk]


def empirical_constants(corpus=None):
    """Observed r/w and D r^(n-1)/|Omega| ranges over the corpus (constants left open)."""
    from .geometry import diameter_ratio, steinhagen_ratio

    corpus = builtin_corpus() if corpus is None else corpus
    sw = [steinhagen_ratio(e.domain.summary()) for e in corpus]
    dr = [diameter_ratio(e.domain.summary()) for e in corpus]
    return {"steinhagen_min": min(sw), "steinhagen_max": max(sw), "diameter_ratio_max": max(dr)}
