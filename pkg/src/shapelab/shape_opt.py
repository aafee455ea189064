"""Riesz-mean maximization and eigenvalue-sum minimization over shape families.

Every candidate is rescaled to unit measure before its spectrum is taken.
Families:

* ``rectangles``: parameter a > 0, the rectangle (a, 1/a); canonical a >= 1.
* ``boxes(n)``: n - 1 log side lengths; the last side fixes the volume.
* ``polygons(m)``: at most m vertices. The first two vertices are pinned
  at (0, 0) and (1, 0) and the other m - 2 are free (2m - 4 numbers); the
  candidate is the convex hull, rescaled to unit area.
* ``disk_unions(k)``: disjoint disks with areas w_i = z_i^2 / sum z^2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.spatial import ConvexHull, QhullError

from ._validation import check_increasing, check_positive_int
from .errors import AccuracyError, NumericError, OptimizationError, ValidationError
from .fem import DEFAULT_MAX_NODES, fem_solve, node_count, spectrum_from_report
from .geometry import BoxDomain, ConvexPolygon, DiskDomain, regular_mgon, rigid_align
from .riesz import RieszQuery, RieszValue, riesz_mean
from .spectra import Spectrum, box_spectrum, disk_spectrum, scale_spectrum, union_spectrum

KINDS = ("rectangles", "boxes", "polygons", "disk_unions")
STALL_WINDOW = 50
STALL_RTOL = 1e-6
INCUMBENT_RTOL = 1e-4
FEM_LEVEL_TOL = 1e-3
PENALTY_WEIGHT = 10.0


@dataclass(frozen=True)
class FamilySpec:
    """Admissible family of unit-measure domains.

    `size` is n for boxes, the vertex bound m for polygons and the number
    of components k for disk unions; rectangles ignore it.
    """

    kind: str
    size: int = 0
    measure_normalized: bool = True

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"family kind must be one of {KINDS}, got {self.kind!r}")
        if not self.measure_normalized:
            raise ValidationError("families are always normalized to unit measure")
        size = int(self.size)
        if self.kind == "rectangles":
            size = 2
        elif self.kind == "boxes":
            check_positive_int(size, "box dimension", minimum=1)
        elif self.kind == "polygons":
            check_positive_int(size, "polygon vertex bound m", minimum=3)
        else:
            check_positive_int(size, "number of disks k", minimum=1)
        object.__setattr__(self, "size", size)

    @classmethod
    def parse(cls, text):
        """'rectangles', 'boxes:3', 'polygons:5' or 'disk_unions:2'."""
        kind, _, arg = text.partition(":")
        aliases = {"rect": "rectangles", "box": "boxes", "polygons_max_m": "polygons", "mgon": "polygons", "disks": "disk_unions"}
        kind = aliases.get(kind, kind)
        if kind == "rectangles":
            return cls(kind)
        if not arg:
            raise ValidationError(f"family {kind!r} needs a size, e.g. {kind}:3")
        try:
            return cls(kind, int(arg))
        except ValueError:
            raise ValidationError(f"bad family size {arg!r}") from None

    @property
    def label(self):
        return "rectangles" if self.kind == "rectangles" else f"{self.kind}:{self.size}"

    @property
    def n_params(self):
        return {"rectangles": 1, "boxes": self.size - 1, "polygons": 2 * self.size - 4, "disk_unions": self.size}[self.kind]

    @property
    def exact(self):
        return self.kind != "polygons"

    # construction --------------------------------------------------------

    def default_start(self):
        if self.kind == "rectangles":
            return np.array([1.0])
        if self.kind == "boxes":
            return np.zeros(self.size - 1)
        if self.kind == "polygons":
            return _regular_with_base_edge(self.size)[2:].ravel()
        return np.ones(self.size)

    def canonical(self, params):
        params = np.asarray(params, dtype=float).ravel()
        if self.kind == "rectangles":
            a = abs(params[0])
            return np.array([max(a, 1.0 / a)])
        if self.kind == "disk_unions":
            w = self.weights(params)
            return np.sqrt(np.sort(w)[::-1])
        return params

    def weights(self, params):
        z = np.asarray(params, dtype=float).ravel()
        s = float(np.sum(z * z))
        if not s > 0:
            raise ValidationError("disk-union parameters must not all vanish")
        return z * z / s

    def box(self, params):
        params = np.asarray(params, dtype=float).ravel()
        if self.kind == "rectangles":
            a = float(params[0])
            if not a > 0:
                raise ValidationError("rectangle parameter must be positive")
            return BoxDomain((a, 1.0 / a))
        logs = np.append(params, -np.sum(params))
        return BoxDomain(tuple(np.exp(logs)))

    def polygon(self, params):
        """Unit-area convex hull of the parameter vertices, and the hull penalty."""
        pts = np.vstack([[0.0, 0.0], [1.0, 0.0], np.asarray(params, dtype=float).reshape(-1, 2)])
        try:
            hull = ConvexHull(pts)
        except QhullError:
            raise ValidationError("degenerate polygon candidate") from None
        if hull.volume < 1e-9:
            raise ValidationError("degenerate polygon candidate")
        poly = ConvexPolygon(pts[hull.vertices])
        dropped = np.setdiff1d(np.arange(len(pts)), hull.vertices)
        depth = 0.0
        if dropped.size:
            # facet equations are n.x + c <= 0 inside; depth is the distance to the nearest facet
            signed = hull.equations[:, :2] @ pts[dropped].T + hull.equations[:, 2:3]
            depth = float(np.sum(-signed.max(axis=0)))
        return poly.with_area(1.0), max(depth, 0.0) / math.sqrt(poly.area)

    def domain(self, params):
        if self.kind in ("rectangles", "boxes"):
            return self.box(params)
        if self.kind == "polygons":
            return self.polygon(params)[0]
        return [DiskDomain.with_area(w) for w in self.weights(params) if w > 0]

    def reference(self):
        """Unit-measure perimeter minimizer of the family."""
        if self.kind == "rectangles":
            return BoxDomain((1.0, 1.0))
        if self.kind == "boxes":
            return BoxDomain((1.0,) * self.size)
        if self.kind == "polygons":
            return regular_mgon(self.size, 1.0)
        return DiskDomain.with_area(1.0)

    def perimeter(self, params):
        dom = self.domain(params)
        if isinstance(dom, list):
            return float(sum(d.summary().perimeter for d in dom))
        return float(dom.summary().perimeter)

    def reference_perimeter(self):
        return float(self.reference().summary().perimeter)

    def distance_to_reference(self, params):
        """Hausdorff distance after rigid alignment; for disk unions, area outside the largest disk."""
        if self.kind == "disk_unions":
            return float(1.0 - np.max(self.weights(params)))
        if self.kind == "polygons":
            return rigid_align(self.polygon(params)[0], self.reference())[1]
        sides = np.sort(np.array(self.box(params).sides))
        if len(sides) == 2:
            rect = BoxDomain(tuple(sides)).to_polygon()
            return rigid_align(rect, self.reference().to_polygon())[1]
        # centered, axis-matched boxes; the permutation matching sorted sides is optimal
        half = sides / 2
        ref = np.full_like(half, 0.5)
        return float(max(np.linalg.norm(np.maximum(half - ref, 0)), np.linalg.norm(np.maximum(ref - half, 0))))


def _regular_with_base_edge(m):
    """Regular m-gon with an edge from (0, 0) to (1, 0), CCW."""
    k = np.arange(m)
    turn = 2 * math.pi / m
    steps = np.column_stack([np.cos(k * turn), np.sin(k * turn)])
    return np.vstack([[0.0, 0.0], np.cumsum(steps, axis=0)[:-1]])


# spectra of candidates ------------------------------------------------------


class _UnitDiskCache:
    def __init__(self):
        self._spec = None

    def get(self, lam):
        if self._spec is None or self._spec.complete_below < lam:
            self._spec = disk_spectrum(DiskDomain.with_area(1.0), lam)
        return self._spec


_UNIT_DISK = _UnitDiskCache()


def candidate_spectrum(f, params, lambda_max, fem_level=None):
    """Spectrum of the unit-measure candidate, complete below `lambda_max`."""
    if f.kind in ("rectangles", "boxes"):
        return box_spectrum(f.box(params), lambda_max)
    if f.kind == "disk_unions":
        base = _UNIT_DISK.get(lambda_max)
        parts = []
        for w in f.weights(params):
            if w <= 0:
                continue
            # disk of area w: lambda_k = lambda_k(unit) / w, complete below lambda_max
            s = scale_spectrum(base, math.sqrt(w))
            keep = s.eigenvalues < lambda_max
            parts.append(Spectrum(s.eigenvalues[keep], lambda_max))
        return union_spectrum(parts)
    poly = f.polygon(params)[0]
    if fem_level is None:
        fem_level = calibrate_fem_level(f, lambda_max, params)
    return spectrum_from_report(fem_solve(poly, lambda_max, fem_level), lambda_max)


def evaluate_candidate(f, params, q, fem_level=None):
    """Riesz mean of the unit-measure candidate; infeasible parameters give -inf."""
    if not isinstance(q, RieszQuery):
        q = RieszQuery(*q)
    try:
        s = candidate_spectrum(f, params, q.lam, fem_level)
        penalty = f.polygon(params)[1] if f.kind == "polygons" else 0.0
    except ValidationError:
        return RieszValue(-math.inf, -math.inf, -math.inf)
    val = riesz_mean(s, q)
    if penalty > 0:
        cut = PENALTY_WEIGHT * penalty * max(abs(val.value), 1.0)
        val = RieszValue(val.value - cut, val.lower - cut, val.upper - cut)
    return val


def calibrate_fem_level(f, lam, params=None, rel_tol=FEM_LEVEL_TOL, max_nodes=DEFAULT_MAX_NODES):
    """Lowest mesh level whose extrapolated Riesz mean moves by at most `rel_tol` at the next level.

    Calibrated once on the starting polygon and kept fixed during a run, so
    the objective stays a smooth function of the parameters.
    """
    poly = f.polygon(f.default_start() if params is None else params)[0]
    q = RieszQuery(lam, 1.0)
    # Weyl count below lam, with a few mesh nodes per eigenfunction on the coarse level
    need = 8 * (lam * poly.area / (4 * math.pi) + 10)
    level = 2
    while node_count(poly, level) < need:
        level += 1
    prev = riesz_mean(spectrum_from_report(fem_solve(poly, lam, level), lam), q).value
    while node_count(poly, level + 2) <= max_nodes:
        cur = riesz_mean(spectrum_from_report(fem_solve(poly, lam, level + 1), lam), q).value
        if abs(cur - prev) <= rel_tol * max(abs(cur), 1.0):
            return level
        level, prev = level + 1, cur
    raise AccuracyError(f"no mesh level within {max_nodes} nodes reaches relative tolerance {rel_tol}")


# bookkeeping ---------------------------------------------------------------


class _Stop(Exception):
    pass


@dataclass
class OptimizationResult:
    family: FamilySpec
    query: RieszQuery
    best_params: np.ndarray
    objective: RieszValue
    evaluations: int
    trace: list = field(default_factory=list)
    restarts_used: int = 0
    incumbents: list = field(default_factory=list)
    fem_level: int = None

    @property
    def perimeter(self):
        return self.family.perimeter(self.best_params)

    def distance_to_reference(self):
        return self.family.distance_to_reference(self.best_params)


class _Tracker:
    """Counts evaluations, keeps the incumbent and enforces budget and stall stops."""

    def __init__(self, fun, budget, sense=1.0):
        self.fun = fun
        self.budget = budget
        self.sense = sense  # +1 maximize, -1 minimize
        self.evals = 0
        self.best_x = None
        self.best = -math.inf
        self.trace = []
        self.window_start = -math.inf
        self.run_evals = 0
        self.stall_check = False

    def new_run(self):
        self.window_start = self.best
        self.run_evals = 0
        self.stall_check = True

    def __call__(self, x):
        if self.evals >= self.budget:
            raise _Stop
        x = np.array(x, dtype=float)
        v = self.fun(x)
        self.evals += 1
        self.run_evals += 1
        score = self.sense * v
        if score > self.best:
            self.best, self.best_x = score, x
            self.trace.append((x.copy(), float(v)))
        if self.stall_check and self.run_evals % STALL_WINDOW == 0:
            ref = self.window_start
            if math.isfinite(ref) and self.best - ref <= STALL_RTOL * max(abs(ref), 1e-300):
                raise _Stop
            self.window_start = self.best
        return v

    def neg(self, x):
        """Minimization form of the tracked objective."""
        v = self(x)
        score = self.sense * v
        return -score if math.isfinite(score) else 1e300


def _nelder_mead(tracker, x0, scale, remaining):
    n = len(x0)
    simplex = np.vstack([x0, x0 + scale * np.eye(n)])
    tracker.new_run()
    try:
        minimize(
            tracker.neg, x0, method="Nelder-Mead",
            options={"initial_simplex": simplex, "maxfev": remaining, "xatol": 1e-9, "fatol": 1e-12},
        )
    except _Stop:
        pass
    tracker.stall_check = False


def _golden_max(fun, a, b, iters):
    invphi = (math.sqrt(5) - 1) / 2
    c, d = b - invphi * (b - a), a + invphi * (b - a)
    fc, fd = fun(c), fun(d)
    for _ in range(iters):
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = fun(d)


def _grid_then_golden(tracker, lo, hi, budget, to_params):
    """1D search on [lo, hi]: coarse grid, local grids around the best local extrema, golden polish."""
    n_coarse = max(20, budget // 2)
    ts = np.linspace(lo, hi, n_coarse)
    vals = np.array([tracker(to_params(t)) for t in ts])
    score = tracker.sense * vals
    step = ts[1] - ts[0]
    # distinct basins first: neighbouring cells of one kink would otherwise crowd out the rest
    padded = np.concatenate([[-np.inf], score, [-np.inf]])
    peaks = np.flatnonzero((score >= padded[:-2]) & (score >= padded[2:]))
    top = peaks[np.argsort(-score[peaks], kind="stable")][:6]
    n_local = max(10, (budget - n_coarse) // (2 * len(top) + 2))
    for i in top:
        for t in np.linspace(ts[i] - step, ts[i] + step, n_local):
            if lo <= t <= hi:
                tracker(to_params(t))
    t_best = _param_to_t(tracker.best_x)
    fine = 2 * step / n_local
    _golden_max(lambda t: tracker.sense * tracker(to_params(t)), t_best - fine, t_best + fine, 40)


def _param_to_t(x):
    return math.log(float(x[0]))


def _simplex_grid(k, res):
    """Points of {w >= 0, sum w = 1} with denominators `res`."""
    if k == 1:
        return np.ones((1, 1))
    out = []
    for c in _compositions(res, k):
        out.append(np.array(c, dtype=float) / res)
    return np.array(out)


def _compositions(n, k):
    if k == 1:
        yield (n,)
        return
    for i in range(n + 1):
        for rest in _compositions(n - i, k - 1):
            yield (i,) + rest


def _run(f, fun, budget, seed, start, restarts, sense, lam_hint):
    tracker = _Tracker(fun, budget, sense)
    rng = np.random.default_rng(seed)
    runs = 0
    try:
        if f.kind == "rectangles":
            a_max = max(math.sqrt(lam_hint) / math.pi, 1.5)
            _grid_then_golden(tracker, 0.0, math.log(a_max), budget, lambda t: np.array([math.exp(t)]))
            runs = 1
        elif f.kind == "disk_unions":
            k = f.size
            res = 1
            while len(_simplex_grid(k, res + 1)) <= budget // 2 and res < 400:
                res += 1
            for w in _simplex_grid(k, res):
                tracker(np.sqrt(w))
            runs = 1
            _nelder_mead(tracker, tracker.best_x.copy(), 0.05, budget - tracker.evals)
        else:
            x0 = f.default_start() if start is None else np.asarray(start, dtype=float)
            scale = 0.1 if f.kind == "polygons" else 0.2
            starts = [x0]
            for _ in range(restarts):
                base = f.default_start()
                starts.append(base + rng.normal(0.0, 0.05, size=base.shape))
            for x in starts:
                if tracker.evals >= budget:
                    break
                runs += 1
                _nelder_mead(tracker, x, scale, budget - tracker.evals)
    except _Stop:
        pass
    if tracker.best_x is None or not math.isfinite(tracker.best):
        raise OptimizationError("budget exhausted before any feasible evaluation")
    return tracker, max(runs - 1, 0)


def optimize(f, q, budget=1000, seed=0, start=None, restarts=None, fem_level=None):
    """Maximize the Riesz mean over family `f` at the fixed query `q`.

    Rectangles use a log-scale grid plus golden section; disk unions a grid
    on the weight simplex polished by Nelder-Mead; boxes and polygons
    Nelder-Mead with restarts from perturbed reference shapes. The search
    stops when the budget is spent or the best value improves by less than
    a relative 1e-6 over 50 evaluations.
    """
    if not isinstance(q, RieszQuery):
        q = RieszQuery(*q)
    if budget < 100:
        raise ValidationError("optimize needs a budget of at least 100 evaluations")
    if q.gamma < 1:
        raise ValidationError("shape optimization needs gamma >= 1")
    if restarts is None:
        restarts = 2 if f.kind in ("polygons", "boxes") else 0
    if f.kind == "polygons" and fem_level is None:
        fem_level = calibrate_fem_level(f, q.lam, start)

    def fun(x):
        return evaluate_candidate(f, x, q, fem_level).value

    tracker, used = _run(f, fun, budget, seed, start, restarts, 1.0, q.lam)
    return _finish(f, q, tracker, used, fem_level, lambda x: evaluate_candidate(f, x, q, fem_level))


def _finish(f, q, tracker, used, fem_level, reevaluate):
    best = tracker.best_x
    objective = reevaluate(best)
    if tracker.sense * objective.value < tracker.best - 1e-9 * max(abs(tracker.best), 1.0):
        raise NumericError("incumbent objective is not reproducible on re-evaluation")
    incumbents = []
    seen = set()
    for x, v in tracker.trace:
        if tracker.sense * v >= tracker.best - INCUMBENT_RTOL * abs(tracker.best):
            key = tuple(np.round(f.canonical(x), 9))
            if key not in seen:
                seen.add(key)
                incumbents.append((f.canonical(x), v))
    return OptimizationResult(
        family=f, query=q, best_params=f.canonical(best) if f.kind != "polygons" else best,
        objective=objective, evaluations=tracker.evals, trace=tracker.trace,
        restarts_used=used, incumbents=incumbents, fem_level=fem_level,
    )


@dataclass(frozen=True)
class StudyRow:
    key: float
    best_params: np.ndarray
    distance_to_reference: float
    objective: RieszValue
    perimeter: float
    evaluations: int
    result: OptimizationResult = field(compare=False, repr=False)

    def csv_row(self, family, gamma):
        return (
            self.key, family.label, gamma, *self.best_params.tolist(),
            self.objective.value, self.objective.lower, self.objective.upper,
            self.perimeter, self.distance_to_reference, self.evaluations,
        )


def study_csv_header(f):
    params = [f"param_{i}" for i in range(1, f.n_params + 1)]
    return ("lambda_or_m", "family", "gamma", *params, "objective", "objective_lo", "objective_hi", "perimeter", "distance_to_reference", "evaluations")


def study_row(key, res):
    return StudyRow(
        float(key), np.asarray(res.best_params, dtype=float), res.distance_to_reference(),
        res.objective, res.perimeter, res.evaluations, res,
    )


def convergence_study(f, q_gamma, lambdas, budget=1000, seed=0, restarts=None):
    """Optimize at each lambda (warm-starting from the previous maximizer)."""
    lambdas = check_increasing(lambdas, "lambdas")
    rows = []
    start = None
    for lam in lambdas:
        res = optimize(f, RieszQuery(float(lam), q_gamma), budget, seed, start=start, restarts=restarts)
        rows.append(study_row(lam, res))
        start = res.best_params
    return rows


def _sum_lambda_max(f, params, m):
    """A threshold below which the candidate has at least m eigenvalues."""
    g = f.domain(params)
    # Weyl guess with a perimeter correction, raised until m values are certified
    per = f.perimeter(params)
    lam = (4 * math.pi * m + 2 * math.sqrt(math.pi * m) * per + 50.0) * 1.2
    if isinstance(g, BoxDomain):
        lam = max(lam, 1.2 * float(np.sum((math.pi / np.array(g.sides)) ** 2)))
    return lam


def eigenvalue_average(f, params, m, fem_level=None):
    """(1/m) sum of the first m eigenvalues of the unit-measure candidate."""
    try:
        lam = _sum_lambda_max(f, params, m)
        for _ in range(60):
            s = candidate_spectrum(f, params, lam, fem_level)
            if s.count(lam) >= m:
                break
            lam *= 1.5
        else:
            raise AccuracyError(f"could not certify {m} eigenvalues")
        penalty = f.polygon(params)[1] if f.kind == "polygons" else 0.0
    except ValidationError:
        return RieszValue(math.inf, math.inf, math.inf)
    ev, eb = s.eigenvalues[:m], s.error_bounds[:m]
    avg = float(ev.mean())
    val = RieszValue(avg, avg - float(eb.mean()), avg + float(eb.mean()))
    if penalty > 0:
        bump = PENALTY_WEIGHT * penalty * avg
        val = RieszValue(val.value + bump, val.lower + bump, val.upper + bump)
    return val


def minimize_sum(f, m, budget=1000, seed=0, start=None, restarts=None, fem_level=None):
    """Minimize (1/m) sum_{k <= m} lambda_k over family `f`."""
    m = check_positive_int(m, "m")
    if budget < 100:
        raise ValidationError("minimize_sum needs a budget of at least 100 evaluations")
    if restarts is None:
        restarts = 2 if f.kind in ("polygons", "boxes") else 0
    if f.kind == "polygons" and fem_level is None:
        ref = f.default_start() if start is None else start
        fem_level = calibrate_fem_level(f, _sum_lambda_max(f, ref, m), start)

    def fun(x):
        return eigenvalue_average(f, x, m, fem_level).value

    # the rectangle range: lambda_1 >= pi^2 a^2 exceeds the square's average beyond a_max
    hint = eigenvalue_average(f, f.default_start(), m).value if f.kind == "rectangles" else 0.0
    tracker, used = _run(f, fun, budget, seed, start, restarts, -1.0, hint)
    q = RieszQuery(0.0, 1.0)
    return _finish(f, q, tracker, used, fem_level, lambda x: eigenvalue_average(f, x, m, fem_level))


def sum_minimization_study(f, ms, budget=1000, seed=0, restarts=None):
    """Minimize the average of the first m eigenvalues for each m in `ms`."""
    ms = check_increasing(ms, "ms")
    rows = []
    start = None
    for m in ms:
        res = minimize_sum(f, int(m), budget, seed, start=start, restarts=restarts)
        rows.append(study_row(m, res))
        start = res.best_params
    return rows


def best_on_grid(f, grid, q):
    """Exhaustive maximization over explicit parameter vectors; returns (index, values)."""
    vals = np.array([evaluate_candidate(f, x, q).value for x in grid])
    return int(np.argmax(vals)), vals
