"""Exact geometry of convex planar polygons, n-dimensional boxes and disks.

All domain types are immutable. Polygons are stored as a counterclockwise,
strictly convex vertex array; collinear and repeated vertices are removed on
construction.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.optimize import linprog
from scipy.spatial import ConvexHull
from scipy.spatial.distance import pdist

from ._validation import check_nonnegative, check_positive, check_positive_int
from .errors import ValidationError

POLYGON_HEADER = "# shapelab-polygon v1"

# Relative tolerance on edge cross products, in units of diameter**2.
CONVEXITY_TOL = 1e-12
# Above this vertex count the inradius falls back to an LP solver.
_TRIPLE_LIMIT = 64


@dataclass(frozen=True)
class GeometrySummary:
    area: float
    perimeter: float
    inradius: float
    width: float
    diameter: float
    dim: int = 2


def _cross(a, b):
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


def _clean_vertices(v):
    if v.ndim != 2 or v.shape[1] != 2 or len(v) < 3:
        raise ValidationError("a polygon needs at least 3 vertices given as (x, y) pairs")
    if not np.all(np.isfinite(v)):
        raise ValidationError("polygon vertices must be finite")
    diam = float(pdist(v).max())
    if diam <= 0:
        raise ValidationError("polygon vertices coincide")
    keep = list(v)
    changed = True
    while changed and len(keep) >= 3:
        changed = False
        k = len(keep)
        for i in range(k):
            prev, cur, nxt = keep[i - 1], keep[i], keep[(i + 1) % k]
            if np.linalg.norm(cur - prev) <= 1e-12 * diam:
                del keep[i]
                changed = True
                break
            turn = _cross(cur - prev, nxt - cur)
            if abs(turn) <= CONVEXITY_TOL * diam**2:
                del keep[i]
                changed = True
                break
    if len(keep) < 3:
        raise ValidationError("polygon is degenerate (fewer than 3 non-collinear vertices)")
    v = np.array(keep)
    e = np.roll(v, -1, axis=0) - v
    turns = _cross(e, np.roll(e, -1, axis=0))
    if np.all(turns < 0):
        raise ValidationError("polygon vertices are in clockwise order")
    if np.any(turns < 0):
        raise ValidationError("polygon is not convex")
    winding = np.arctan2(turns, np.einsum("ij,ij->i", e, np.roll(e, -1, axis=0))).sum()
    if abs(winding - 2 * math.pi) > 1e-6:
        raise ValidationError("polygon boundary is self-intersecting")
    return v


class ConvexPolygon:
    """Bounded, strictly convex planar polygon with CCW vertices."""

    __slots__ = ("_v", "_cache")

    def __init__(self, vertices):
        v = _clean_vertices(np.array(vertices, dtype=float))
        v.setflags(write=False)
        self._v = v
        self._cache = {}

    @classmethod
    def from_points(cls, points):
        """Convex hull of an arbitrary planar point set."""
        pts = np.asarray(points, dtype=float)
        try:
            hull = ConvexHull(pts)
        except Exception as exc:  # qhull raises its own error type
            raise ValidationError(f"convex hull is degenerate: {exc}") from None
        return cls(pts[hull.vertices])

    def __repr__(self):
        return f"ConvexPolygon({self._v.tolist()!r})"

    def __len__(self):
        return len(self._v)

    @property
    def vertices(self):
        return self._v

    @property
    def edges(self):
        return np.roll(self._v, -1, axis=0) - self._v

    def _halfplanes(self):
        """Unit outward normals and offsets with interior ``normals @ x <= offsets``."""
        if "hp" not in self._cache:
            e = self.edges
            lengths = np.hypot(e[:, 0], e[:, 1])
            normals = np.column_stack([e[:, 1], -e[:, 0]]) / lengths[:, None]
            offsets = np.einsum("ij,ij->i", normals, self._v)
            self._cache["hp"] = (normals, offsets)
        return self._cache["hp"]

    @property
    def area(self):
        v = self._v
        return 0.5 * float(_cross(v, np.roll(v, -1, axis=0)).sum())

    @property
    def perimeter(self):
        e = self.edges
        return float(np.hypot(e[:, 0], e[:, 1]).sum())

    @property
    def centroid(self):
        v = self._v
        w = np.roll(v, -1, axis=0)
        c = _cross(v, w)
        return ((v + w) * c[:, None]).sum(axis=0) / (3.0 * c.sum())

    @property
    def diameter(self):
        return float(pdist(self._v).max())

    @property
    def width(self):
        normals, offsets = self._halfplanes()
        depth = offsets[:, None] - normals @ self._v.T
        return float(depth.max(axis=1).min())

    @property
    def inradius(self):
        return self._incircle()[1]

    @property
    def incenter(self):
        return self._incircle()[0]

    def _incircle(self):
        if "inc" not in self._cache:
            normals, offsets = self._halfplanes()
            if len(normals) <= _TRIPLE_LIMIT:
                self._cache["inc"] = _incircle_vertex_enumeration(normals, offsets)
            else:
                res = linprog(
                    c=[0.0, 0.0, -1.0],
                    A_ub=np.column_stack([normals, np.ones(len(normals))]),
                    b_ub=offsets,
                    bounds=[(None, None), (None, None), (0, None)],
                    method="highs",
                )
                self._cache["inc"] = (res.x[:2], float(res.x[2]))
        return self._cache["inc"]

    def summary(self):
        return GeometrySummary(
            area=self.area,
            perimeter=self.perimeter,
            inradius=self.inradius,
            width=self.width,
            diameter=self.diameter,
            dim=2,
        )

    # rigid motions and scaling
    def translated(self, offset):
        return ConvexPolygon(self._v + np.asarray(offset, dtype=float))

    def rotated(self, angle, about=None):
        about = self.centroid if about is None else np.asarray(about, dtype=float)
        c, s = math.cos(angle), math.sin(angle)
        rot = np.array([[c, -s], [s, c]])
        return ConvexPolygon((self._v - about) @ rot.T + about)

    def reflected(self, about=None):
        """Mirror image in the horizontal line through `about` (default: centroid)."""
        about = self.centroid if about is None else np.asarray(about, dtype=float)
        v = self._v - about
        v = np.column_stack([v[:, 0], -v[:, 1]])[::-1]
        return ConvexPolygon(v + about)

    def scaled(self, factor, about=None):
        factor = check_positive(factor, "factor")
        about = self.centroid if about is None else np.asarray(about, dtype=float)
        return ConvexPolygon((self._v - about) * factor + about)

    def with_area(self, area=1.0):
        """Copy rescaled about its centroid to the given area."""
        return self.scaled(math.sqrt(check_positive(area, "area") / self.area))

    def contains(self, points, tol=0.0):
        normals, offsets = self._halfplanes()
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return np.all(pts @ normals.T <= offsets + tol, axis=1)

    def distance_to(self, points):
        """Euclidean distance from each point to the closed polygon (0 inside)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        a = self._v
        e = self.edges
        rel = pts[:, None, :] - a[None, :, :]
        t = np.clip(np.einsum("pij,ij->pi", rel, e) / np.einsum("ij,ij->i", e, e), 0.0, 1.0)
        closest = a[None] + t[..., None] * e[None]
        d = np.linalg.norm(pts[:, None, :] - closest, axis=2).min(axis=1)
        d[self.contains(pts)] = 0.0
        return d


def _incircle_vertex_enumeration(normals, offsets):
    """Solve max_x min_i (b_i - n_i.x) by enumerating active constraint triples.

    The LP has three unknowns (x, y, t); its optimum sits on a vertex of the
    feasible polytope, i.e. where three edge constraints are tight.
    """
    k = len(normals)
    triples = np.array(list(itertools.combinations(range(k), 3)))
    mats = np.concatenate([normals[triples], np.ones(triples.shape + (1,))], axis=2)
    rhs = offsets[triples]
    dets = np.linalg.det(mats)
    ok = np.abs(dets) > 1e-12
    sols = np.linalg.solve(mats[ok], rhs[ok][..., None])[..., 0]
    slack = offsets[None, :] - sols[:, :2] @ normals.T - sols[:, 2:3]
    scale = max(1.0, float(np.abs(offsets).max()))
    feasible = np.all(slack >= -1e-10 * scale, axis=1) & (sols[:, 2] >= 0)
    sols = sols[feasible]
    best = int(np.argmax(sols[:, 2]))
    return sols[best, :2], float(sols[best, 2])


@dataclass(frozen=True)
class BoxDomain:
    """Axis-parallel box (0, a_1) x ... x (0, a_n)."""

    sides: tuple

    def __post_init__(self):
        sides = tuple(float(a) for a in np.atleast_1d(self.sides))
        if not sides:
            raise ValidationError("a box needs at least one side length")
        for a in sides:
            check_positive(a, "box side")
        object.__setattr__(self, "sides", sides)

    @property
    def dim(self):
        return len(self.sides)

    def summary(self):
        a = np.array(self.sides)
        vol = float(np.prod(a))
        surface = float(2.0 * sum(vol / ai for ai in a))
        return GeometrySummary(
            area=vol,
            perimeter=surface,
            inradius=float(a.min()) / 2,
            width=float(a.min()),
            diameter=float(np.linalg.norm(a)),
            dim=self.dim,
        )

    def to_polygon(self):
        if self.dim != 2:
            raise ValidationError("only 2D boxes convert to polygons")
        a, b = self.sides
        return ConvexPolygon([[0, 0], [a, 0], [a, b], [0, b]])


@dataclass(frozen=True)
class DiskDomain:
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "radius", check_positive(self.radius, "radius"))

    @classmethod
    def with_area(cls, area=1.0):
        return cls(math.sqrt(check_positive(area, "area") / math.pi))

    def summary(self):
        r = self.radius
        return GeometrySummary(
            area=math.pi * r * r,
            perimeter=2 * math.pi * r,
            inradius=r,
            width=2 * r,
            diameter=2 * r,
            dim=2,
        )


def geometry_summary(domain):
    """Area, perimeter, inradius, width and diameter of a domain."""
    if not isinstance(domain, (ConvexPolygon, BoxDomain, DiskDomain)):
        raise ValidationError(f"unsupported domain type {type(domain).__name__}")
    return domain.summary()


def inner_parallel(p, t):
    """Inner parallel set {x in p : dist(x, complement) > t}.

    Returns ``None`` once ``t`` reaches the inradius (the set is empty).
    """
    t = check_nonnegative(t, "t")
    if t == 0:
        return p
    if t >= p.inradius * (1 - 1e-12):
        return None
    normals, offsets = p._halfplanes()
    poly = p.vertices.copy()
    for n, b in zip(normals, offsets - t):
        poly = _clip(poly, n, b)
        if len(poly) < 3:
            return None
    try:
        return ConvexPolygon(poly)
    except ValidationError:
        return None


def _clip(poly, n, b):
    """Sutherland-Hodgman clip of a convex polygon to {x : n.x <= b}."""
    s = poly @ n - b
    out = []
    k = len(poly)
    for i in range(k):
        j = (i + 1) % k
        if s[i] <= 0:
            out.append(poly[i])
        if (s[i] < 0 < s[j]) or (s[j] < 0 < s[i]):
            lam = s[i] / (s[i] - s[j])
            out.append(poly[i] + lam * (poly[j] - poly[i]))
    return np.array(out) if out else np.empty((0, 2))


def outer_parallel_summary(p, t):
    """Measures of the outer parallel body p + B_t (planar Steiner formula)."""
    t = check_nonnegative(t, "t")
    g = p.summary()
    return GeometrySummary(
        area=g.area + t * g.perimeter + math.pi * t * t,
        perimeter=g.perimeter + 2 * math.pi * t,
        inradius=g.inradius + t,
        width=g.width + 2 * t,
        diameter=g.diameter + 2 * t,
        dim=2,
    )


def hausdorff_distance(p, q):
    # dist(., q) is convex, so its sup over p is attained at a vertex of p
    return float(max(q.distance_to(p.vertices).max(), p.distance_to(q.vertices).max()))


def _golden_min(f, a, b, tol=1e-10, max_iter=200):
    invphi = (math.sqrt(5) - 1) / 2
    c, d = b - invphi * (b - a), a + invphi * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if abs(b - a) < tol:
            break
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return (c, fc) if fc < fd else (d, fd)


def rigid_align(p, reference, step_deg=1.0):
    """Move `p` onto `reference` minimizing Hausdorff distance.

    Centroids are matched, then rotations (and the mirror image) are scanned on
    a `step_deg` grid and the best angle is refined by golden-section search.

    Returns
    -------
    aligned : ConvexPolygon
    distance : float
    """
    c_ref = reference.centroid
    base = p.translated(c_ref - p.centroid)
    ref_v = reference.vertices
    best = (math.inf, None, 0.0)
    angles = np.deg2rad(np.arange(0.0, 360.0, step_deg))
    step = math.radians(step_deg)
    for mirror in (False, True):
        cand = base.reflected(about=c_ref) if mirror else base
        v0 = cand.vertices - c_ref

        def dist(theta, v0=v0):
            c, s = math.cos(theta), math.sin(theta)
            v = v0 @ np.array([[c, s], [-s, c]]) + c_ref
            d1 = reference.distance_to(v).max()
            d2 = _polygon_distance_raw(v, ref_v).max()
            return float(max(d1, d2))

        coarse = [dist(a) for a in angles]
        i = int(np.argmin(coarse))
        theta, d = _golden_min(dist, angles[i] - step, angles[i] + step)
        if coarse[i] < d:
            theta, d = angles[i], coarse[i]
        if d < best[0]:
            best = (d, cand, theta)
    d, cand, theta = best
    return cand.rotated(theta, about=c_ref), d


def _polygon_distance_raw(v, pts):
    """distance_to for a CCW convex vertex array without re-validation."""
    e = np.roll(v, -1, axis=0) - v
    lengths = np.hypot(e[:, 0], e[:, 1])
    normals = np.column_stack([e[:, 1], -e[:, 0]]) / lengths[:, None]
    offsets = np.einsum("ij,ij->i", normals, v)
    rel = pts[:, None, :] - v[None]
    t = np.clip(np.einsum("pij,ij->pi", rel, e) / lengths**2, 0.0, 1.0)
    closest = v[None] + t[..., None] * e[None]
    d = np.linalg.norm(pts[:, None, :] - closest, axis=2).min(axis=1)
    d[np.all(pts @ normals.T <= offsets, axis=1)] = 0.0
    return d


def regular_mgon(m, area=1.0):
    """Regular m-gon of the given area with a vertex on the positive x-axis."""
    m = check_positive_int(m, "m", minimum=3)
    area = check_positive(area, "area")
    radius = math.sqrt(2 * area / (m * math.sin(2 * math.pi / m)))
    k = np.arange(m)
    theta = 2 * math.pi * k / m
    return ConvexPolygon(radius * np.column_stack([np.cos(theta), np.sin(theta)]))


def regular_mgon_perimeter(m, area=1.0):
    return 2 * math.sqrt(m * math.tan(math.pi / m) * area)


def steinhagen_ratio(g):
    """Empirical r/w; bounded below by a dimensional constant for convex bodies."""
    return g.inradius / g.width


def diameter_ratio(g):
    """Empirical D r^(n-1) / |Omega|; bounded above by a dimensional constant."""
    return g.diameter * g.inradius ** (g.dim - 1) / g.area


def parse_polygon(text):
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines or lines[0] != POLYGON_HEADER:
        raise ValidationError(f"polygon file must start with {POLYGON_HEADER!r}")
    pts = []
    for lineno, ln in enumerate(lines[1:], start=2):
        if ln.startswith("#"):
            continue
        parts = ln.split()
        if len(parts) != 2:
            raise ValidationError(f"line {lineno}: expected 'x y', got {ln!r}")
        try:
            pts.append((float(parts[0]), float(parts[1])))
        except ValueError:
            raise ValidationError(f"line {lineno}: not a number pair: {ln!r}") from None
    v = np.array(pts, dtype=float)
    if len(v) >= 3:
        signed = 0.5 * float(_cross(v, np.roll(v, -1, axis=0)).sum())
        if signed < 0:
            raise ValidationError("polygon file lists vertices clockwise; reorient explicitly")
    return ConvexPolygon(v)


def read_polygon(path):
    return parse_polygon(Path(path).read_text())


def format_polygon(p):
    rows = [POLYGON_HEADER]
    rows += [f"{x!r} {y!r}" for x, y in p.vertices.tolist()]
    return "\n".join(rows) + "\n"


def write_polygon(path, p):
    Path(path).write_text(format_polygon(p))
