import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shapelab.errors import ValidationError
from shapelab.geometry import (
    POLYGON_HEADER,
    BoxDomain,
    ConvexPolygon,
    DiskDomain,
    format_polygon,
    geometry_summary,
    hausdorff_distance,
    inner_parallel,
    outer_parallel_summary,
    parse_polygon,
    regular_mgon,
    regular_mgon_perimeter,
    rigid_align,
)

from conftest import convex_polygons
from oracles import best_rotation_hausdorff, hausdorff_sampled, polygon_area

SQUARE = ConvexPolygon([[0, 0], [1, 0], [1, 1], [0, 1]])


def test_unit_square_summary():
    g = geometry_summary(SQUARE)
    assert g.area == pytest.approx(1.0)
    assert g.perimeter == pytest.approx(4.0)
    assert g.inradius == pytest.approx(0.5)
    assert g.width == pytest.approx(1.0)
    assert g.diameter == pytest.approx(math.sqrt(2))
    assert g.area / g.perimeter <= g.inradius + 1e-15
    assert g.inradius == pytest.approx(2 * g.area / g.perimeter)


def test_unit_area_disk_summary():
    g = DiskDomain.with_area(1.0).summary()
    assert g.inradius == pytest.approx(1 / math.sqrt(math.pi), rel=1e-14)
    assert g.perimeter == pytest.approx(2 * math.sqrt(math.pi), rel=1e-14)


def test_box_summary_matches_polygon():
    b = BoxDomain((2.0, 0.5))
    assert b.summary().inradius == pytest.approx(b.to_polygon().inradius)
    assert b.summary().diameter == pytest.approx(b.to_polygon().diameter)


def test_degenerate_polygons_rejected():
    with pytest.raises(ValidationError):
        ConvexPolygon([[0, 0], [1, 0], [2, 0]])
    with pytest.raises(ValidationError):
        ConvexPolygon([[0, 0], [1, 0], [0, 1], [1, 1]])


def test_collinear_middle_vertex_dropped():
    p = ConvexPolygon([[0, 0], [0.5, 0], [1, 0], [1, 1], [0, 1]])
    assert len(p.vertices) == 4


def test_inner_parallel_square():
    q = inner_parallel(SQUARE, 0.25)
    assert q.perimeter == pytest.approx(2.0)
    assert q.perimeter >= 4 * (1 - 0.25 / 0.5) - 1e-12
    assert inner_parallel(SQUARE, 0.6) is None
    assert inner_parallel(SQUARE, 0.0) is SQUARE


def test_outer_parallel_examples():
    g = outer_parallel_summary(SQUARE, 1.0)
    assert g.area == pytest.approx(5 + math.pi)
    assert g.perimeter == pytest.approx(4 + 2 * math.pi)
    assert outer_parallel_summary(SQUARE, 0.1).area == pytest.approx(1.4 + 0.01 * math.pi)
    assert outer_parallel_summary(SQUARE, 0.0).area == pytest.approx(1.0)


def test_outer_parallel_monte_carlo():
    rng = np.random.default_rng(1)
    pts = rng.uniform(-0.1, 1.1, size=(400_000, 2))
    inside = SQUARE.distance_to(pts) <= 0.1
    mc = inside.mean() * 1.2**2
    assert mc == pytest.approx(outer_parallel_summary(SQUARE, 0.1).area, rel=5e-3)


def test_hausdorff_examples():
    assert hausdorff_distance(SQUARE, SQUARE) == 0.0
    assert hausdorff_distance(SQUARE, SQUARE.translated((0.3, 0))) == pytest.approx(0.3)
    inner = ConvexPolygon([[0.25, 0.25], [0.75, 0.25], [0.75, 0.75], [0.25, 0.75]])
    d = hausdorff_distance(SQUARE, inner)
    assert d == pytest.approx(0.25 * math.sqrt(2))
    assert d == pytest.approx(hausdorff_sampled(SQUARE.vertices, inner.vertices), abs=1e-3)


def test_rigid_align_recovers_symmetry():
    pent = regular_mgon(5)
    _, d = rigid_align(pent.rotated(math.radians(17)).translated((3, -1)), pent)
    assert d < 1e-6
    sq = regular_mgon(4)
    _, d = rigid_align(sq.rotated(math.pi / 4), sq)
    assert d < 1e-6


def test_rigid_align_hexagon_pentagon():
    hexagon, pentagon = regular_mgon(6), regular_mgon(5)
    _, d = rigid_align(hexagon, pentagon)
    # rotation symmetries of 60 and 72 degrees leave a 12 degree period
    oracle = best_rotation_hausdorff(hexagon.vertices, pentagon.vertices, 0.01, period_deg=12.0)
    assert d == pytest.approx(oracle, abs=1e-6)
    assert d == pytest.approx(0.10769, abs=1e-5)


@pytest.mark.parametrize("m,per", [(4, 4.0), (3, 2 * 3**0.75), (6, 3.72242)])
def test_regular_mgon_perimeter(m, per):
    p = regular_mgon(m, 1.0)
    assert p.area == pytest.approx(1.0)
    assert p.perimeter == pytest.approx(per, rel=1e-5)
    assert regular_mgon_perimeter(m) == pytest.approx(p.perimeter)


def test_regular_mgon_perimeter_decreasing_to_disk():
    pers = [regular_mgon(m).perimeter for m in range(3, 200)]
    assert all(a > b for a, b in zip(pers, pers[1:]))
    assert pers[-1] == pytest.approx(2 * math.sqrt(math.pi), rel=1e-3)
    with pytest.raises(ValidationError):
        regular_mgon(2)


@pytest.mark.parametrize("m", range(3, 9))
def test_regular_mgon_minimizes_perimeter(m):
    rng = np.random.default_rng(m)
    best = regular_mgon(m).perimeter
    for _ in range(10_000):
        pts = rng.normal(size=(m, 2))
        try:
            p = ConvexPolygon.from_points(pts).with_area(1.0)
        except ValidationError:
            continue
        assert p.perimeter >= best - 1e-12


def test_polygon_file_round_trip():
    p = regular_mgon(7)
    q = parse_polygon(format_polygon(p))
    assert np.array_equal(p.vertices, q.vertices)
    with pytest.raises(ValidationError):
        parse_polygon("1 2\n3 4\n")
    cw = POLYGON_HEADER + "\n0 0\n0 1\n1 1\n1 0\n"
    with pytest.raises(ValidationError):
        parse_polygon(cw)


@settings(max_examples=60, deadline=None)
@given(convex_polygons())
def test_summary_invariants(p):
    g = p.summary()
    assert g.area == pytest.approx(abs(polygon_area(p.vertices)))
    assert g.area / g.perimeter <= g.inradius * (1 + 1e-9)
    assert g.inradius <= 2 * g.area / g.perimeter * (1 + 1e-9)
    assert 2 * g.inradius <= g.width * (1 + 1e-9)
    assert g.width <= g.diameter * (1 + 1e-12)


@settings(max_examples=60, deadline=None)
@given(convex_polygons(), st.floats(0.01, 0.99))
def test_inner_parallel_perimeter_bounds(p, frac):
    t = frac * p.inradius
    q = inner_parallel(p, t)
    if q is None:
        return
    assert q.perimeter <= p.perimeter * (1 + 1e-9)
    assert q.perimeter >= p.perimeter * (1 - t / p.inradius) - 1e-9


@settings(max_examples=60, deadline=None)
@given(convex_polygons(), st.floats(0.0, 3.0))
def test_steiner_formula(p, t):
    g = outer_parallel_summary(p, t)
    assert g.area == pytest.approx(p.area + t * p.perimeter + math.pi * t * t, rel=1e-14)


@settings(max_examples=40, deadline=None)
@given(convex_polygons(), convex_polygons(), convex_polygons())
def test_hausdorff_is_a_metric(p, q, r):
    assert hausdorff_distance(p, q) == hausdorff_distance(q, p)
    assert hausdorff_distance(p, r) <= hausdorff_distance(p, q) + hausdorff_distance(q, r) + 1e-12


@settings(max_examples=30, deadline=None)
@given(convex_polygons(), st.floats(0.1, 10.0))
def test_scaling_and_rigid_motions(p, s):
    assert p.scaled(s).area == pytest.approx(s * s * p.area)
    moved = p.rotated(0.7).translated((1.5, -2.0))
    assert moved.inradius == pytest.approx(p.inradius)
    assert moved.width == pytest.approx(p.width)
    assert p.reflected().area == pytest.approx(p.area)
