import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shapelab.errors import ContractError, ValidationError
from shapelab.riesz import RieszQuery
from shapelab.shape_opt import (
    FamilySpec,
    best_on_grid,
    calibrate_fem_level,
    convergence_study,
    eigenvalue_average,
    evaluate_candidate,
    minimize_sum,
    optimize,
    study_csv_header,
    sum_minimization_study,
)

from oracles import polygon_area, rectangle_grid_argmax, rectangle_riesz, rectangle_sum_average

RECT = FamilySpec("rectangles")


def test_family_parsing():
    assert FamilySpec.parse("rectangles") == RECT
    assert FamilySpec.parse("boxes:3") == FamilySpec("boxes", 3)
    assert FamilySpec.parse("mgon:5") == FamilySpec("polygons", 5)
    assert FamilySpec("polygons", 4).n_params == 4
    for bad in ("boxes", "polygons:2", "circles:3", "boxes:x"):
        with pytest.raises(ValidationError):
            FamilySpec.parse(bad)
    with pytest.raises(ValidationError):
        FamilySpec("rectangles", measure_normalized=False)


def test_evaluate_candidate_examples():
    assert evaluate_candidate(RECT, [1.0], RieszQuery(50, 1)).value == pytest.approx(31.5648, abs=1e-4)
    assert evaluate_candidate(RECT, [2.0], RieszQuery(50, 1)).value == pytest.approx(rectangle_riesz(2.0, 50), rel=1e-13)
    assert evaluate_candidate(RECT, [2.0], (50, 1)).value == pytest.approx(8.70616, abs=1e-5)
    two = FamilySpec("disk_unions", 2)
    q = RieszQuery(200, 1)
    assert evaluate_candidate(two, [1, 0], q).value > evaluate_candidate(two, [1, 1], q).value
    assert evaluate_candidate(RECT, [-0.0], q).value == -math.inf


@settings(max_examples=40, deadline=None)
@given(st.floats(0.2, 5.0), st.floats(20.0, 2000.0))
def test_rectangle_objective_matches_closed_form(a, lam):
    assert evaluate_candidate(RECT, [a], RieszQuery(lam, 1)).value == pytest.approx(rectangle_riesz(a, lam), rel=1e-11, abs=1e-9)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.2, 5.0), st.floats(20.0, 2000.0))
def test_rectangle_reflection_invariance(a, lam):
    q = RieszQuery(lam, 1)
    assert evaluate_candidate(RECT, [a], q).value == pytest.approx(evaluate_candidate(RECT, [1 / a], q).value, rel=1e-12, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(0.05, 3.0), min_size=3, max_size=3), st.floats(50.0, 1500.0))
def test_disk_union_order_invariance(z, lam):
    f = FamilySpec("disk_unions", 3)
    q = RieszQuery(lam, 1)
    a = evaluate_candidate(f, z, q).value
    assert a == pytest.approx(evaluate_candidate(f, z[::-1], q).value, rel=1e-12)
    assert a == pytest.approx(evaluate_candidate(f, [2 * v for v in z], q).value, rel=1e-12)
    assert a <= evaluate_candidate(f, [1, 0, 0], q).value + 1e-9


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(-3.0, 3.0), min_size=4, max_size=4))
def test_polygon_candidates_have_unit_area(xs):
    f = FamilySpec("polygons", 4)
    try:
        poly, penalty = f.polygon(xs)
    except ValidationError:
        return
    assert polygon_area(poly.vertices) == pytest.approx(1.0, rel=1e-12)
    assert penalty >= 0


@pytest.mark.parametrize("lam", [100.0, 1000.0, 3000.0])
def test_rectangle_optimum_matches_grid(lam):
    res = optimize(RECT, RieszQuery(lam, 1), budget=300)
    a_grid, v_grid = rectangle_grid_argmax(lam)
    assert res.objective.value >= v_grid - 1e-9 * v_grid
    assert res.best_params[0] >= 1.0
    assert res.evaluations <= 300


def test_optimize_validation():
    with pytest.raises(ValidationError):
        optimize(RECT, RieszQuery(100, 1), budget=50)
    with pytest.raises(ValidationError):
        optimize(RECT, RieszQuery(100, 0.5))


def test_optimize_deterministic_with_seed():
    f = FamilySpec("boxes", 3)
    a = optimize(f, RieszQuery(300, 1), budget=200, seed=7)
    b = optimize(f, RieszQuery(300, 1), budget=200, seed=7)
    assert np.array_equal(a.best_params, b.best_params) and a.objective == b.objective


def test_boxes_beat_reference_start():
    f = FamilySpec("boxes", 3)
    q = RieszQuery(300, 1)
    res = optimize(f, q, budget=300)
    assert res.objective.value >= evaluate_candidate(f, f.default_start(), q).value
    assert res.incumbents


@pytest.mark.parametrize("k", [2, 3])
def test_disk_union_prefers_single_disk(k):
    res = optimize(FamilySpec("disk_unions", k), RieszQuery(1000, 1), budget=300)
    assert res.distance_to_reference() < 0.01


def test_best_on_grid():
    grid = [[a] for a in np.arange(1.0, 2.0, 0.05)]
    idx, vals = best_on_grid(RECT, grid, RieszQuery(200, 1))
    assert vals[idx] == max(vals) and len(vals) == len(grid)


def test_eigenvalue_average_and_sum_minimization():
    assert eigenvalue_average(RECT, [1.0], 3).value == pytest.approx(4 * math.pi**2)
    assert eigenvalue_average(RECT, [1.7], 5).value == pytest.approx(rectangle_sum_average(1.7, 5), rel=1e-12)
    res = minimize_sum(RECT, 1, budget=200)
    assert res.best_params[0] == pytest.approx(1.0, abs=1e-3)
    assert res.objective.value == pytest.approx(2 * math.pi**2, rel=1e-6)


def test_study_rows_and_header():
    rows = convergence_study(RECT, 1.0, [100, 1000], budget=200)
    assert [r.key for r in rows] == [100.0, 1000.0]
    header = study_csv_header(RECT)
    assert len(rows[0].csv_row(RECT, 1.0)) == len(header)
    with pytest.raises(ContractError):
        convergence_study(RECT, 1.0, [1000, 100])
    rows = sum_minimization_study(RECT, [1, 5], budget=200)
    assert rows[0].distance_to_reference == pytest.approx(0.0, abs=1e-3)


def test_fem_level_calibration_small():
    f = FamilySpec("polygons", 3)
    level = calibrate_fem_level(f, 60.0)
    assert 2 <= level <= 7
