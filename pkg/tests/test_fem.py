import math

import numpy as np
import pytest

from shapelab.errors import AccuracyError, ValidationError
from shapelab.fem import (
    assemble,
    convergence_order,
    fem_solve,
    fem_spectrum,
    mesh_at_level,
    solve_level,
    triangulate,
)
from shapelab.geometry import ConvexPolygon, regular_mgon
from shapelab.spectra import box_spectrum, disk_spectrum
from shapelab.geometry import BoxDomain, DiskDomain

from oracles import box_eigenvalues, equilateral_eigenvalues

SQUARE = ConvexPolygon([[0, 0], [1, 0], [1, 1], [0, 1]])
TRIANGLE = regular_mgon(3, 1.0)


def test_triangulate_counts():
    assert len(triangulate(SQUARE, 0.5).triangles) == 16
    assert len(triangulate(SQUARE, 0.25).triangles) == 64
    hexagon = regular_mgon(6, 1.0)
    mesh = triangulate(hexagon, 0.1)
    k = mesh.level
    assert len(mesh.triangles) == 6 * 4**k
    assert mesh.h <= 0.1 < mesh_at_level(hexagon, k - 1).h
    with pytest.raises(ValidationError):
        triangulate(SQUARE, 0.6)


def test_mesh_invariants():
    p = ConvexPolygon([[0, 0], [2, 0], [1.6, 0.6], [0.2, 0.9]])
    mesh = mesh_at_level(p, 3)
    a, b, c = (mesh.nodes[mesh.triangles[:, i]] for i in range(3))
    signed = (b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0])
    assert np.all(signed > 0)
    bnd = mesh.nodes[mesh.boundary_flags]
    assert np.all(p.distance_to(bnd) <= 1e-12)
    normals, offsets = p._halfplanes()
    slack = np.min(np.abs(offsets[None, :] - bnd @ normals.T), axis=1)
    assert np.all(slack <= 1e-10 * p.diameter)
    assert mesh.min_angle_deg > 1.0 and not mesh.warnings
    rows = list(mesh.csv_rows())
    assert rows[0][0] == "node" and rows[-1][0] == "triangle"


def test_needle_polygon_warns():
    needle = ConvexPolygon([[0, 0], [50, 0], [50, 0.02], [0, 0.02]])
    assert mesh_at_level(needle, 0).warnings


def test_square_against_closed_form():
    s = fem_spectrum(SQUARE, 100, 0.005)
    ref = box_eigenvalues((1.0, 1.0), 100)
    assert len(s.eigenvalues) >= len(ref)
    assert np.all(np.abs(s.eigenvalues[:4] - ref[:4]) <= 0.005 * np.array(ref[:4]))
    assert s.source == "fem"
    assert np.all(s.error_bounds <= 0.005 * s.eigenvalues)


def test_equilateral_against_closed_form():
    s = fem_spectrum(TRIANGLE, 60, 0.01)
    lam1 = 4 * math.pi**2 / math.sqrt(3)
    assert equilateral_eigenvalues(1.0, 60)[0] == pytest.approx(lam1)
    assert abs(s.eigenvalues[0] - lam1) <= 0.01 * lam1


def test_64gon_approximates_disk():
    s = fem_spectrum(regular_mgon(64, 1.0), 40, 0.01)
    ref = disk_spectrum(DiskDomain.with_area(1.0), 40).eigenvalues[0]
    assert abs(s.eigenvalues[0] - ref) <= 0.015 * ref


def test_convergence_order_square():
    order, vals = convergence_order(SQUARE, [3, 4, 5])
    assert 1.8 <= order <= 2.2
    # conforming elements overestimate at every level
    assert all(v >= 2 * math.pi**2 for v in vals)
    errs = [v - 2 * math.pi**2 for v in vals]
    assert 3.5 <= errs[0] / errs[1] <= 4.5 and 3.5 <= errs[1] / errs[2] <= 4.5


def test_domain_monotonicity():
    inner = ConvexPolygon([[0.1, 0.1], [0.9, 0.1], [0.9, 0.9], [0.1, 0.9]])
    _, w_in, _ = solve_level(inner, 4, 100)
    _, w_out, _ = solve_level(SQUARE, 4, 100)
    assert w_in[0] >= w_out[0]


def test_scaling_law():
    a = fem_spectrum(SQUARE, 150, 0.01)
    b = fem_spectrum(SQUARE.scaled(2.0), 150 / 4, 0.01)
    n = len(b.eigenvalues)
    tol = a.error_bounds[:n] + 4 * b.error_bounds[:n] + 1e-9
    assert np.all(np.abs(a.eigenvalues[:n] - 4 * b.eigenvalues) <= tol)


def test_completeness_margin():
    # every closed-form eigenvalue below lambda has a counterpart
    s = fem_spectrum(SQUARE, 200, 0.01)
    exact = box_spectrum(BoxDomain((1.0, 1.0)), 200)
    assert len(s.eigenvalues) >= len(exact)


def test_report_fields():
    rep = fem_solve(SQUARE, 60, 4)
    assert rep.levels == (4, 5)
    assert np.all(rep.residual_norms < 1e-6)
    assert np.all(np.diff(rep.extrapolated) >= 0)
    assert rep.extrapolated[0] == pytest.approx(2 * math.pi**2, rel=1e-3)


def test_tolerance_validation_and_accuracy_error():
    with pytest.raises(ValidationError):
        fem_spectrum(SQUARE, 50, 0.2)
    with pytest.raises(AccuracyError):
        fem_spectrum(SQUARE, 400, 1e-6, max_nodes=2000)


def test_assembly_symmetry():
    K, M = assemble(mesh_at_level(SQUARE, 2))
    assert abs(K - K.T).max() < 1e-14
    assert abs(M - M.T).max() < 1e-14
    # eliminating the boundary nodes leaves both matrices positive definite
    assert np.all(np.linalg.eigvalsh(K.toarray()) > 0)
    assert np.all(np.linalg.eigvalsh(M.toarray()) > 0)
