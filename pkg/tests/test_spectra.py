import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special

from shapelab.bessel import bessel_j, bessel_zero_table, bessel_zeros_below
from shapelab.errors import ContractError, ResourceError, ValidationError
from shapelab.geometry import BoxDomain, DiskDomain
from shapelab.spectra import Spectrum, box_spectrum, disk_spectrum, scale_spectrum, union_spectrum

from oracles import box_eigenvalues, disk_eigenvalues, square_count

SQUARE = BoxDomain((1.0, 1.0))
UNIT_DISK = DiskDomain.with_area(1.0)
PI2 = math.pi**2


def test_box_examples():
    ev = box_spectrum(SQUARE, 50).eigenvalues
    assert ev == pytest.approx([2 * PI2, 5 * PI2, 5 * PI2])
    assert len(box_spectrum(SQUARE, 10)) == 0
    # (2, 0.5) also has pi^2 (4 + 1)/... = 5 pi^2 ~ 49.35 below 50
    ev = box_spectrum(BoxDomain((2.0, 0.5)), 50).eigenvalues
    assert ev == pytest.approx(box_eigenvalues((2.0, 0.5), 50))
    assert ev[0] == pytest.approx(PI2 * (0.25 + 4))


def test_box_strict_threshold():
    assert len(box_spectrum(SQUARE, 2 * PI2)) == 0
    assert len(box_spectrum(SQUARE, 2 * PI2 * (1 + 1e-12))) == 1


def test_box_enumeration_cap():
    with pytest.raises(ResourceError):
        box_spectrum(SQUARE, 1e6, cap=1000)


@pytest.mark.parametrize("sides", [(1.0,), (1.0, 1.0), (2.0, 0.5), (3.0, 1.0, 1 / 3), (1.0, 1.3, 0.7, 1.1)])
@pytest.mark.parametrize("lam", [30.0, 300.0, 2000.0])
def test_box_matches_nested_loop(sides, lam):
    assert box_spectrum(BoxDomain(sides), lam).eigenvalues == pytest.approx(box_eigenvalues(sides, lam), rel=1e-14)


def test_square_count_matches_double_loop():
    s = box_spectrum(SQUARE, 1e4)
    for lam in np.linspace(1.0, 1e4, 301):
        assert s.count(lam) == square_count(lam)


def test_bessel_values_against_scipy():
    x = np.linspace(0.01, 80, 500)
    for n in (0, 1, 2, 5, 17, 40):
        assert np.allclose(bessel_j(n, x), special.jv(n, x), atol=1e-13, rtol=1e-11)


def test_bessel_zero_examples():
    assert bessel_zeros_below(0, 10)[0] == pytest.approx(2.404825557695773, abs=1e-13)
    assert bessel_zeros_below(1, 4)[0] == pytest.approx(3.831705970207512, abs=1e-13)
    assert len(bessel_zeros_below(0, 2.0)) == 0


def test_bessel_zero_table_against_scipy():
    table = bessel_zero_table(60.0)
    for nu, zs in table.items():
        ref = special.jn_zeros(nu, len(zs))
        assert zs == pytest.approx(ref, rel=1e-13)
        # completeness: the next zero is beyond the range
        assert special.jn_zeros(nu, len(zs) + 1)[-1] >= 60.0
    assert max(table) + 1 >= 60 or special.jn_zeros(max(table) + 1, 1)[0] >= 60.0


def test_disk_examples():
    ev = disk_spectrum(UNIT_DISK, 50).eigenvalues
    assert ev[0] == pytest.approx(math.pi * 2.404825557695773**2, rel=1e-12)
    assert ev[0] == pytest.approx(18.1684, abs=1e-4)
    assert ev[1] == ev[2] == pytest.approx(math.pi * 3.831705970207512**2, rel=1e-12)
    assert ev[1] == pytest.approx(46.1246, abs=5e-4)
    assert len(disk_spectrum(DiskDomain(1.0), 5)) == 0


@pytest.mark.parametrize("radius,lam", [(1.0, 500.0), (1 / math.sqrt(math.pi), 3000.0), (0.25, 2e4)])
def test_disk_matches_bisection_oracle(radius, lam):
    ours = disk_spectrum(DiskDomain(radius), lam).eigenvalues
    ref = disk_eigenvalues(radius, lam)
    assert len(ours) == len(ref)
    assert ours == pytest.approx(ref, rel=1e-12)


def test_disk_weyl_leading_order():
    n = disk_spectrum(UNIT_DISK, 1e4).count(1e4)
    assert abs(n * 4 * math.pi / 1e4 - 1) < 0.05


def test_union_and_scale():
    s = box_spectrum(SQUARE, 200)
    assert union_spectrum([s]) is s
    two = union_spectrum([s, s])
    assert two.eigenvalues == pytest.approx(np.repeat(s.eigenvalues, 2))
    d = disk_spectrum(UNIT_DISK, 150)
    mixed = union_spectrum([s, d])
    assert mixed.complete_below == 150
    assert mixed.eigenvalues == pytest.approx(np.sort(np.concatenate([s.eigenvalues, d.eigenvalues])))
    assert scale_spectrum(s, 2).eigenvalues[0] == pytest.approx(2 * PI2 / 4)
    r1 = scale_spectrum(disk_spectrum(UNIT_DISK, 40), math.sqrt(math.pi))
    assert r1.eigenvalues[0] == pytest.approx(disk_spectrum(DiskDomain(1.0), 10).eigenvalues[0], rel=1e-13)
    assert r1.eigenvalues[0] == pytest.approx(5.78319, abs=1e-5)


def test_spectrum_validation_and_contracts():
    with pytest.raises(ValidationError):
        Spectrum([2.0, 1.0], 10)
    with pytest.raises(ValidationError):
        Spectrum([-1.0], 10)
    with pytest.raises(ValidationError):
        Spectrum([1.0], 10, error_bounds=[-0.1])
    s = Spectrum([1.0, 2.0], 5.0)
    with pytest.raises(ContractError):
        s.count(6.0)
    with pytest.raises(ValueError):
        s.eigenvalues[0] = 3.0
    assert list(s.csv_rows()) == [(1, 1.0, 0.0), (2, 2.0, 0.0)]


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(0.3, 3.0), min_size=1, max_size=3), st.floats(20.0, 800.0))
def test_box_property_against_loop(sides, lam):
    assert box_spectrum(BoxDomain(tuple(sides)), lam).eigenvalues == pytest.approx(box_eigenvalues(sides, lam), rel=1e-13)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.2, 5.0), st.floats(10.0, 500.0))
def test_scale_round_trip(t, lam):
    s = box_spectrum(BoxDomain((1.0, 1.7)), lam)
    back = scale_spectrum(scale_spectrum(s, t), 1 / t)
    assert back.eigenvalues == pytest.approx(s.eigenvalues, rel=1e-14)
    assert back.complete_below == pytest.approx(s.complete_below, rel=1e-14)


@settings(max_examples=40, deadline=None)
@given(st.floats(1.0, 300.0))
def test_union_count_additive(lam):
    a = box_spectrum(SQUARE, 300)
    b = disk_spectrum(UNIT_DISK, 300)
    assert union_spectrum([a, b]).count(lam) == a.count(lam) + b.count(lam)
