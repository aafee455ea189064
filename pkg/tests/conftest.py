import numpy as np
import pytest
from hypothesis import strategies as st

from shapelab.errors import ValidationError
from shapelab.geometry import ConvexPolygon


@st.composite
def convex_polygons(draw, min_points=3, max_points=12):
    """Convex hulls of random point clouds with a non-degenerate area."""
    n = draw(st.integers(min_points, max_points))
    coords = draw(st.lists(st.floats(-1.0, 1.0, allow_nan=False), min_size=2 * n, max_size=2 * n))
    pts = np.array(coords).reshape(n, 2)
    try:
        p = ConvexPolygon.from_points(pts)
    except ValidationError:
        p = None
    if p is None or p.area < 1e-2 or p.inradius < 2e-2:
        p = ConvexPolygon([[0, 0], [1, 0], [0.3, 0.8]])
    return p


_ACCEPTANCE_KEY = "shapelab_acceptance_lines"


@pytest.fixture
def acceptance(request):
    """Recorder for one-line acceptance verdicts, printed in the terminal summary."""
    lines = request.config.__dict__.setdefault(_ACCEPTANCE_KEY, [])

    def record(label, passed, detail):
        line = f"{label}: {'PASS' if passed else 'FAIL'}  {detail}"
        lines.append(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.__dict__.get(_ACCEPTANCE_KEY)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=_criterion_order):
            terminalreporter.write_line(line)


def _criterion_order(line):
    head = line.split(":", 1)[0].split()[-1]
    num = "".join(ch for ch in head if ch.isdigit())
    return (int(num) if num else 99, head)
