import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nonscat.errors import DegenerateCurve
from nonscat.geometry import (Disk, PlanarCurve, PolygonDomain, Rectangle, Sector, curves_to_svg, domain_from_dict,
                              shoelace_area)

DOMAINS = [Rectangle(0.0, 1.0, 0.0, 2.0), Disk(0.5, -0.5, 1.5), Sector(math.pi / 3, 2.0), Sector(1.0, 1.0)]


def test_shoelace_unit_square():
    assert shoelace_area(np.array([[0, 0], [1, 0], [1, 1], [0, 1]], float)) == 1.0


@pytest.mark.parametrize("dom", DOMAINS)
def test_samples_inside(dom):
    p = dom.sample_interior(500, seed=3)
    assert p.shape == (500, 2)
    assert dom.contains(p).all()
    assert np.array_equal(p, dom.sample_interior(500, seed=3))


@pytest.mark.parametrize("dom", DOMAINS)
def test_boundary_normals_are_unit_and_outward(dom):
    pts, nrm = dom.boundary(200)
    assert np.allclose(np.linalg.norm(nrm, axis=1), 1.0)
    assert not dom.contains(pts + 1e-6 * nrm).any()


def test_rectangle_corners_carry_both_normals():
    pts, nrm = Rectangle(-1, 1, -1, 1).boundary(40)
    at = np.all(np.isclose(pts, [1.0, 1.0]), axis=1)
    ns = {tuple(np.round(n, 12)) for n in nrm[at]}
    assert ns == {(1.0, 0.0), (0.0, 1.0)}


def test_polygon_domain_matches_rectangle():
    poly = PolygonDomain(Rectangle(0, 1, 0, 1).boundary_curve(40))
    assert abs(poly.curve.area() - 1.0) < 1e-12
    assert poly.contains(np.array([[0.5, 0.5]]))[0] and not poly.contains(np.array([[1.5, 0.5]]))[0]


@settings(max_examples=25, deadline=None)
@given(r=st.floats(0.1, 5.0), n=st.integers(16, 400))
def test_circle_polyline_area(r, n):
    th = 2 * np.pi * np.arange(n) / n
    c = PlanarCurve(r * np.column_stack([np.cos(th), np.sin(th)]), closed=True)
    assert abs(c.area() - 0.5 * n * r * r * math.sin(2 * math.pi / n)) < 1e-9 * r * r


def test_degenerate_curve_rejected():
    with pytest.raises(DegenerateCurve):
        PlanarCurve(np.array([[0.0, 0.0], [0.0, 0.0], [1.0, 0.0]]), closed=False).normals()


def test_domain_dict_round_trip():
    for dom in DOMAINS:
        again = domain_from_dict(dom.to_dict())
        p = dom.sample_interior(50)
        assert again.contains(p).all()


def test_svg_contains_path():
    svg = curves_to_svg([Rectangle(0, 1, 0, 1).boundary_curve(8)])
    assert svg.startswith("<svg") and "<polygon" in svg
