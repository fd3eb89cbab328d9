import math

import numpy as np
import pytest

from nonscat.errors import SeedNotOnCurve
from nonscat.fields import bessel_wave, eckmann_pillet, sin_sin
from nonscat.nodal import (NEGATIVE, POSITIVE, assemble_dirichlet_domain, certify_signs, corner_angle_check,
                           find_critical_points, seed_on_segment, trace_fidelity, trace_nodal, winding_number)
from scipy.special import jn_zeros

from nonscat.geometry import PlanarCurve


def test_bessel_zero_nodal_line_is_a_circle():
    k = 3.0
    f = bessel_wave(0.0, k)
    r0 = jn_zeros(0, 1)[0] / k
    c = trace_nodal(f, seed_on_segment(f, (0.1, 0.0), (1.2, 0.0)), 1e-2)
    assert c.closed
    assert np.max(np.abs(np.linalg.norm(c.vertices, axis=1) - r0)) < 1e-10
    assert abs(abs(c.area()) - math.pi * r0 ** 2) < 1e-3
    assert abs(winding_number(c, (0.0, 0.0))) == 1
    assert winding_number(c, (2.0, 2.0)) == 0
    vmax, ang = trace_fidelity(f, c)
    assert vmax < 1e-12 and ang < 1e-3


def test_seed_requires_sign_change():
    with pytest.raises(SeedNotOnCurve):
        seed_on_segment(bessel_wave(0.0, 3.0), (0.0, 0.0), (0.1, 0.0))


def test_sign_certificate_cells_are_sound():
    f = eckmann_pillet(1.5, 3, 0.6)
    cert = certify_signs(f, (-0.6, 0.6, -0.6, 0.6), 0.02)
    for label, sign in ((POSITIVE, 1), (NEGATIVE, -1)):
        lower = cert.cells(label)
        assert len(lower)
        rng = np.random.default_rng(0)
        pts = lower + cert.h * rng.uniform(0, 1, lower.shape)
        for term in f.terms():
            assert np.all(sign * np.real(term.jet(pts, strict=False)[0]) > 0)


def test_sin_sin_crossings_have_order_two():
    f = sin_sin(1.0, 1.0)
    cps = [cp for cp in find_critical_points(f, (-0.5, 3.6, -0.5, 3.6)) if cp.order]
    locs = sorted(tuple(np.round(cp.location, 8)) for cp in cps)
    assert (0.0, 0.0) in [tuple(abs(x) for x in l) for l in locs]
    for cp in cps:
        assert cp.order == 2
        chk = corner_angle_check(cp, f)
        assert chk["max_deviation"] < 1e-6
        assert chk["kappa"] == [1, 1, 1, 1]


def test_square_nodal_domain_from_arcs():
    f = sin_sin(1.0, 1.0)
    stops = [(0.0, 0.0), (math.pi, 0.0), (math.pi, math.pi), (0.0, math.pi)]
    arcs = []
    for a, b in zip(stops, stops[1:] + stops[:1]):
        arcs.append(PlanarCurve(np.linspace(a, b, 50), False))
    boundary, area = assemble_dirichlet_domain(arcs)
    assert abs(area - math.pi ** 2) < 1e-9
    assert len(boundary.corner_tags) == 4
