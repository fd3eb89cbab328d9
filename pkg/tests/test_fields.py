import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nonscat.errors import BranchCutHit, WavenumberMismatch
from nonscat.fields import (PlaneWaves, TrigProducts, TrigTerm, bessel_wave, combine, cos_cos, cut_jump_probe,
                            eckmann_pillet, field_from_dict, grid_csv, helmholtz_residual, neg_cos_sum,
                            plane_wave, sine_product_planewaves)

pts_strategy = st.lists(st.tuples(st.floats(-2, 2), st.floats(-2, 2)), min_size=1, max_size=20)


def test_sine_product_identity():
    f = sine_product_planewaves()
    p = np.random.default_rng(0).uniform(0, 1, (200, 2))
    v = f.jet(p)[0]
    assert np.max(np.abs(v - 4 * np.sin(np.pi * p[:, 0]) * np.sin(np.pi * p[:, 1]))) < 1e-13
    assert abs(f.k - math.pi * math.sqrt(2)) < 1e-15


def test_neg_cos_sum_wavenumber_is_one():
    f = neg_cos_sum()
    assert f.k == 1.0
    p = np.random.default_rng(1).uniform(-3, 3, (100, 2))
    assert np.max(np.abs(helmholtz_residual(f, p))) < 1e-13


@settings(max_examples=30, deadline=None)
@given(pts=pts_strategy, theta=st.floats(0, 2 * math.pi), k=st.floats(0.1, 20))
def test_plane_wave_jet(pts, theta, k):
    d = (math.cos(theta), math.sin(theta))
    f = plane_wave(k, d)
    p = np.asarray(pts)
    v, g, H = f.jet(p)
    ref = np.exp(1j * k * (p @ np.asarray(d)))
    assert np.allclose(v, ref, atol=1e-12)
    assert np.allclose(g, 1j * k * ref[:, None] * np.asarray(d)[None, :], atol=1e-10 * k)
    assert np.allclose(H[:, 0, 0] + H[:, 1, 1], -k * k * v, atol=1e-9 * k * k)


@settings(max_examples=20, deadline=None)
@given(pts=pts_strategy)
def test_bessel_sum_solves_helmholtz(pts):
    f = eckmann_pillet(2.5, 3, 0.6)
    p = np.asarray(pts) + 1e-3
    from nonscat.fields import cut_distance

    p = p[cut_distance(f.cuts, p) > 1e-6]
    if len(p):
        assert np.max(np.abs(helmholtz_residual(f, p))) < 1e-9


def test_strict_evaluation_on_cut_raises():
    f = eckmann_pillet(1.5, 3, 0.6)
    ray = f.cuts[0]
    p = np.asarray(ray.origin) + 0.2 * np.asarray(ray.direction)
    with pytest.raises(BranchCutHit):
        f.jet(p[None, :])
    assert np.isfinite(f.jet(p[None, :], strict=False)[0]).all()


def test_integer_order_has_no_cuts():
    assert not eckmann_pillet(1.0, 2, 0.55).cuts


def test_cut_probe_sees_derivative_jump():
    pr = cut_jump_probe(eckmann_pillet(1.5, 3, 0.6), 0, 0.5)
    assert abs(pr["value_jump"]) < 1e-10
    assert abs(pr["normal_derivative_jump"]) > 1.0


def test_combination_requires_common_wavenumber():
    with pytest.raises(WavenumberMismatch):
        combine([plane_wave(1.0), plane_wave(2.0)], [1.0, 1.0])


def test_trig_term_mismatch():
    with pytest.raises(WavenumberMismatch):
        TrigProducts(1.0, (TrigTerm(1.0, "cos", 1.0, 0.0, "cos", 1.0, 0.0),))


def test_distinct_orders_need_explicit_k():
    with pytest.raises(ValueError):
        eckmann_pillet([1.5, 2.5], 2, 0.5)


@pytest.mark.parametrize("f", [sine_product_planewaves(), cos_cos(1, 2), eckmann_pillet(1.5, 3, 0.6),
                               bessel_wave(0.0, 2.0)])
def test_dict_round_trip(f):
    g = field_from_dict(json.loads(json.dumps(f.to_dict())))
    p = np.array([[0.3, 0.41], [-0.2, 0.77]])
    assert np.allclose(f.jet(p)[0], g.jet(p)[0], atol=1e-14)


def test_grid_csv_header_and_rows():
    text = grid_csv(cos_cos(1, 2), np.linspace(0, 1, 3), np.linspace(0, 1, 4))
    lines = text.strip().splitlines()
    assert lines[0] == "x,y,value,gx,gy"
    assert len(lines) == 13


def test_rejects_nonpositive_k():
    with pytest.raises(ValueError):
        PlaneWaves(-1.0, ((1.0, 0.0),), (1.0,))
