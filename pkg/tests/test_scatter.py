import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nonscat.errors import SolverDiverged, SourceInsideNeighborhood, WavelengthUnderResolved
from nonscat.fields import eckmann_pillet, helmholtz_residual, plane_wave
from nonscat.geometry import Disk, Rectangle
from nonscat.media import constant_medium
from nonscat.scatter import (INCONCLUSIVE, NON_SCATTERING, SCATTERING, PointSource, SolverConfig,
                             assemble_and_solve, classify_refinement, nested_dissection, refinement_study,
                             resolved_h_list)

DISK = constant_medium(Disk(0.0, 0.0, 0.5), 2.0)


def test_background_medium_does_not_scatter():
    med = constant_medium(Rectangle(0, 1, 0, 1), 1.0, 1.0)
    st_ = refinement_study(med, plane_wave(3.0, (0.6, 0.8)), 3.0, [1 / 10, 1 / 20])
    assert st_.verdict == NON_SCATTERING
    assert all(r.rel_scatter == 0.0 for r in st_.table)


def test_penetrable_disk_scatters():
    r = assemble_and_solve(DISK, plane_wave(4.0), 4.0, SolverConfig(h=1 / 20))
    assert r.rel_scatter > 1e-2
    assert r.info["residual"] < 1e-8


def test_layer_width_insensitivity():
    a = assemble_and_solve(DISK, plane_wave(4.0), 4.0, SolverConfig(h=1 / 20))
    b = assemble_and_solve(DISK, plane_wave(4.0), 4.0, SolverConfig(h=1 / 20, layer=1.0))
    assert abs(a.rel_scatter - b.rel_scatter) < 0.1 * a.rel_scatter


def test_point_source_incident():
    src = PointSource((2.0, 0.3), 4.0, neighborhood=Disk(0, 0, 0.5))
    p = np.random.default_rng(0).uniform(-1, 1, (100, 2))
    assert np.max(np.abs(helmholtz_residual(src, p))) < 1e-9
    r = assemble_and_solve(DISK, src, 4.0, SolverConfig(h=1 / 20))
    assert r.rel_scatter > 1e-2


def test_point_source_inside_neighbourhood():
    with pytest.raises(SourceInsideNeighborhood):
        PointSource((0.1, 0.0), 4.0, neighborhood=Disk(0, 0, 0.5))


def test_branch_cut_through_support():
    with pytest.raises(SourceInsideNeighborhood):
        assemble_and_solve(constant_medium(Disk(0, 0, 1.5), 2.0), eckmann_pillet(1.5, 3, 0.6), 4.49,
                           SolverConfig(h=1 / 10))


def test_under_resolved():
    with pytest.raises(WavelengthUnderResolved):
        assemble_and_solve(DISK, plane_wave(40.0), 40.0, SolverConfig(h=1 / 10))


def test_unknown_budget():
    with pytest.raises(SolverDiverged):
        assemble_and_solve(DISK, plane_wave(1.0), 1.0, SolverConfig(h=1 / 20, max_unknowns=100))


def test_field_csv():
    r = assemble_and_solve(DISK, plane_wave(2.0), 2.0, SolverConfig(h=1 / 10))
    lines = r.field_csv().splitlines()
    assert lines[0] == "x,y,Re,Im"
    assert len(lines) == 1 + r.us.size


@pytest.mark.parametrize("rels, verdict", [
    ([1e-14, 2e-14, 1e-14], NON_SCATTERING),
    ([4e-3, 1e-3, 2.5e-4], NON_SCATTERING),
    ([4e-3, 3e-3, 2.5e-3], INCONCLUSIVE),
    ([0.09, 0.0895, 0.0896], SCATTERING),
    ([4e-2, 2e-2, 1e-2], INCONCLUSIVE),
    ([1.6e-3, 1.13e-3, 8e-4], INCONCLUSIVE),
])
def test_classify(rels, verdict):
    assert classify_refinement(rels)[0] == verdict


def test_orders_use_actual_ratios():
    _, orders = classify_refinement([1.5e-3, 1e-3], hs=[1 / 96, 1 / 144])
    assert abs(orders[0] - 1.0) < 1e-12


@settings(max_examples=25, deadline=None)
@given(nx=st.integers(1, 60), ny=st.integers(1, 60))
def test_nested_dissection_is_a_permutation(nx, ny):
    p = nested_dissection(nx, ny)
    assert np.array_equal(np.sort(p), np.arange(nx * ny))


def test_resolved_ladder():
    assert resolved_h_list(DISK, 1.0) == [1 / 20, 1 / 40, 1 / 80]
    hs = resolved_h_list(DISK, 60.0)
    assert hs[0] < 1 / 20 and hs[2] == hs[0] / 2
