import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nonscat.errors import CannotSatisfyJacobianBound, ConditionSetViolated
from nonscat.fields import plane_wave
from nonscat.geometry import Disk, Rectangle
from nonscat.media import (adiag_condition_set, adiag_square, build_explicit_example, build_transform_medium,
                           bump_map, check_structural_identities, constant_medium, disk_closed_form, disk_diffeo,
                           medium_from_dict, pulled_field_report, rank_deficient, slab, small_perturb_diffeo,
                           square_closed_form, square_diffeo)
from nonscat.spectra import verify_itep


@settings(max_examples=30, deadline=None)
@given(alpha=st.floats(-0.49, 0.49), x=st.floats(-1, 1), y=st.floats(-1, 1))
def test_square_inverse_round_trip(alpha, x, y):
    psi = square_diffeo(alpha)
    p = np.array([[x, y]])
    assert np.allclose(psi.invert(psi.forward(p)), p, atol=1e-12)


@pytest.mark.parametrize("alpha", [-0.5, 0.5, 0.7])
def test_square_alpha_range(alpha):
    with pytest.raises(ValueError):
        square_diffeo(alpha)


@pytest.mark.parametrize("alpha", [0.1, 0.3, 0.49])
def test_square_medium_matches_closed_form(alpha):
    med = build_transform_medium(square_diffeo(alpha))
    pre = Rectangle(-1, 1, -1, 1).sample_interior(300, seed=2)
    A_ref, q_ref = square_closed_form(alpha, pre)
    y = med.psi.forward(pre)
    assert np.max(np.abs(med.A(y) - A_ref)) < 1e-10
    assert np.max(np.abs(med.q(y) - q_ref)) < 1e-10


def test_disk_medium_matches_closed_form():
    med = build_transform_medium(disk_diffeo())
    pre = Disk(0, 0, 1).sample_interior(300, seed=2)
    y = med.psi.forward(pre)
    # the closed form is written in physical coordinates and the map preserves area
    assert np.max(np.abs(med.A(y) - disk_closed_form(y))) < 1e-10
    assert np.max(np.abs(med.q(y) - 1.0)) < 1e-12


def test_structural_identities():
    for med in (build_transform_medium(square_diffeo(0.3)), build_transform_medium(disk_diffeo())):
        s = check_structural_identities(med)
        assert s["detLaw"] < 1e-10 and s["boundaryNu"] < 1e-8


def test_pulled_field_solves_medium_equation():
    med = build_transform_medium(square_diffeo(0.3))
    rep = pulled_field_report(med, plane_wave(2.0, (0.6, 0.8)))
    assert rep["pde"] < 1e-6 and rep["boundary_value"] < 1e-12


def test_constant_medium_assumptions():
    med = constant_medium(Rectangle(0, 1, 0, 1), 2.0)
    assert med.check_assumptions()["ok"]
    assert med.A_full(np.array([[5.0, 5.0]]))[0].tolist() == [[1.0, 0.0], [0.0, 1.0]]


def test_bump_perturbation_halves_eps():
    phi, dphi = bump_map(amplitude=20.0)
    psi = small_perturb_diffeo(phi, dphi, 1.0, Disk(0, 0, 1))
    assert psi.params["eps"] < 1.0 and psi.params["requested_eps"] == 1.0
    assert psi.check()["min_det"] > 0.5


def test_perturbation_gives_up():
    phi, dphi = bump_map(amplitude=1e9)
    with pytest.raises(CannotSatisfyJacobianBound):
        small_perturb_diffeo(phi, dphi, 1.0, Disk(0, 0, 1), max_halvings=3)


def test_condition_sets():
    assert adiag_condition_set(2.0, 4.0, 3.0, 1, 1) == 1
    assert adiag_condition_set(1.0, 4.0, 3.0, 1, 1) == 2
    assert adiag_condition_set(4.0, 1.0, 3.0, 1, 1) == 3
    with pytest.raises(ConditionSetViolated):
        adiag_condition_set(2.0, 5.0, 3.0, 1, 1)
    with pytest.raises(ConditionSetViolated):
        adiag_condition_set(1.0, 0.5, 3.0, 1, 1)


def test_rank_deficient_requires_orthogonal():
    with pytest.raises(ConditionSetViolated):
        rank_deficient(np.array([[1.0, 1.0], [0.0, 1.0]]))


@pytest.mark.parametrize("m", [1, 4])
def test_slab_pairs(m):
    ex = slab(0.0, 1.0, 2.0, 3.0)
    k, u, v = ex.generator(m)
    assert verify_itep(ex.medium, k, u, v, n_interior=2000, n_boundary=400).verdict


def test_explicit_registry_and_dict():
    ex = build_explicit_example("AdiagSquare", {"a1": 2.0, "a2": 4.0, "q0": 3.0})
    med = medium_from_dict({"kind": "explicit", "name": "adiag-square", "params": {"a1": 2.0, "a2": 4.0, "q0": 3.0}})
    p = np.array([[0.2, 0.3]])
    assert np.allclose(ex.medium.A(p), med.A(p))
    again = medium_from_dict({"kind": "square-diffeo", "alpha": 0.2})
    assert json.loads(again.to_json())["params"]["alpha"] == 0.2


def test_medium_csv():
    text = constant_medium(Rectangle(0, 1, 0, 1), 2.0).to_csv(np.linspace(0, 1, 3), np.linspace(0, 1, 3))
    assert text.splitlines()[0].startswith("x,y")
    assert len(text.strip().splitlines()) == 10
