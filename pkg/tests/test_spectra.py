import math

import numpy as np
import pytest

from nonscat.errors import BcNotSatisfiedOnAxis, DomainNotClosed
from nonscat.fields import eckmann_pillet, plane_wave, sine_product_planewaves
from nonscat.geometry import Disk, PlanarCurve, PolygonDomain, Rectangle, Sector
from nonscat.media import constant_medium
from nonscat.spectra import (CavityProblem, cavity_from_itep, extendable_into, itep_from_cavity,
                             rectangle_eigenfunction, reflect_extend, sector_eigenfunction, sector_spectrum,
                             sector_verdict, verify_cavity_eigenpair, verify_itep)

# frozen: first zero of J_2
K_QUARTER_DISK = 5.135622301840683


def test_unit_square_dirichlet_pair():
    f = sine_product_planewaves()
    r = verify_cavity_eigenpair(CavityProblem(Rectangle(0, 1, 0, 1), "dirichlet", f.k), f)
    assert r.verdict and r.pde_residual < 1e-10 and r.bc_residual < 1e-10


def test_wrong_wavenumber_fails():
    f = sine_product_planewaves()
    r = verify_cavity_eigenpair(CavityProblem(Rectangle(0, 1, 0, 1), "dirichlet", 4.0), f)
    assert not r.verdict


def test_neumann_pair_on_rectangle():
    rect = Rectangle(-1.0, 2.0, 0.0, 0.7)
    w, k = rectangle_eigenfunction(2, 1, rect, "neumann")
    assert verify_cavity_eigenpair(CavityProblem(rect, "neumann", k), w).verdict
    assert not verify_cavity_eigenpair(CavityProblem(rect, "dirichlet", k), w).verdict


def test_report_is_deterministic_json():
    f = sine_product_planewaves()
    p = CavityProblem(Rectangle(0, 1, 0, 1), "dirichlet", f.k)
    assert verify_cavity_eigenpair(p, f).to_json() == verify_cavity_eigenpair(p, f).to_json()


def test_open_boundary_rejected():
    with pytest.raises(DomainNotClosed):
        CavityProblem(PolygonDomain(PlanarCurve(np.array([[0, 0], [1, 0], [1, 1], [0, 1.0]]), False)), "neumann", 1.0)


@pytest.mark.parametrize("a", [0.0, 1.0, -2.0])
def test_itep_contrast_guard(a):
    w, _ = rectangle_eigenfunction(1, 1, Rectangle(0, 1, 0, 1))
    with pytest.raises(ValueError):
        itep_from_cavity(w, "dirichlet", a)


@pytest.mark.parametrize("bc", ["dirichlet", "neumann"])
@pytest.mark.parametrize("a", [0.3, 2.0, 7.0])
def test_itep_round_trip(bc, a):
    rect = Rectangle(0.0, 1.0, 0.0, 1.5)
    w, k = rectangle_eigenfunction(2, 3, rect, bc)
    u, v = itep_from_cavity(w, bc, a)
    r = verify_itep(constant_medium(rect, a), k, u, v, n_interior=2000, n_boundary=400)
    assert r.verdict
    wd, wn = cavity_from_itep(u, v, a)
    p = rect.sample_interior(200)
    nontrivial = wd if bc == "dirichlet" else wn
    trivial = wn if bc == "dirichlet" else wd
    assert np.max(np.abs(trivial.jet(p)[0])) < 1e-12
    assert verify_cavity_eigenpair(CavityProblem(rect, bc, k), nontrivial, 2000, 400).verdict


def test_itep_detects_wrong_medium():
    rect = Rectangle(0.0, 1.0, 0.0, 1.0)
    w, k = rectangle_eigenfunction(1, 1, rect)
    u, v = itep_from_cavity(w, "dirichlet", 2.0)
    assert not verify_itep(constant_medium(rect, 3.0), k, u, v, n_interior=1000, n_boundary=200).verdict


def test_quarter_disk_first_eigenvalue():
    e = [x for x in sector_spectrum(math.pi / 2, 1.0) if x.m == 1][0]
    assert abs(e.k - K_QUARTER_DISK) < 1e-12 and e.extendable


def test_sector_spectrum_sorted_and_scaled():
    s1 = sector_spectrum(1.0, 1.0, count=8)
    s2 = sector_spectrum(1.0, 2.0, count=8)
    assert all(a.k <= b.k for a, b in zip(s1, s1[1:]))
    assert np.allclose([e.k / 2 for e in s1], [e.k for e in s2])


def test_sector_verdicts():
    assert sector_verdict(math.pi / 4, 1.0)["all_extendable"]
    v = sector_verdict(1.0, 1.0)
    assert not v["any_extendable"] and not v["alpha_in_pi_over_N"]


def test_sector_eigenfunction_is_an_eigenpair():
    e = sector_spectrum(math.pi / 3, 1.0, count=3)[1]
    w = sector_eigenfunction(e, "dirichlet")
    assert verify_cavity_eigenpair(CavityProblem(Sector(math.pi / 3, 1.0), "dirichlet", e.k), w, 2000, 400).verdict


def test_extendable_into():
    f = eckmann_pillet(1.5, 3, 0.6)
    assert extendable_into(f, Disk(0.0, 0.0, 0.2))
    assert not extendable_into(f, Disk(0.0, 0.0, 3.0))
    assert extendable_into(plane_wave(1.0), Disk(0.0, 0.0, 100.0))


def test_reflect_extend_odd():
    rect = Rectangle(0.0, 1.0, 0.0, 1.0)
    w, k = rectangle_eigenfunction(1, 1, rect)
    r = reflect_extend(w, ("y", 0.0), "dirichlet", (0.0, 1.0))
    p = np.array([[0.3, -0.2], [0.7, 0.4]])
    assert np.allclose(r.jet(p)[0], w.jet(p)[0], atol=1e-14)
    with pytest.raises(BcNotSatisfiedOnAxis):
        reflect_extend(w, ("y", 0.5), "dirichlet", (0.0, 1.0))
