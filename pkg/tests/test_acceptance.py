"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line."""
import math
import time

import numpy as np
import pytest
from scipy.optimize import brentq
from scipy.special import jv

from nonscat.errors import BranchCutHit, NonScatError
from nonscat.fields import (BesselSum, PlaneWaves, TrigProducts, TrigTerm, WaveTerm, combine, cos_cos,
                            cut_distance, cut_jump_probe, eckmann_pillet, helmholtz_residual, neg_cos_sum,
                            plane_wave, sine_product_planewaves, affine_pull)
from nonscat.flow import assemble_neumann_domain, find_stationary, limit_tangent_angle, neumann_flux_check, trace_orbit
from nonscat.geometry import PolygonDomain, Rectangle
from nonscat.media import (adiag_square, build_transform_medium, check_structural_identities, constant_medium,
                           disk_diffeo, pulled_field_report, rank_deficient, slab, square_diffeo)
from nonscat.nodal import NEGATIVE, POSITIVE, certify_signs, corner_angle_check, trace_fidelity
from nonscat.recipes import (bessel_neumann_config, bessel_t0, cosxy_domain, cosxy_orbit, cosxy_relation_error,
                             cusp_orbit, cusp_separatrix, detuned_square_incident, eck_curve, lip4_domain,
                             lip5_config, round_trip_instances, sweep_coverage, aperture_sweep, unit_square_incident)
from nonscat.nodal import find_critical_points
from nonscat.scatter import NON_SCATTERING, SCATTERING, PointSource, refinement_study, resolved_h_list
from nonscat.spectra import CavityProblem, sector_spectrum, sector_verdict, verify_cavity_eigenpair, verify_itep

SQRT2 = math.sqrt(2.0)


def test_criterion_01_square_non_scattering(verdict_line):
    t = time.perf_counter()
    med = constant_medium(Rectangle(0.0, 1.0, 0.0, 1.0), 2.0)
    ui, k = unit_square_incident()
    assert abs(k - math.pi * SQRT2) < 1e-14
    hs = [1 / 40, 1 / 80, 1 / 160]
    st = refinement_study(med, ui, k, hs)
    ud, kd = detuned_square_incident(1.1)
    sd = refinement_study(med, ud, kd, hs)
    dt = time.perf_counter() - t
    verdict_line(f"verdict={st.verdict} final={st.table[-1].rel_scatter:.2e}; detuned={sd.verdict} "
                 f"final={sd.table[-1].rel_scatter:.3f}; {dt:.1f}s")
    assert st.verdict == NON_SCATTERING and st.table[-1].rel_scatter < 1e-3
    assert sd.verdict == SCATTERING and sd.table[-1].rel_scatter > 1e-2
    assert dt <= 60.0


def _oracle_bessel_zero(nu, index=1):
    """Independent bracketing of the zeros of ``scipy.special.jv``."""
    xs = np.arange(nu + 0.5, nu + 60, 0.01)
    f = jv(nu, xs)
    roots = [brentq(lambda x: jv(nu, x), a, b, xtol=1e-15) for a, b, fa, fb in zip(xs[:-1], xs[1:], f[:-1], f[1:])
             if fa * fb < 0]
    return roots[index - 1]


def test_criterion_02_sector_dichotomy(verdict_line):
    rational = sector_verdict(math.pi / 3, 1.0, count=12)
    irrational = sector_verdict(1.0, 1.0, count=12)
    errs = []
    for ell in (1.0, 2.0):
        e = [x for x in sector_spectrum(math.pi / 2, ell, count=10) if x.m == 1 and x.zero_index == 1][0]
        errs.append(abs(e.k - _oracle_bessel_zero(2.0) / ell))
    verdict_line(f"pi/3 all={rational['all_extendable']}; 1 rad any={irrational['any_extendable']}; "
                 f"J2 zero err={max(errs):.1e}")
    assert rational["all_extendable"]
    assert not irrational["any_extendable"]
    assert max(errs) < 1e-10


def test_criterion_03_eckmann_pillet_closed_curve(verdict_line):
    f = eckmann_pillet(1.5, 3, 0.6)
    from nonscat.bessel import bessel_first_zero

    assert abs(f.k - bessel_first_zero(1.5)) < 1e-14
    cert = certify_signs(f, (-0.6, 0.6, -0.6, 0.6), 0.01)
    f, c = eck_curve(f, step=1e-2)
    vmax = trace_fidelity(f, c)[0]
    probe = cut_jump_probe(f, 0, 0.3)
    margin = float(cut_distance(f.cuts, c.vertices).min())
    verdict_line(f"pos={cert.count(POSITIVE)} neg={cert.count(NEGATIVE)} gap={c.closure_gap:.1e} "
                 f"max|v|={vmax:.1e} jump={probe['normal_derivative_jump']:.3f} cut margin={margin:.4f}")
    assert cert.count(POSITIVE) > 0 and cert.count(NEGATIVE) > 0
    assert c.closed and c.closure_gap < 0.5e-2
    assert vmax < 1e-10
    assert abs(probe["normal_derivative_jump"]) > 1e-3
    assert abs(probe["value_jump"]) < 1e-10
    assert margin > 0.0


def test_criterion_04_corner_law(verdict_line):
    from nonscat.recipes import lip4_config

    f4, a = lip4_config()
    cps4 = [cp for cp in find_critical_points(f4, (-1.6, 1.6, -1.6, 1.6)) if cp.order == 2]
    targets = [np.array([a + 1, 0.0]), np.array([-(a + 1), 0.0])]
    hit4 = [min(np.linalg.norm(cp.location - t) for cp in cps4) for t in targets]
    dev4 = max(corner_angle_check(cp, f4)["max_deviation"] for cp in cps4)
    f5 = lip5_config()
    cps5 = [cp for cp in find_critical_points(f5, (-1.0, 1.0, -1.0, 1.0)) if cp.order == 3]
    target5 = np.array([0.0, -math.sqrt(2) / 2])
    hit5 = [cp for cp in cps5 if np.linalg.norm(cp.location - target5) < 1e-8]
    chk5 = corner_angle_check(hit5[0], f5) if hit5 else {"max_deviation": 1.0, "angles": []}
    spacing = np.array(chk5["angles"])
    verdict_line(f"N=2 location err={max(hit4):.1e} dev={dev4:.1e}; N=3 found={len(hit5)} "
                 f"dev={chk5['max_deviation']:.1e}")
    assert max(hit4) < 1e-8 and dev4 < 1e-6
    assert len(hit5) == 1
    assert chk5["max_deviation"] < 1e-6
    assert np.allclose(spacing, math.pi / 3, atol=1e-6)


def test_criterion_05_neumann_orbits(verdict_line):
    f = neg_cos_sum()
    worst_rel, worst_flux = 0.0, 0.0
    for d in (0.2, 0.5, 1.0, 2.0, 5.0):
        o = cosxy_orbit(d, f)
        err = cosxy_relation_error(o, d)
        worst_rel = max(worst_rel, err["literal"], err["bounded"])
        worst_flux = max(worst_flux, neumann_flux_check(f, o))
    rows, _ = aperture_sweep(f)
    cov = sweep_coverage([r["aperture"] for r in rows])
    verdicts = {}
    for d1, d2 in ((0.5, 2.0), (0.2, 1.0)):
        dom, _ = cosxy_domain(d1, d2, f)
        poly = PolygonDomain(dom.boundary)
        for k in (SQRT2, 1.0):
            verdicts[(d1, d2, k)] = verify_cavity_eigenpair(CavityProblem(poly, "neumann", k), f).verdict
    at_sqrt2 = all(v for (d1, d2, k), v in verdicts.items() if k == SQRT2)
    at_one = all(v for (d1, d2, k), v in verdicts.items() if k == 1.0)
    verdict_line(f"relation err={worst_rel:.1e} flux={worst_flux:.1e} coverage gap={cov:.4f}; "
                 f"cavity verdict k=sqrt2: {at_sqrt2}, k=1: {at_one}")
    assert worst_rel < 1e-6
    assert worst_flux < 1e-8
    assert cov < 0.05
    assert at_one
    assert at_sqrt2


def test_criterion_06_cusp_detection(verdict_line):
    f = cos_cos(1, 2)
    orbits, rel, tangents = [], 0.0, []
    for d in (0.25, 0.5, 1.0, 1.5, 2.0, 4.0):
        o = cusp_orbit(d, field=f)
        orbits.append(o)
        x, y = o.vertices.T
        rel = max(rel, float(np.max(np.abs(np.sin(2 * y) - d * np.sin(x) ** 4))))
        ang = limit_tangent_angle(o, (0.0, 0.0))
        tangents.append(min(ang, math.pi - ang))
    sep = cusp_separatrix(f)
    sep_ang = limit_tangent_angle(sep, (0.0, 0.0))
    doms = [assemble_neumann_domain(orbits[3:5]), assemble_neumann_domain(orbits[4:6])]
    cusps = sum(len(d.cusp_tags) for d in doms)
    verdict_line(f"relation err={rel:.1e} max tangent={max(tangents):.1e} separatrix={sep_ang:.4f} cusps={cusps}")
    assert rel < 1e-6
    assert max(tangents) < 0.05
    assert abs(sep_ang - math.pi / 2) < 0.05
    assert cusps >= 1


def test_criterion_07_bessel_neumann(verdict_line):
    f, mu, a = bessel_neumann_config()
    t0 = bessel_t0(f, mu, a)
    oracle = brentq(lambda t: (jv(mu - 1, f.k * (a + t)) - jv(mu + 1, f.k * (a + t)))
                    + (jv(mu - 1, f.k * (a - t)) - jv(mu + 1, f.k * (a - t))), 0.2, 0.5, xtol=1e-15)
    locs = np.array([s.location for s in find_stationary(f, (-0.85, 0.85, -0.85, 0.85))])
    s7 = math.sin(math.pi / 7)
    d_axis = max(np.min(np.linalg.norm(locs - p, axis=1)) for p in ((0, s7), (0, -s7)))
    d_t0 = max(np.min(np.linalg.norm(locs - p, axis=1)) for p in ((t0, 0), (-t0, 0)))
    limits = []
    for al in (0.25, 0.5, 0.75, -0.5):
        p = (0.0, al * s7)
        limits.append(np.linalg.norm(trace_orbit(f, p, "forward").vertices[-1] - (-t0, 0.0)))
        limits.append(np.linalg.norm(trace_orbit(f, p, "backward").vertices[-1] - (t0, 0.0)))
    verdict_line(f"t0={t0:.13f} oracle diff={abs(t0 - oracle):.1e} axis={d_axis:.1e} t0 points={d_t0:.1e} "
                 f"limits={max(limits):.1e}")
    assert abs(t0 - oracle) < 1e-10
    assert d_axis < 1e-8
    assert d_t0 < 1e-10
    assert max(limits) < 1e-5


def _ladder(medium, k):
    return resolved_h_list(medium, k, (1 / 20, 1 / 40, 1 / 80) if k < 2 else (1 / 40, 1 / 80, 1 / 160))


def test_criterion_08_transformation_media(verdict_line):
    t = time.perf_counter()
    cases = [(f"square alpha={al}", build_transform_medium(square_diffeo(al)), (1.0, 0.0)) for al in (0.1, 0.3, 0.49)]
    cases.append(("disk", build_transform_medium(disk_diffeo()), (0.6, 0.8)))
    struct, pde, failures, finals = 0.0, 0.0, [], []
    for name, med, direction in cases:
        s = check_structural_identities(med)
        struct = max(struct, s["detLaw"] / 1e-10, s["boundaryNu"] / 1e-8)
        for v in (plane_wave(2.0, direction), sine_product_planewaves()):
            pde = max(pde, pulled_field_report(med, v)["pde"])
        for k in (1.0, SQRT2, 5.0):
            try:
                st = refinement_study(med, plane_wave(k, direction), k, _ladder(med, k))
                finals.append(st.table[-1].rel_scatter)
                if st.verdict != NON_SCATTERING:
                    failures.append(f"{name} k={k:.3g}: {st.verdict}")
            except NonScatError as e:
                failures.append(f"{name} k={k:.3g}: {type(e).__name__}")
    dt = time.perf_counter() - t
    verdict_line(f"structural/tol={struct:.1e} pull PDE={pde:.1e} worst final relScatter={max(finals):.1e} "
                 f"failures={failures or 'none'} {dt:.0f}s")
    assert struct < 1.0
    assert pde < 1e-6
    assert not failures
    assert dt <= 300.0


def test_criterion_09_explicit_anisotropic(verdict_line):
    worst = 0.0
    sets = set()
    for a1, a2, q0, g in ((2.0, 4.0, 3.0, 1), (1.0, 4.0, 3.0, 2), (4.0, 1.0, 3.0, 3)):
        ex = adiag_square(a1, a2, q0)
        sets.add(ex.info["set"])
        k, u, v = ex.generator(g)
        r = verify_itep(ex.medium, k, u, v)
        worst = max(worst, r.pde_residual, r.bc_residual)
    th = 0.7
    U = np.array([[math.cos(th), -math.sin(th)], [math.sin(th), math.cos(th)]])
    ex = rank_deficient(U, 5.0)
    for kk in (1.0, 2.7, 10.0):
        k, u, v = ex.generator(kk)
        r = verify_itep(ex.medium, k, u, v)
        worst = max(worst, r.pde_residual, r.bc_residual)
    sl = slab(0.0, 1.0, 2.0, 3.0)
    for m in (1, 2, 3):
        k, u, v = sl.generator(m)
        r = verify_itep(sl.medium, k, u, v)
        worst = max(worst, r.pde_residual, r.bc_residual)
    k, _, _ = sl.generator(1)
    ui = PlaneWaves(k, ((1.0, 0.0), (-1.0, 0.0)), (0.5 + 0j, 0.5 + 0j))
    st = refinement_study(sl.medium, ui, k, [1 / 20, 1 / 40, 1 / 80])
    verdict_line(f"condition sets={sorted(sets)} worst residual={worst:.1e} slab verdict={st.verdict} "
                 f"final={st.table[-1].rel_scatter:.1e}")
    assert sets == {1, 2, 3}
    assert worst < 1e-8
    assert st.verdict == NON_SCATTERING


def test_criterion_10_round_trip(verdict_line):
    rows = round_trip_instances(20, seed=11)
    fwd = max(max(r["forward"].pde_residual, r["forward"].bc_residual) for r in rows)
    fwd_ok = all(r["forward"].verdict for r in rows)
    back_ok = all(r["back"] and all(b.verdict for b in r["back"].values()) for r in rows)
    a_vals = sorted({r["a"] for r in rows})
    verdict_line(f"instances={len(rows)} a values={a_vals} forward residual={fwd:.1e} recovered={back_ok}")
    assert len(rows) == 20
    assert fwd_ok and fwd < 1e-8
    assert back_ok


def _families():
    k = 3.1
    yield "planewaves", PlaneWaves(k, ((0.6, 0.8), (-1.0, 0.0)), (1.0 + 0.5j, -0.3 + 0j)), (-2, 2, -2, 2)
    yield "sine product", sine_product_planewaves(2, 1), (-1, 2, -1, 2)
    yield "trig", TrigProducts(math.hypot(2.0, 1.0), (TrigTerm(1.0, "cos", 2.0, 0.3, "sin", 1.0, 0.0),
                                                      TrigTerm(0.5, "sin", 1.0, 0.0, "cos", 2.0, 0.1))), (-3, 3, -3, 3)
    yield "trig hyperbolic", TrigProducts(1.0, (TrigTerm(1.0, "cos", math.sqrt(2), 0.0, "cosh", 1.0, 0.0),)), \
        (-2, 2, -2, 2)
    yield "neg cos sum", neg_cos_sum(), (-4, 4, -4, 4)
    yield "cos cos", cos_cos(1, 2), (-4, 4, -4, 4)
    yield "bessel integer", eckmann_pillet(1.0, 2, 0.55), (-2, 2, -2, 2)
    yield "bessel fractional", eckmann_pillet(1.5, 3, 0.6), (-2, 2, -2, 2)
    yield "bessel weighted", eckmann_pillet(3.5, 2, math.cos(math.pi / 7), weights=[1.0, -1.0]), (-2, 2, -2, 2)
    yield "bessel phased", eckmann_pillet(2.5, 2, 1.0, phases=[math.pi / 5, -math.pi / 5]), (-2, 2, -2, 2)
    yield "combination", combine([plane_wave(k, (1.0, 0.0)), plane_wave(k, (0.0, 1.0))], [1.0, -2.0]), (-2, 2, -2, 2)
    yield "pullback", affine_pull(eckmann_pillet(1.5, 3, 0.6), 0.4, (0.2, -0.1)), (-2, 2, -2, 2)
    yield "point source", PointSource((3.0, 0.5), 2.0), (-2, 2, -2, 2)


def test_criterion_11_field_invariants(verdict_line):
    rng = np.random.default_rng(2024)
    worst = {"helmholtz": 0.0, "gradient": 0.0, "hessian": 0.0}
    probes = []
    for name, f, (x0, x1, y0, y1) in _families():
        pts = np.column_stack([rng.uniform(x0, x1, 4000), rng.uniform(y0, y1, 4000)])
        if f.cuts:
            pts = pts[cut_distance(f.cuts, pts) > 1e-2]
        pts = pts[:1000]
        assert len(pts) == 1000
        v, g, H = f.jet(pts)
        scale = max(1.0, float(np.max(np.abs(v))))
        worst["helmholtz"] = max(worst["helmholtz"], float(np.max(np.abs(helmholtz_residual(f, pts)))) / (scale * f.k ** 2))
        eps = 1e-5
        for j, e in enumerate(np.eye(2)):
            fd = (f.jet(pts + eps * e)[0] - f.jet(pts - eps * e)[0]) / (2 * eps)
            gs = max(1.0, float(np.max(np.abs(g))))
            worst["gradient"] = max(worst["gradient"], float(np.max(np.abs(fd - g[:, j]))) / gs)
        hs = max(1.0, float(np.max(np.abs(H))))
        worst["hessian"] = max(worst["hessian"], float(np.max(np.abs(H[:, 0, 1] - H[:, 1, 0]))) / hs)
        for i in range(len(f.cuts)):
            probes.append((name, cut_jump_probe(f, i, 0.4)))
    jumps = [max(abs(p["value_jump"]), abs(p["normal_derivative_jump"])) for _, p in probes]
    with_cuts = {n for n, _ in probes}
    on_cut = 0
    for name, f, _ in _families():
        for ray in f.cuts:
            with pytest.raises(BranchCutHit):
                f.jet(np.asarray(ray.origin)[None, :] + 0.5 * np.asarray(ray.direction)[None, :])
            on_cut += 1
    verdict_line(f"helmholtz={worst['helmholtz']:.1e} gradient={worst['gradient']:.1e} "
                 f"hessian={worst['hessian']:.1e} cut probes={len(probes)} min jump={min(jumps):.2e} "
                 f"on-cut errors={on_cut}")
    assert worst["helmholtz"] < 1e-8
    assert worst["gradient"] < 1e-6
    assert worst["hessian"] < 1e-12
    assert with_cuts == {"bessel fractional", "bessel weighted", "bessel phased", "pullback"}
    assert min(jumps) > 1e-6
    assert on_cut == len(probes)
