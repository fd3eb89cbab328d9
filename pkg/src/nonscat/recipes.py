"""Named reproduction recipes and the constructions they share with the tests.

Each recipe returns a ``RunReport`` listing checks with their measured
value, threshold and status.  Reports contain no timing data, so two runs
of the same recipe serialise to identical JSON.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field as dc_field
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from .bessel import bessel_zeros, besselj_derivs
from .errors import NonScatError
from .fields import (PlaneWaves, cos_cos, cut_distance, cut_jump_probe, eckmann_pillet,
                     neg_cos_sum, sine_product_planewaves)
from .flow import (assemble_neumann_domain, find_stationary, full_orbit, limit_tangent_angle,
                   neumann_flux_check, trace_orbit)
from .geometry import PlanarCurve, PolygonDomain, Rectangle, Sector, curves_to_svg
from .media import (adiag_square, build_transform_medium, check_structural_identities, constant_medium,
                    disk_diffeo, pull_field, pulled_field_report, rank_deficient, slab, square_diffeo)
from .nodal import (LABEL_NAMES, NEGATIVE, POSITIVE, assemble_dirichlet_domain, certify_signs,
                    corner_angle_check, find_critical_points, seed_on_segment, trace_fidelity, trace_nodal)
from .scatter import NON_SCATTERING, SCATTERING, refinement_study
from .spectra import (CavityProblem, itep_from_cavity, sector_spectrum, sector_verdict,
                      verify_cavity_eigenpair, verify_itep)

SQRT2 = math.sqrt(2.0)


def _fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        return float(f"{float(x):.15g}")
    if isinstance(x, str) or x is None:
        return x
    if isinstance(x, dict):
        return {str(k): _fmt(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, np.ndarray)):
        return [_fmt(v) for v in x]
    return str(x)


@dataclass
class Check:
    name: str
    value: object
    passed: bool
    expect: str = ""

    def to_dict(self):
        return {"name": self.name, "value": _fmt(self.value), "expect": self.expect, "passed": bool(self.passed)}


@dataclass
class RunReport:
    recipe: str
    topic: str
    checks: list = dc_field(default_factory=list)
    artifacts: list = dc_field(default_factory=list)
    wall_time: float = 0.0

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def check(self, name, value, passed, expect=""):
        self.checks.append(Check(name, value, bool(passed), expect))

    def below(self, name, value, tol):
        self.check(name, value, float(value) < tol, f"< {tol:g}")

    def to_dict(self):
        return {"recipe": self.recipe, "topic": self.topic, "passed": self.passed,
                "checks": [c.to_dict() for c in self.checks], "artifacts": list(self.artifacts)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def _write(outdir, name, text, report):
    if outdir is None:
        return
    p = Path(outdir) / name
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(text)
    report.artifacts.append(name)


# ---------------------------------------------------------------------------
# shared constructions
# ---------------------------------------------------------------------------


def unit_square_incident():
    """Four plane waves summing to ``4 sin(pi x) sin(pi y)`` and ``k = pi sqrt 2``."""
    v = sine_product_planewaves(1, 1)
    return v, v.k


def detuned_square_incident(factor: float = 1.1):
    k = factor * math.pi * SQRT2
    d = 1 / SQRT2
    dirs = ((d, d), (d, -d), (-d, d), (-d, -d))
    return PlaneWaves(k, dirs, (-1 + 0j, 1 + 0j, 1 + 0j, -1 + 0j)), k


def eck_config():
    return eckmann_pillet(1.5, 3, 0.6)


def eck_curve(field=None, step: float = 1e-2):
    f = field if field is not None else eck_config()
    seed = seed_on_segment(f, (0.0, 0.0), (0.55, 0.0))
    return f, trace_nodal(f, seed, step)


EP_SETS = {
    "more-a": dict(mu=2.5, L=2, a=0.58),
    "more-b": dict(mu=2.5, L=3, a=0.6),
    "more-c": dict(mu=2.5, L=4, a=0.5),
    "int-a": dict(mu=1.0, L=2, a=0.55),
    "lip-a": dict(mu=3.5, L=2, a=math.cos(math.pi / 7), weights=[1.0, -1.0]),
    "lip-b": dict(mu=2.5, L=2, a=1.0, phases=[math.pi / 5, -math.pi / 5]),
    "lip-c": dict(mu=1.5, L=2, a=math.sqrt(2) / 2, phases=[math.pi / 12, -math.pi / 12]),
}


def lip4_config():
    """``L = 2``, ``mu = 1``, ``a = (k2 - k) / (2k)``, phases ``pi/2`` and ``-pi/2``."""
    k, k2 = bessel_zeros(1.0, 2)
    a = (k2 - k) / (2 * k)
    return eckmann_pillet(1.0, 2, a, phases=[math.pi / 2, -math.pi / 2]), a


def lip5_config():
    """``L = 2``, ``mu = 1``, ``a = sqrt(2)/2``, phases ``pi/4`` and ``3 pi/4``."""
    return eckmann_pillet(1.0, 2, math.sqrt(2) / 2, phases=[math.pi / 4, 3 * math.pi / 4])


def lip4_domain(field=None, step: float = 1e-2):
    """Upper half of the Lipschitz domain: an upper arc and the axis segment between the corners."""
    f = field if field is not None else lip4_config()[0]
    cps = [c for c in find_critical_points(f, (-1.6, 1.6, -1.6, 1.6)) if c.order]
    stops = [c.location for c in cps]
    up = trace_nodal(f, seed_on_segment(f, (0.0, 0.05), (0.0, 1.5)), step, stop_points=stops)
    axis = trace_nodal(f, np.array([0.0, 0.0]), step, stop_points=stops)
    boundary, area = assemble_dirichlet_domain([up, axis])
    return f, cps, boundary, area


# -- Neumann: v = -(cos x + cos y) --------------------------------------------

COSXY_WINDOW = (-0.01, math.pi + 0.01, -0.01, math.pi + 0.01)
SWEEP_WINDOW = (-math.pi - 0.01, math.pi + 0.01, -math.pi - 0.01, math.pi + 0.01)


def cosxy_orbit(delta: float, field=None):
    """Orbit through ``(pi/2, 2 atan(delta))``, i.e. on ``tan(y/2) = delta tan(x/2)``."""
    f = field if field is not None else neg_cos_sum()
    return full_orbit(f, (math.pi / 2, 2 * math.atan(delta)), window=COSXY_WINDOW)


def cosxy_relation_error(orbit, delta: float, tan_cap: float = 1e3) -> dict:
    """Errors of the orbit relation: literal ``tan`` form where both sides are below ``tan_cap``,
    and the bounded form ``sin(y/2) cos(x/2) - delta cos(y/2) sin(x/2)`` everywhere."""
    x, y = orbit.vertices.T
    bounded = np.abs(np.sin(y / 2) * np.cos(x / 2) - delta * np.cos(y / 2) * np.sin(x / 2))
    ty, tx = np.tan(y / 2), delta * np.tan(x / 2)
    m = (np.abs(ty) <= tan_cap) & (np.abs(tx) <= tan_cap)
    return {"literal": float(np.max(np.abs(ty[m] - tx[m]))), "bounded": float(bounded.max()),
            "literal_samples": int(m.sum()), "samples": int(len(x))}


def cosxy_domain(d1: float, d2: float, field=None):
    f = field if field is not None else neg_cos_sum()
    o1, o2 = cosxy_orbit(d1, f), cosxy_orbit(d2, f)
    return assemble_neumann_domain([o1, o2]), (o1, o2)


SWEEP_A = tuple(range(5, 31, 5))
SWEEP_B = tuple(range(35, 336, 30))


def _sweep_edges(field):
    """Half-edges of the square ``[-pi, pi]^2``, each an orbit from a saddle to a corner sink."""
    edges = {}
    P = math.pi
    corners = [(P, P), (-P, P), (-P, -P), (P, -P)]
    mids = {0: [(P / 2, P), (-P / 2, P)], 1: [(-P, P / 2), (-P, -P / 2)],
            2: [(-P / 2, -P), (P / 2, -P)], 3: [(P, -P / 2), (P, P / 2)]}
    # leg j runs counterclockwise from corner j to corner j + 1
    for j in range(4):
        edges[j] = [full_orbit(field, m, window=SWEEP_WINDOW) for m in mids[j]]
    return corners, edges


def aperture_sweep(field=None, angles_a=SWEEP_A, angles_b=SWEEP_B, start_radius: float = 1e-2):
    """Apertures at the origin of domains bounded by two source orbits and the square's edges.

    Orbits leave the source ``(0, 0)`` at angle ``phi`` and end at the corner
    sink of their quadrant.  The domain for ``(a, b)`` follows orbit ``a``
    out, the square's edges counterclockwise, and orbit ``b`` back.
    """
    f = field if field is not None else neg_cos_sum()
    orbits = {}
    for deg in sorted(set(angles_a) | set(angles_b)):
        phi = math.radians(deg)
        orbits[deg] = full_orbit(f, (start_radius * math.cos(phi), start_radius * math.sin(phi)),
                                 window=SWEEP_WINDOW)
    corners, edges = _sweep_edges(f)
    rows = []
    for a in angles_a:
        for b in angles_b:
            qa, qb = a // 90, b // 90
            arcs = [orbits[a]]
            for j in range(qa, qb):
                arcs.extend(edges[j % 4])
            arcs.append(orbits[b])
            dom = assemble_neumann_domain(arcs)
            rows.append({"a": a, "b": b, "aperture": dom.aperture_at((0.0, 0.0)),
                         "expected": math.radians(b - a), "domain": dom})
    return rows, orbits


def sweep_coverage(apertures, lo: float = math.pi / 6, hi: float = 11 * math.pi / 6, n: int = 2001) -> float:
    """Largest distance from a target angle in ``[lo, hi]`` to the nearest aperture."""
    ap = np.sort(np.asarray(apertures))
    t = np.linspace(lo, hi, n)
    return float(np.max(np.min(np.abs(t[:, None] - ap[None, :]), axis=1)))


# -- Neumann: v = cos x cos 2y ------------------------------------------------

CUSP_WINDOW = (-1e-9, math.pi + 1e-9, -1e-9, math.pi / 2 + 1e-9)


def cusp_orbit(delta: float, x0: float = 0.9, field=None):
    f = field if field is not None else cos_cos(1, 2)
    if delta * math.sin(x0) ** 4 > 0.5:
        x0 = math.asin((0.5 / delta) ** 0.25)
    y0 = 0.5 * math.asin(delta * math.sin(x0) ** 4)
    return full_orbit(f, (x0, y0), window=CUSP_WINDOW)


def cusp_separatrix(field=None):
    """The vertical orbit ``x = 0`` from ``(0, pi/2)`` into ``(0, 0)``."""
    f = field if field is not None else cos_cos(1, 2)
    return full_orbit(f, (0.0, math.pi / 4), window=CUSP_WINDOW)


# -- Neumann: Bessel sum -------------------------------------------------------


def bessel_neumann_config():
    mu, a = 3.5, math.cos(math.pi / 7)
    return eckmann_pillet(mu, 2, a, weights=[1.0, -1.0]), mu, a


def bessel_t0(field, mu, a):
    """Smallest root in ``(0, a)`` of ``J'_mu(k (a + t)) + J'_mu(k (a - t))``."""
    k = field.k
    g = lambda t: besselj_derivs(mu, k * (a + t))[1] + besselj_derivs(mu, k * (a - t))[1]
    ts = np.linspace(1e-6, a - 1e-6, 400)
    vals = np.array([g(t) for t in ts])
    i = int(np.nonzero(np.sign(vals[:-1]) != np.sign(vals[1:]))[0][0])
    return brentq(g, ts[i], ts[i + 1], xtol=1e-15, rtol=1e-15)


# ---------------------------------------------------------------------------
# recipes
# ---------------------------------------------------------------------------


def r_square_dirichlet(rep, out, fast=False):
    med = constant_medium(Rectangle(0.0, 1.0, 0.0, 1.0), 2.0)
    ui, k = unit_square_incident()
    hs = [1 / 20, 1 / 40, 1 / 80] if fast else [1 / 40, 1 / 80, 1 / 160]
    st = refinement_study(med, ui, k, hs)
    rep.check("verdict at k = pi sqrt 2", st.verdict, st.verdict == NON_SCATTERING, NON_SCATTERING)
    rep.below("final relScatter", st.table[-1].rel_scatter, 1e-3)
    ud, kd = detuned_square_incident()
    sd = refinement_study(med, ud, kd, hs)
    rep.check("detuned verdict", sd.verdict, sd.verdict == SCATTERING, SCATTERING)
    rep.check("detuned relScatter", sd.table[-1].rel_scatter, sd.table[-1].rel_scatter > 1e-2, "> 0.01")
    _write(out, "refinement.json", st.to_json(), rep)
    _write(out, "refinement_detuned.json", sd.to_json(), rep)


def r_sector_rational(rep, out, fast=False):
    v = sector_verdict(math.pi / 3, 1.0, count=10)
    rep.check("pi/3 all extendable", v["all_extendable"], v["all_extendable"], "true")
    e = [x for x in sector_spectrum(math.pi / 2, 1.0, count=10) if x.m == 1][0]
    ref = bessel_zeros(2.0, 1)[0]
    rep.below("pi/2, m=1 vs first zero of J_2", abs(e.k - ref), 1e-10)
    _write(out, "sector.json", json.dumps(_fmt(v), sort_keys=True, indent=2), rep)


def r_sector_irrational(rep, out, fast=False):
    v = sector_verdict(1.0, 1.0, count=10)
    rep.check("alpha = 1 none extendable", v["any_extendable"], not v["any_extendable"], "false")
    e = sector_spectrum(1.0, 1.0, count=1)[0]
    med = constant_medium(Sector(1.0, 1.0), 2.0)
    from .fields import plane_wave
    st = refinement_study(med, plane_wave(e.k, (1.0, 0.0)), e.k, [1 / 20, 1 / 40, 1 / 80])
    rep.check("scatter verdict at the first eigenvalue", st.verdict, st.verdict == SCATTERING, SCATTERING)
    _write(out, "sector.json", json.dumps(_fmt(v), sort_keys=True, indent=2), rep)


def r_eck(rep, out, fast=False):
    f = eck_config()
    cert = certify_signs(f, (-0.55, 0.55, -0.55, 0.55), 0.01)
    rep.check("positive cells", cert.count(POSITIVE), cert.count(POSITIVE) > 0, "> 0")
    rep.check("negative cells", cert.count(NEGATIVE), cert.count(NEGATIVE) > 0, "> 0")
    f, c = eck_curve(f)
    rep.check("closed", c.closed, c.closed, "true")
    rep.below("closure gap / step", c.closure_gap / 1e-2, 0.5)
    rep.below("max |v| on curve", trace_fidelity(f, c)[0], 1e-10)
    probe = cut_jump_probe(f, 0, 0.3)
    rep.check("derivative jump across a cut", probe["normal_derivative_jump"],
              probe["normal_derivative_jump"] > 1e-3, "> 1e-3")
    margin = float(cut_distance(f.cuts, c.vertices).min())
    rep.check("curve distance to cuts", margin, margin > 0, "> 0")
    # the nodal domain as a medium with a = q = 2, lit by v itself; grids must resolve the cut margin
    med = constant_medium(PolygonDomain(PlanarCurve(c.vertices, closed=True)), 2.0)
    st = refinement_study(med, f, f.k, [1 / 64, 1 / 128, 1 / 256])
    rep.check("scatter verdict on the nodal domain", st.verdict, st.verdict == NON_SCATTERING, NON_SCATTERING)
    _write(out, "refinement.json", st.to_json(), rep)
    _write(out, "curve.jsonl", c.to_jsonl(), rep)
    _write(out, "signs.csv", cert.to_csv(), rep)
    _write(out, "curve.svg", c.to_svg(), rep)


def _closed_ep(rep, name, out):
    p = EP_SETS[name]
    f = eckmann_pillet(**p)
    seed = seed_on_segment(f, (0.0, 0.0), (0.95 * p["a"], 0.0))
    c = trace_nodal(f, seed, 1e-2)
    rep.check(f"{name} closed", c.closed, c.closed, "true")
    rep.below(f"{name} max |v|", trace_fidelity(f, c)[0], 1e-10)
    if f.cuts:
        d = float(cut_distance(f.cuts, c.vertices).min())
        rep.check(f"{name} distance to cuts", d, d > 0, "> 0")
    _write(out, f"{name}.jsonl", c.to_jsonl(), rep)
    return c


def r_ep_sweep(rep, out, fast=False):
    curves = [_closed_ep(rep, n, out) for n in ("more-a", "more-b", "more-c")]
    _write(out, "sweep.svg", curves_to_svg(curves), rep)


def r_ep_entire(rep, out, fast=False):
    c = _closed_ep(rep, "int-a", out)
    f4, a = lip4_config()
    _, cps, b, area = lip4_domain(f4)
    locs = sorted(cp.location[0] for cp in cps if cp.order == 2 and abs(cp.location[1]) < 1e-8)
    rep.check("order-2 corners at +-(a+1, 0)", locs,
              len(locs) == 2 and max(abs(abs(x) - (a + 1)) for x in locs) < 1e-8, "2 points")
    rep.check("assembled corner count", len(b.corner_tags), len(b.corner_tags) == 2, "2")
    f5 = lip5_config()
    cps5 = [cp for cp in find_critical_points(f5, (-1, 1, -1, 1)) if cp.order == 3]
    at = [cp for cp in cps5 if np.linalg.norm(cp.location - (0.0, -math.sqrt(2) / 2)) < 1e-8]
    rep.check("order-3 point at (0, -sqrt(2)/2)", len(at), len(at) == 1, "1")
    if cps5:
        chk = corner_angle_check(cps5[0], f5)
        rep.below("order-3 lattice deviation", chk["max_deviation"], 1e-6)
    _write(out, "entire.svg", curves_to_svg([c, b]), rep)


def r_ep_lip(rep, out, fast=False):
    for name in ("lip-a", "lip-b", "lip-c"):
        f = eckmann_pillet(**EP_SETS[name])
        cps = [cp for cp in find_critical_points(f, (-1, 1, -1, 1)) if cp.order >= 2]
        rep.check(f"{name} critical points", len(cps), len(cps) > 0, "> 0")
        dev = max(corner_angle_check(cp, f)["max_deviation"] for cp in cps) if cps else 1.0
        rep.below(f"{name} lattice deviation", dev, 1e-6)


def r_neumann_cosxy(rep, out, fast=False):
    f = neg_cos_sum()
    orbits = []
    for d in (0.2, 0.5, 1.0, 2.0):
        o = cosxy_orbit(d, f)
        orbits.append(o)
        err = cosxy_relation_error(o, d)
        rep.below(f"delta={d} orbit relation", err["literal"], 1e-6)
        rep.below(f"delta={d} flux", neumann_flux_check(f, o), 1e-8)
    for d1, d2 in ((0.5, 2.0), (0.2, 1.0)):
        dom, _ = cosxy_domain(d1, d2, f)
        r = verify_cavity_eigenpair(CavityProblem(PolygonDomain(dom.boundary), "neumann", f.k), f)
        rep.check(f"Omega({d1},{d2}) Neumann eigenpair at k={f.k:g}", r.to_dict(), r.verdict, "verdict true")
    if not fast:
        rows, _ = aperture_sweep(f)
        cov = sweep_coverage([r["aperture"] for r in rows])
        rep.below("aperture coverage gap on [pi/6, 11pi/6]", cov, 0.05)
    _write(out, "orbits.svg", curves_to_svg([o.to_curve() for o in orbits]), rep)


def r_neumann_cusp(rep, out, fast=False):
    f = cos_cos(1, 2)
    orbits = []
    for d in (0.5, 1.5, 2.0):
        o = cusp_orbit(d, field=f)
        orbits.append(o)
        x, y = o.vertices.T
        rep.below(f"delta={d} orbit relation", float(np.max(np.abs(np.sin(2 * y) - d * np.sin(x) ** 4))), 1e-6)
        ang = limit_tangent_angle(o, (0.0, 0.0))
        rep.below(f"delta={d} limit tangent", min(ang, math.pi - ang), 0.05)
    dom = assemble_neumann_domain(orbits[1:])
    rep.check("cusp tags", len(dom.cusp_tags), len(dom.cusp_tags) > 0, "> 0")
    _write(out, "cusp.svg", curves_to_svg([o.to_curve() for o in orbits]), rep)


def r_neumann_bessel(rep, out, fast=False):
    f, mu, a = bessel_neumann_config()
    t0 = bessel_t0(f, mu, a)
    sps = find_stationary(f, (-0.85, 0.85, -0.85, 0.85))
    locs = np.array([s.location for s in sps])
    s7 = math.sin(math.pi / 7)
    for target in ((0.0, s7), (0.0, -s7)):
        rep.below(f"stationary point at {target}", float(np.min(np.linalg.norm(locs - target, axis=1))), 1e-8)
    for target in ((t0, 0.0), (-t0, 0.0)):
        rep.below(f"stationary point at ({target[0]:.6f}, 0)",
                  float(np.min(np.linalg.norm(locs - target, axis=1))), 1e-10)
    for al in (0.5, -0.5):
        p = (0.0, al * s7)
        fw = trace_orbit(f, p, "forward")
        bw = trace_orbit(f, p, "backward")
        rep.below(f"forward limit from {al}", float(np.linalg.norm(fw.vertices[-1] - (-t0, 0.0))), 1e-5)
        rep.below(f"backward limit from {al}", float(np.linalg.norm(bw.vertices[-1] - (t0, 0.0))), 1e-5)


def r_diffeo_square(rep, out, fast=False):
    from .fields import plane_wave
    for alpha in (0.1, 0.3, 0.49):
        med = build_transform_medium(square_diffeo(alpha))
        s = check_structural_identities(med)
        rep.below(f"alpha={alpha} detLaw", s["detLaw"], 1e-10)
        rep.below(f"alpha={alpha} boundaryNu", s["boundaryNu"], 1e-8)
        rep.below(f"alpha={alpha} corner |A nu - nu|", s["cornerANu"], 1e-8)
        rep.below(f"alpha={alpha} pulled PDE", pulled_field_report(med, plane_wave(2.0, (1.0, 0.0)))["pde"], 1e-6)
    med = build_transform_medium(square_diffeo(0.3))
    k = SQRT2
    st = refinement_study(med, plane_wave(k, (1.0, 0.0)), k, [1 / 20, 1 / 40, 1 / 80])
    rep.check("alpha=0.3 scatter verdict", st.verdict, st.verdict == NON_SCATTERING, NON_SCATTERING)
    _write(out, "medium.csv", med.to_csv(np.linspace(-1.2, 1.2, 25), np.linspace(-1.2, 1.2, 25)), rep)


def r_diffeo_disk(rep, out, fast=False):
    from .fields import plane_wave
    med = build_transform_medium(disk_diffeo())
    s = check_structural_identities(med)
    rep.below("detLaw", s["detLaw"], 1e-12)
    rep.below("boundaryNu", s["boundaryNu"], 1e-8)
    rep.below("pulled PDE", pulled_field_report(med, sine_product_planewaves())["pde"], 1e-6)
    k = SQRT2
    st = refinement_study(med, plane_wave(k, (0.6, 0.8)), k, [1 / 20, 1 / 40, 1 / 80])
    rep.check("scatter verdict", st.verdict, st.verdict == NON_SCATTERING, NON_SCATTERING)


def r_adiag(rep, out, fast=False):
    for (a1, a2, q0, idx) in ((2.0, 4.0, 3.0, 1), (1.0, 4.0, 3.0, 2), (4.0, 1.0, 3.0, 3), (1.0, 1.5, 3.0, 2)):
        ex = adiag_square(a1, a2, q0)
        k, u, v = ex.generator(idx)
        r = verify_itep(ex.medium, k, u, v)
        worst = max(r.pde_residual, r.bc_residual)
        rep.below(f"diag({a1},{a2}), q0={q0}, set {ex.info['set']}, k={k:.6g}", worst, 1e-8)


def r_rank_deficient(rep, out, fast=False):
    th = 0.4
    U = np.array([[math.cos(th), -math.sin(th)], [math.sin(th), math.cos(th)]])
    ex = rank_deficient(U, 5.0)
    for kk in (1.0, 2.7, 10.0):
        k, u, v = ex.generator(kk)
        r = verify_itep(ex.medium, k, u, v)
        rep.below(f"k={kk}", max(r.pde_residual, r.bc_residual), 1e-8)


def r_slab(rep, out, fast=False):
    ex = slab(0.0, 1.0, 2.0, 3.0)
    for m in (1, 2, 3):
        k, u, v = ex.generator(m)
        r = verify_itep(ex.medium, k, u, v)
        rep.below(f"m={m}", max(r.pde_residual, r.bc_residual), 1e-8)
    k, _, _ = ex.generator(1)
    ui = PlaneWaves(k, ((1.0, 0.0), (-1.0, 0.0)), (0.5 + 0j, 0.5 + 0j))
    hs = [1 / 20, 1 / 40, 1 / 80] if fast else [1 / 40, 1 / 80, 1 / 160]
    st = refinement_study(ex.medium, ui, k, hs)
    rep.check("scatter verdict for cos(pi x1)", st.verdict, st.verdict == NON_SCATTERING, NON_SCATTERING)


def round_trip_instances(n: int = 20, seed: int = 7):
    """Random rectangle cavity eigenfunctions pushed through the transmission map and back.

    Each row holds the forward ITEP report and cavity reports for the
    recovered ``w_D = u - v`` and ``w_N = a u - v``; the one expected to
    vanish is reported by its sup norm instead.
    """
    from .spectra import cavity_from_itep, rectangle_eigenfunction

    rng = np.random.default_rng(seed)
    rows = []
    for i in range(n):
        m, nn = (int(x) for x in rng.integers(1, 5, size=2))
        Lx, Ly = (float(x) for x in rng.uniform(0.5, 2.0, size=2))
        rect = Rectangle(0.0, Lx, 0.0, Ly)
        a = float(rng.choice([0.3, 2.0, 7.0]))
        bc = "dirichlet" if i % 2 == 0 else "neumann"
        w, k = rectangle_eigenfunction(m, nn, rect, bc)
        u, v = itep_from_cavity(w, bc, a)
        fwd = verify_itep(constant_medium(rect, a), k, u, v, n_interior=1000, n_boundary=400, seed=i)
        wd, wn = cavity_from_itep(u, v, a)
        pts = rect.sample_interior(500, seed=i)
        sup = {"dirichlet": float(np.max(np.abs(wd.jet(pts)[0]))), "neumann": float(np.max(np.abs(wn.jet(pts)[0])))}
        back = {}
        for kind, wk in (("dirichlet", wd), ("neumann", wn)):
            if sup[kind] > 1e-12:
                back[kind] = verify_cavity_eigenpair(CavityProblem(rect, kind, k), wk, 1000, 400, seed=i)
        rows.append({"bc": bc, "m": m, "n": nn, "a": a, "k": k, "rect": (Lx, Ly), "forward": fwd,
                     "sup": sup, "back": back})
    return rows


def r_cavity_round_trip(rep, out, fast=False):
    for r in round_trip_instances(5 if fast else 20):
        tag = f"{r['bc']} ({r['m']},{r['n']}) a={r['a']}"
        f = r["forward"]
        rep.below(f"{tag} forward", max(f.pde_residual, f.bc_residual), 1e-8)
        ok = len(r["back"]) >= 1 and all(b.verdict for b in r["back"].values())
        rep.check(f"{tag} recovered nontrivial eigenfunction", sorted(r["back"]), ok, "one verified")


@dataclass(frozen=True)
class Recipe:
    name: str
    topic: str
    run_fn: Callable

    def run(self, outdir=None, fast: bool = False) -> RunReport:
        import time

        t = time.perf_counter()
        rep = RunReport(self.name, self.topic)
        try:
            self.run_fn(rep, outdir, fast)
        except NonScatError as e:
            after = rep.checks[-1].name if rep.checks else "start"
            rep.check(f"step after '{after}'", f"{type(e).__name__}: {e}", False, "no error")
        rep.wall_time = time.perf_counter() - t
        _write(outdir, "report.json", rep.to_json(), rep)
        return rep


RECIPES = {r.name: r for r in (
    Recipe("square-dirichlet", "unit square with constant contrast a = 2 at k = pi sqrt 2", r_square_dirichlet),
    Recipe("sector-rational", "sector of opening pi/3: every eigenfunction is entire", r_sector_rational),
    Recipe("sector-irrational", "sector of opening 1 rad: no eigenfunction is entire", r_sector_irrational),
    Recipe("eck-3-2", "three-term Bessel sum with mu = 3/2: closed nodal curve off the cuts", r_eck),
    Recipe("ep-sweep", "Bessel sums with mu = 5/2 and L = 2, 3, 4", r_ep_sweep),
    Recipe("ep-entire", "integer-order Bessel sums: smooth and Lipschitz nodal domains", r_ep_entire),
    Recipe("ep-lip", "fractional-order Bessel sums with crossing nodal lines", r_ep_lip),
    Recipe("neumann-cosxy", "gradient orbits of -(cos x + cos y)", r_neumann_cosxy),
    Recipe("neumann-cusp", "gradient orbits of cos x cos 2y and cusps", r_neumann_cusp),
    Recipe("neumann-bessel", "gradient orbits of a two-term Bessel sum with mu = 7/2", r_neumann_bessel),
    Recipe("diffeo-square", "transformation medium from a shear of the square", r_diffeo_square),
    Recipe("diffeo-disk", "transformation medium from an angular twist of the disk", r_diffeo_disk),
    Recipe("adiag", "diagonal anisotropy on the square", r_adiag),
    Recipe("rank-deficient", "anisotropy with a unit eigenvalue in a fixed direction", r_rank_deficient),
    Recipe("slab", "slab with a0 = q", r_slab),
    Recipe("cavity-round-trip", "cavity eigenfunctions to transmission pairs and back", r_cavity_round_trip),
)}


def list_recipes():
    return [(r.name, r.topic) for r in RECIPES.values()]


def run_recipe(name: str, outdir=None, fast: bool = False) -> RunReport:
    if name not in RECIPES:
        raise KeyError(f"unknown recipe {name!r}; available: {', '.join(RECIPES)}")
    return RECIPES[name].run(outdir, fast)
