"""Cavity eigenpairs, interior transmission eigenpairs and sector spectra.

For the isotropic contrast ``A = a Id``, ``q = a`` a cavity eigenfunction
``w`` yields a transmission eigenpair: a Dirichlet ``w`` gives
``(u, v) = (w / a, w)`` and a Neumann ``w`` gives ``(w, w)``.  Conversely,
``w_D = u - v`` and ``w_N = a u - v`` are Dirichlet and Neumann
eigenfunctions whenever they are nonzero.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field as dc_field

import numpy as np
import shapely

from .bessel import bessel_zeros, is_integer_order
from .errors import BcNotSatisfiedOnAxis, DomainNotClosed
from .fields import HelmholtzField, combine
from .geometry import Domain, PolygonDomain, Rectangle

DIRICHLET, NEUMANN = "dirichlet", "neumann"


@dataclass
class CavityProblem:
    domain: Domain
    bc: str
    k: float

    def __post_init__(self):
        if self.k <= 0:
            raise ValueError("k must be positive")
        self.bc = self.bc.lower()
        if self.bc not in (DIRICHLET, NEUMANN):
            raise ValueError(f"unknown boundary condition {self.bc!r}")
        if isinstance(self.domain, PolygonDomain) and not self.domain.curve.closed:
            raise DomainNotClosed("cavity boundary curve is open")


@dataclass
class EigenpairReport:
    pde_residual: float
    bc_residuals: dict
    verdict: bool
    samples: dict = dc_field(default_factory=dict)
    tolerances: dict = dc_field(default_factory=dict)

    @property
    def bc_residual(self) -> float:
        return max(self.bc_residuals.values()) if self.bc_residuals else 0.0

    def to_dict(self):
        f = lambda x: float(f"{x:.15g}")
        return {"pdeResidual": f(self.pde_residual),
                "bcResiduals": {k: f(v) for k, v in self.bc_residuals.items()},
                "verdict": bool(self.verdict), "samples": self.samples,
                "tolerances": {k: f(v) for k, v in self.tolerances.items()}}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _bc_samples(domain: Domain, n_boundary: int):
    pts, nrm = domain.boundary(n_boundary)
    ok = np.all(np.isfinite(nrm), axis=1)
    return pts, nrm, ok


def verify_cavity_eigenpair(problem: CavityProblem, candidate: HelmholtzField, n_interior: int = 10_000,
                            n_boundary: int = 2000, seed: int = 0, pde_tol: float = 1e-6,
                            bc_tol: float = 1e-6) -> EigenpairReport:
    """Check ``Lap w + k^2 w = 0`` inside and the boundary condition on the boundary.

    Interior points are scrambled Sobol samples; boundary points are the
    domain's boundary samples (curve vertices for traced domains).  Vertices
    without a well-defined normal are skipped for the Neumann check.
    """
    dom = problem.domain
    k = problem.k
    inner = dom.sample_interior(n_interior, seed=seed)
    v, _, H = candidate.jet(inner)
    pde = float(np.max(np.abs(H[:, 0, 0] + H[:, 1, 1] + k * k * v)))
    pts, nrm, ok = _bc_samples(dom, n_boundary)
    vb, gb, _ = candidate.jet(pts)
    if problem.bc == DIRICHLET:
        bc = float(np.max(np.abs(vb)))
    else:
        bc = float(np.max(np.abs(np.sum(nrm[ok] * gb[ok], axis=1))))
    verdict = pde <= pde_tol and bc <= bc_tol
    return EigenpairReport(pde, {problem.bc: bc}, verdict,
                           {"interior": int(len(inner)), "boundary": int(len(pts))},
                           {"pde": pde_tol, "bc": bc_tol})


def itep_from_cavity(w: HelmholtzField, bc: str, a: float):
    """Transmission eigenpair ``(u, v)`` for ``A = a Id``, ``q = a`` built from a cavity eigenfunction."""
    if a <= 0:
        raise ValueError("contrast a must be positive")
    if abs(a - 1.0) < 1e-14:
        raise ValueError("contrast a = 1 gives no transmission problem")
    bc = bc.lower()
    if bc == DIRICHLET:
        return combine([w], [1.0 / a]), w
    if bc == NEUMANN:
        return w, w
    raise ValueError(f"unknown boundary condition {bc!r}")


def cavity_from_itep(u: HelmholtzField, v: HelmholtzField, a: float):
    """``(w_D, w_N) = (u - v, a u - v)``."""
    return combine([u, v], [1.0, -1.0]), combine([u, v], [a, -1.0])


# ---------------------------------------------------------------------------
# transmission eigenpairs for general media
# ---------------------------------------------------------------------------


def _grad_of(f, pts):
    out = f.jet(pts)
    return out[0], out[1]


def flux_divergence(medium, u, pts, step: float = 1e-5):
    """``div(A grad u)`` at ``pts``.

    Uses the analytic divergence of ``A`` with the Hessian of ``u`` when both
    exist, otherwise fourth-order central differences of the flux.
    """
    pts = np.asarray(pts, dtype=float)
    jet = u.jet(pts)
    if getattr(medium, "divA", None) is not None and len(jet) == 3 and jet[2] is not None:
        _, g, H = jet
        A = medium.A(pts)
        dA = medium.divA(pts)
        return np.einsum("nij,nij->n", A, H) + np.einsum("nj,nj->n", dA, g)

    def flux(p):
        return np.einsum("nij,nj->ni", medium.A(p), _grad_of(u, p)[1])

    out = 0.0
    for i, e in enumerate(np.eye(2)):
        d = step * e
        out = out + (-flux(pts + 2 * d)[:, i] + 8 * flux(pts + d)[:, i]
                     - 8 * flux(pts - d)[:, i] + flux(pts - 2 * d)[:, i]) / (12 * step)
    return out


def _laplacian(v, pts, step=1e-5):
    jet = v.jet(pts)
    if len(jet) == 3 and jet[2] is not None:
        return jet[0], jet[2][:, 0, 0] + jet[2][:, 1, 1]
    val = jet[0]
    lap = 0.0
    for e in np.eye(2):
        d = step * e
        lap = lap + (_grad_of(v, pts + d)[1] @ e - _grad_of(v, pts - d)[1] @ e) / (2 * step)
    return val, lap


def verify_itep(medium, k: float, u, v, domain: Domain | None = None, n_interior: int = 10_000,
                n_boundary: int = 2000, seed: int = 0, pde_tol: float = 1e-6, bc_tol: float = 1e-6,
                margin: float = 0.0) -> EigenpairReport:
    """Residuals of the four transmission equations.

    ``div(A grad u) + k^2 q u`` and ``Lap v + k^2 v`` are sampled inside,
    ``u - v`` and ``nu . A grad u - nu . grad v`` on the boundary.
    """
    dom = domain if domain is not None else medium.domain
    inner = dom.sample_interior(n_interior, seed=seed, margin=margin)
    uval = u.jet(inner)[0]
    r_u = np.abs(flux_divergence(medium, u, inner) + k * k * medium.q(inner) * uval)
    vval, lap = _laplacian(v, inner)
    r_v = np.abs(lap + k * k * vval)
    pts, nrm, ok = _bc_samples(dom, n_boundary)
    ub, gu = _grad_of(u, pts)
    vb, gv = _grad_of(v, pts)
    r_jump = np.abs(ub - vb)
    Agu = np.einsum("nij,nj->ni", medium.A(pts[ok]), gu[ok])
    r_flux = np.abs(np.sum(nrm[ok] * (Agu - gv[ok]), axis=1))
    res = {"dirichlet_jump": float(r_jump.max()), "flux_jump": float(r_flux.max())}
    pde = {"medium": float(r_u.max()), "free": float(r_v.max())}
    verdict = max(pde.values()) <= pde_tol and max(res.values()) <= bc_tol
    rep = EigenpairReport(max(pde.values()), res, verdict,
                          {"interior": int(len(inner)), "boundary": int(len(pts))},
                          {"pde": pde_tol, "bc": bc_tol})
    rep.pde_parts = pde
    return rep


# ---------------------------------------------------------------------------
# sectors
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SectorSpectrumEntry:
    m: int
    order: float
    zero_index: int
    k: float
    extendable: bool

    def to_dict(self):
        return {"m": self.m, "order": float(f"{self.order:.15g}"), "zeroIndex": self.zero_index,
                "k": float(f"{self.k:.15g}"), "extendable": self.extendable}


def sector_spectrum(alpha: float, ell: float, bc: str = DIRICHLET, count: int = 10) -> list:
    """Lowest ``count`` eigenvalues ``k`` of the sector of opening ``alpha`` and radius ``ell``.

    Eigenfunctions are ``J_nu(k r) sin(nu phi)`` (Dirichlet, ``m >= 1``) or
    ``J_nu(k r) cos(nu phi)`` (Neumann, ``m >= 0``) with ``nu = m pi / alpha``;
    one is entire exactly when ``nu`` is an integer.
    """
    if not (0 < alpha < 2 * math.pi):
        raise ValueError("opening angle must lie in (0, 2 pi)")
    if ell <= 0:
        raise ValueError("radius must be positive")
    bc = bc.lower()
    neumann = bc == NEUMANN
    entries = []
    m = 0 if neumann else 1
    while True:
        nu = m * math.pi / alpha
        entries.sort(key=lambda e: e.k)
        if len(entries) >= count and nu / ell > entries[count - 1].k:
            break
        zs = bessel_zeros(nu, count, derivative=neumann)
        ext = is_integer_order(nu, 1e-9)
        entries.extend(SectorSpectrumEntry(m, nu, s + 1, float(z) / ell, ext) for s, z in enumerate(zs))
        m += 1
    entries.sort(key=lambda e: (e.k, e.m))
    return entries[:count]


def sector_verdict(alpha: float, ell: float = 1.0, bc: str = DIRICHLET, count: int = 10) -> dict:
    """Summary of which sector eigenfunctions extend to entire solutions."""
    spec = sector_spectrum(alpha, ell, bc, count)
    n = math.pi / alpha
    pi_over_n = abs(n - round(n)) < 1e-9 and round(n) >= 1
    flags = [e.extendable for e in spec]
    return {"alpha": alpha, "all_extendable": all(flags), "any_extendable": any(flags),
            "alpha_in_pi_over_N": bool(pi_over_n), "nonscattering_set_empty": not any(flags),
            "entries": [e.to_dict() for e in spec]}


def sector_eigenfunction(entry: SectorSpectrumEntry, bc: str = DIRICHLET) -> HelmholtzField:
    """``J_nu(k r) sin(nu phi)`` or ``J_nu(k r) cos(nu phi)`` as a field with its branch cut."""
    from .fields import bessel_wave

    nu = entry.order
    phase = math.pi / (2 * nu) if bc.lower() == DIRICHLET else 0.0
    return bessel_wave(nu, entry.k, phase=phase)


def extendable_into(field: HelmholtzField, neighborhood: Domain) -> bool:
    """True when no branch cut of ``field`` meets ``neighborhood``."""
    if not field.cuts:
        return True
    poly = neighborhood.polygon()
    lo, hi = neighborhood.bbox()
    reach = 10.0 * (np.linalg.norm(np.asarray(hi) - np.asarray(lo)) + 1.0)
    for c in field.cuts:
        o = np.asarray(c.origin)
        far = o + reach * np.asarray(c.direction)
        if poly.intersects(shapely.LineString([o, far])):
            return False
    return True


# ---------------------------------------------------------------------------
# reflection across an axis-aligned line
# ---------------------------------------------------------------------------


class ReflectedField(HelmholtzField):
    """Odd (Dirichlet) or even (Neumann) extension of ``base`` across a line.

    ``axis`` is ``("y", c)`` for the line ``y = c`` or ``("x", c)`` for
    ``x = c``; ``keep`` is +1 or -1, the side on which ``base`` is used as is.
    """

    def __init__(self, base, axis, bc, keep=1):
        self.base = base
        self.axis = axis
        self.bc = bc
        self.keep = keep
        self.k = base.k

    @property
    def is_complex(self):
        return self.base.is_complex

    def _jet(self, pts):
        coord, c = self.axis
        j = 1 if coord == "y" else 0
        M = np.eye(2)
        M[j, j] = -1.0
        mirror = (pts[:, j] - c) * self.keep < 0
        q = pts.copy()
        q[mirror, j] = 2 * c - q[mirror, j]
        v, g, H = self.base._jet(q)
        s = -1.0 if self.bc == DIRICHLET else 1.0
        v = np.where(mirror, s * v, v)
        g = g.copy()
        H = H.copy()
        g[mirror] = s * (g[mirror] @ M)
        H[mirror] = s * np.einsum("ia,nij,jb->nab", M, H[mirror], M)
        return v, g, H


def reflect_extend(field: HelmholtzField, axis, bc: str, segment, keep: int = 1, n: int = 400,
                   tol: float = 1e-8) -> ReflectedField:
    """Reflect ``field`` across an axis-aligned line after checking the boundary condition there.

    ``segment`` gives the parameter range along the line on which the
    condition must hold.
    """
    coord, c = axis
    bc = bc.lower()
    t = np.linspace(segment[0], segment[1], n)
    pts = np.column_stack([t, np.full(n, c)]) if coord == "y" else np.column_stack([np.full(n, c), t])
    v, g, _ = field.jet(pts)
    j = 1 if coord == "y" else 0
    res = np.max(np.abs(v)) if bc == DIRICHLET else np.max(np.abs(g[:, j]))
    if res > tol:
        raise BcNotSatisfiedOnAxis(f"{bc} condition fails on {coord}={c}: residual {res:.3g}")
    return ReflectedField(field, axis, bc, keep)


def rectangle_eigenfunction(m: int, n: int, rect: Rectangle, bc: str = DIRICHLET):
    """Separable eigenfunction of a rectangle and its eigenvalue ``k``."""
    from .fields import TrigTerm, TrigProducts

    Lx, Ly = rect.x1 - rect.x0, rect.y1 - rect.y0
    wx, wy = m * math.pi / Lx, n * math.pi / Ly
    k = math.hypot(wx, wy)
    if bc.lower() == DIRICHLET:
        term = TrigTerm(1.0, "sin", wx, -wx * rect.x0, "sin", wy, -wy * rect.y0)
    else:
        term = TrigTerm(1.0, "cos", wx, -wx * rect.x0, "cos", wy, -wy * rect.y0)
    return TrigProducts(k, (term,)), k
