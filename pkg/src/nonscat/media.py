"""Transformation media and explicit anisotropic transmission examples.

A diffeomorphism ``Psi`` of the closed domain that fixes the boundary
pointwise defines ``A = (DPsi DPsi^T / |det DPsi|) o Psi^{-1}`` and
``q = (1 / |det DPsi|) o Psi^{-1}``; then ``u = v o Psi^{-1}`` satisfies
``div(A grad u) + k^2 q u = 0`` for every Helmholtz solution ``v``.
"""
from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field as dc_field
from typing import Callable

import numpy as np

from .errors import CannotSatisfyJacobianBound, ConditionSetViolated, InversionFailure
from .fields import HelmholtzField, TrigProducts, TrigTerm, PlaneWaves
from .geometry import Disk, Domain, Rectangle

NEWTON_TOL = 1e-12
NEWTON_MAXITER = 50


def _pts(p):
    return np.asarray(p, dtype=float).reshape(-1, 2)


# ---------------------------------------------------------------------------
# diffeomorphisms
# ---------------------------------------------------------------------------


@dataclass
class Diffeo:
    """Map ``Psi`` with analytic Jacobian; identity outside ``domain``."""

    forward: Callable
    jacobian: Callable
    domain: Domain
    inverse: Callable | None = None
    name: str = "diffeo"
    params: dict = dc_field(default_factory=dict)

    def __call__(self, pts):
        return self.forward(_pts(pts))

    def invert(self, pts) -> np.ndarray:
        """``Psi^{-1}``: closed form when available, else Newton from the query point."""
        y = _pts(pts)
        if self.inverse is not None:
            return self.inverse(y)
        x = y.copy()
        for _ in range(NEWTON_MAXITER):
            r = self.forward(x) - y
            if np.max(np.abs(r), initial=0.0) <= NEWTON_TOL:
                return x
            x = x - np.linalg.solve(self.jacobian(x), r[..., None])[..., 0]
        r = self.forward(x) - y
        if np.max(np.abs(r), initial=0.0) > NEWTON_TOL:
            raise InversionFailure(f"Newton inversion residual {np.max(np.abs(r)):.3g} after "
                                   f"{NEWTON_MAXITER} iterations")
        return x

    def check(self, n_boundary: int = 400, n_det: int = 200) -> dict:
        """Boundary fixity and the minimum Jacobian determinant on a grid."""
        b, _ = self.domain.boundary(n_boundary)
        fix = float(np.max(np.abs(self.forward(b) - b)))
        return {"boundary_fixity": fix, "min_det": _min_det(self, n_det)}


def _min_det(psi: Diffeo, n: int = 200) -> float:
    lo, hi = psi.domain.bbox()
    xs = np.linspace(lo[0], hi[0], n)
    ys = np.linspace(lo[1], hi[1], n)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    p = np.column_stack([X.ravel(), Y.ravel()])
    p = p[psi.domain.contains(p)]
    return float(np.min(np.linalg.det(psi.jacobian(p))))


def identity_diffeo(domain: Domain) -> Diffeo:
    return Diffeo(lambda p: _pts(p).copy(), lambda p: np.tile(np.eye(2), (len(_pts(p)), 1, 1)),
                  domain, lambda p: _pts(p).copy(), "identity")


def square_diffeo(alpha: float) -> Diffeo:
    """``Psi(x, y) = (x + alpha (1 - x^2)(1 - y^2), y)`` on ``(-1, 1)^2``."""
    if not -0.5 < alpha < 0.5:
        raise ValueError("alpha must lie in the open interval (-1/2, 1/2)")
    a = float(alpha)

    def fwd(p):
        x, y = p[:, 0], p[:, 1]
        return np.column_stack([x + a * (1 - x * x) * (1 - y * y), y])

    def jac(p):
        x, y = p[:, 0], p[:, 1]
        J = np.zeros((len(p), 2, 2))
        J[:, 0, 0] = 1 - 2 * a * x * (1 - y * y)
        J[:, 0, 1] = -2 * a * y * (1 - x * x)
        J[:, 1, 1] = 1.0
        return J

    def inv(p):
        X, Y = p[:, 0], p[:, 1]
        c = a * (1 - Y * Y)
        # c x^2 - x + (X - c) = 0, root continuous at c = 0
        D = 1 + 4 * c * (c - X)
        x = 2 * (X - c) / (1 + np.sqrt(np.maximum(D, 0.0)))
        return np.column_stack([x, Y])

    return Diffeo(fwd, jac, Rectangle(-1.0, 1.0, -1.0, 1.0), inv, "square", {"alpha": a})


def square_closed_form(alpha: float, pts):
    """Displayed closed forms of ``A o Psi`` and ``q o Psi`` at preimage points ``pts``."""
    p = _pts(pts)
    x, y = p[:, 0], p[:, 1]
    d = 1 - 2 * alpha * x * (1 - y * y)
    o = -2 * alpha * y * (1 - x * x)
    A = np.empty((len(p), 2, 2))
    A[:, 0, 0] = (d * d + 4 * alpha ** 2 * y * y * (1 - x * x) ** 2) / d
    A[:, 0, 1] = A[:, 1, 0] = o / d
    A[:, 1, 1] = 1 / d
    return A, 1 / d


def default_profile():
    """``f(r) = (1 - r^2)^2`` on ``r < 1`` and zero beyond, with ``f'``."""
    f = lambda r: np.where(r < 1, (1 - r * r) ** 2, 0.0)
    df = lambda r: np.where(r < 1, -4 * r * (1 - r * r), 0.0)
    return f, df


def disk_diffeo(f=None, df=None) -> Diffeo:
    """``Psi(r, theta) = (r, theta + f(r))`` on the unit disk."""
    if f is None:
        f, df = default_profile()

    def rot(p, sign):
        r = np.hypot(p[:, 0], p[:, 1])
        t = sign * f(r)
        c, s = np.cos(t), np.sin(t)
        return np.column_stack([c * p[:, 0] - s * p[:, 1], s * p[:, 0] + c * p[:, 1]])

    def jac(p):
        r = np.hypot(p[:, 0], p[:, 1])
        t = f(r)
        c, s = np.cos(t), np.sin(t)
        R = np.stack([np.stack([c, -s], -1), np.stack([s, c], -1)], -2)
        safe = np.where(r > 0, r, 1.0)
        w = np.where(r > 0, df(r) / safe, 0.0)
        Jx = np.column_stack([-p[:, 1], p[:, 0]])
        inner = np.eye(2) + w[:, None, None] * Jx[:, :, None] * p[:, None, :]
        return R @ inner

    return Diffeo(lambda p: rot(p, 1.0), jac, Disk(0.0, 0.0, 1.0), lambda p: rot(p, -1.0), "disk")


def disk_closed_form(pts, df=None):
    """Closed form of ``A`` for the disk twist, at physical points ``pts``."""
    if df is None:
        df = default_profile()[1]
    p = _pts(pts)
    x, y = p[:, 0], p[:, 1]
    r = np.hypot(x, y)
    fp = df(r)
    w = np.where(r > 0, fp / np.where(r > 0, r, 1.0), 0.0)
    M1 = np.stack([np.stack([2 * x * y, y * y - x * x], -1), np.stack([y * y - x * x, -2 * x * y], -1)], -2)
    M2 = np.stack([np.stack([y * y, -x * y], -1), np.stack([-x * y, x * x], -1)], -2)
    return np.eye(2) - w[:, None, None] * M1 + (fp ** 2)[:, None, None] * M2


def bump_map(center=(0.0, 0.0), radius: float = 0.5, direction=(1.0, 0.5), amplitude: float = 1.0):
    """``Phi(x) = amplitude * (1 - |x - c|^2 / rho^2)^3 * direction`` inside ``B_rho(c)``, zero outside.

    Returns ``(phi, dphi)``; the map is ``C^2``.
    """
    c = np.asarray(center, dtype=float)
    d = np.asarray(direction, dtype=float)

    def phi(p):
        s = np.sum((p - c) ** 2, axis=1) / radius ** 2
        b = np.where(s < 1, (1 - s) ** 3, 0.0)
        return amplitude * b[:, None] * d

    def dphi(p):
        s = np.sum((p - c) ** 2, axis=1) / radius ** 2
        db = np.where(s < 1, -3 * (1 - s) ** 2, 0.0)
        gb = (db * 2 / radius ** 2)[:, None] * (p - c)
        return amplitude * d[None, :, None] * gb[:, None, :]

    return phi, dphi


def small_perturb_diffeo(phi, dphi, eps: float, domain: Domain, n: int = 200, max_halvings: int = 20):
    """``Psi = Id + eps Phi`` with ``eps`` halved until ``min det DPsi > 1/2``.

    Returns the diffeomorphism; the accepted ``eps`` is in ``params``.
    """
    e = float(eps)
    for _ in range(max_halvings + 1):
        psi = Diffeo(lambda p, e=e: p + e * phi(p), lambda p, e=e: np.eye(2) + e * dphi(p), domain,
                     None, "perturbation", {"eps": e, "requested_eps": float(eps)})
        if e == 0.0 or _min_det(psi, n) > 0.5:
            if e == 0.0:
                psi.inverse = lambda p: _pts(p).copy()
            return psi
        e *= 0.5
    raise CannotSatisfyJacobianBound(f"min det DPsi stays <= 1/2 after {max_halvings} halvings of eps={eps}")


# ---------------------------------------------------------------------------
# media
# ---------------------------------------------------------------------------


@dataclass
class MediumSpec:
    """Coefficients ``(A, q)`` on ``domain``; background ``(Id, 1)`` outside."""

    domain: Domain
    A_fn: Callable
    q_fn: Callable
    provenance: str = "explicit-example"
    name: str = "medium"
    params: dict = dc_field(default_factory=dict)
    divA_fn: Callable | None = None
    psi: Diffeo | None = None

    def A(self, pts) -> np.ndarray:
        return self.A_fn(_pts(pts))

    def q(self, pts) -> np.ndarray:
        return self.q_fn(_pts(pts))

    @property
    def divA(self):
        return self.divA_fn

    def A_full(self, pts) -> np.ndarray:
        p = _pts(pts)
        out = np.tile(np.eye(2), (len(p), 1, 1))
        inside = self.domain.contains(p)
        if np.any(inside):
            out[inside] = self.A(p[inside])
        return out

    def q_full(self, pts) -> np.ndarray:
        p = _pts(pts)
        out = np.ones(len(p))
        inside = self.domain.contains(p)
        if np.any(inside):
            out[inside] = self.q(p[inside])
        return out

    def check_assumptions(self, n: int = 4000) -> dict:
        p = self.domain.sample_interior(n)
        A = self.A(p)
        sym = float(np.max(np.abs(A - np.swapaxes(A, 1, 2))))
        lam = float(np.min(np.linalg.eigvalsh(0.5 * (A + np.swapaxes(A, 1, 2)))))
        qmin = float(np.min(self.q(p)))
        return {"symmetry": sym, "min_eig": lam, "min_q": qmin,
                "ok": sym <= 1e-14 * max(1.0, float(np.max(np.abs(A)))) and lam > 1e-8 and qmin > 0}

    def to_dict(self) -> dict:
        params = {k: (v.tolist() if isinstance(v, np.ndarray) else v) for k, v in self.params.items()}
        return {"name": self.name, "provenance": self.provenance, "params": params,
                "domain": self.domain.to_dict()}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def to_csv(self, x, y) -> str:
        """Sampled tensors ``x,y,A11,A12,A22,q`` with the background outside."""
        X, Y = np.meshgrid(np.asarray(x, dtype=float), np.asarray(y, dtype=float), indexing="ij")
        p = np.column_stack([X.ravel(), Y.ravel()])
        A = self.A_full(p)
        q = self.q_full(p)
        buf = io.StringIO()
        buf.write("x,y,A11,A12,A22,q\n")
        for pp, a, qq in zip(p, A, q):
            buf.write(f"{pp[0]:.15g},{pp[1]:.15g},{a[0, 0]:.15g},{a[0, 1]:.15g},{a[1, 1]:.15g},{qq:.15g}\n")
        return buf.getvalue()


def constant_medium(domain: Domain, a: float, q: float | None = None, name: str = "isotropic") -> MediumSpec:
    """``A = a Id``, ``q = q`` (default ``a``) on ``domain``."""
    q = a if q is None else q
    return MediumSpec(domain, lambda p: np.tile(a * np.eye(2), (len(p), 1, 1)), lambda p: np.full(len(p), float(q)),
                      "constant-isotropic", name, {"a": a, "q": q}, lambda p: np.zeros((len(p), 2)))


def build_transform_medium(psi: Diffeo) -> MediumSpec:
    def A(p):
        J = psi.jacobian(psi.invert(p))
        return J @ np.swapaxes(J, 1, 2) / np.abs(np.linalg.det(J))[:, None, None]

    def q(p):
        return 1.0 / np.abs(np.linalg.det(psi.jacobian(psi.invert(p))))

    return MediumSpec(psi.domain, A, q, "diffeo-derived", psi.name, dict(psi.params), None, psi)


def check_structural_identities(medium: MediumSpec, n_interior: int = 10_000, n_boundary: int = 2000) -> dict:
    """Determinant law, boundary normal law, and ``|A nu - nu|`` at corners.

    ``boundaryNu`` is the sup of ``|(DPsi^T / |det DPsi| - Id) nu|`` over
    boundary samples, using each edge's own normal at corners.
    ``cornerANu`` is the sup of ``|A nu - nu|`` over the corners with both
    one-sided normals.
    """
    if medium.provenance != "diffeo-derived" or medium.psi is None:
        raise ValueError("structural identities apply to diffeo-derived media")
    psi = medium.psi
    dom = medium.domain
    p = dom.sample_interior(n_interior)
    det_law = float(np.max(np.abs(np.linalg.det(medium.A(p)) - 1.0)))
    b, nu = dom.boundary(n_boundary)
    J = psi.jacobian(b)
    M = np.swapaxes(J, 1, 2) / np.abs(np.linalg.det(J))[:, None, None]
    bnu = float(np.max(np.linalg.norm(np.einsum("nij,nj->ni", M, nu) - nu, axis=1)))
    out = {"detLaw": det_law, "boundaryNu": bnu}
    corners = dom.corners()
    if len(corners):
        cnu = 0.0
        for c in corners:
            at = np.linalg.norm(b - c, axis=1) < 1e-12
            A = _one_sided_A(psi, c)
            for n in nu[at]:
                cnu = max(cnu, float(np.linalg.norm(A @ n - n)))
        out["cornerANu"] = cnu
    return out


def _one_sided_A(psi: Diffeo, x):
    J = psi.jacobian(np.asarray(x, dtype=float)[None, :])[0]
    return J @ J.T / abs(np.linalg.det(J))


# ---------------------------------------------------------------------------
# pulled-back fields
# ---------------------------------------------------------------------------


class PulledField(HelmholtzField):
    """``u = v o Psi^{-1}`` inside the domain and ``v`` outside.

    The jet carries value and gradient; the Hessian slot is ``None`` because
    ``u`` solves the medium equation, not the free Helmholtz equation.
    """

    def __init__(self, psi: Diffeo, v: HelmholtzField):
        self.psi = psi
        self.v = v
        self.k = v.k

    @property
    def is_complex(self):
        return self.v.is_complex

    @property
    def cuts(self):
        return self.v.cuts

    def _jet(self, pts):
        x = self.psi.invert(pts)
        val, g, _ = self.v.jet(x)
        J = self.psi.jacobian(x)
        # grad u = DPsi^{-T} grad v
        gu = np.linalg.solve(np.swapaxes(J, 1, 2), g[..., None])[..., 0]
        return val, gu, None


def pull_field(psi: Diffeo, v: HelmholtzField) -> PulledField:
    return PulledField(psi, v)


def pulled_field_report(medium: MediumSpec, v: HelmholtzField, n_interior: int = 2000, n_boundary: int = 400,
                        step: float = 1e-5) -> dict:
    """PDE residual inside plus boundary value and flux mismatch."""
    from .spectra import flux_divergence

    u = pull_field(medium.psi, v)
    k = v.k
    p = medium.domain.sample_interior(n_interior)
    uval = u.jet(p)[0]
    pde = np.abs(flux_divergence(medium, u, p, step=step) + k * k * medium.q(p) * uval)
    scale = max(1.0, float(np.max(np.abs(uval))))
    b, nu = medium.domain.boundary(n_boundary)
    ub, gu, _ = u.jet(b)
    vb, gv, _ = v.jet(b)
    J = medium.psi.jacobian(b)
    A = J @ np.swapaxes(J, 1, 2) / np.abs(np.linalg.det(J))[:, None, None]
    flux = np.abs(np.einsum("ni,nij,nj->n", nu, A, gu) - np.einsum("ni,ni->n", nu, gv))
    return {"pde": float(pde.max()), "pde_relative": float(pde.max()) / (k * k * scale),
            "boundary_value": float(np.max(np.abs(ub - vb))), "boundary_flux": float(flux.max())}


# ---------------------------------------------------------------------------
# explicit anisotropic examples
# ---------------------------------------------------------------------------


@dataclass
class ExplicitExample:
    medium: MediumSpec
    generator: Callable
    info: dict = dc_field(default_factory=dict)


def _const_A(M):
    M = np.asarray(M, dtype=float)
    return lambda p: np.tile(M, (len(p), 1, 1))


def _const_q(q):
    return lambda p: np.full(len(p), float(q))


def _zero_div(p):
    return np.zeros((len(p), 2))


def adiag_condition_set(a1: float, a2: float, q0: float, m: int = 1, n: int = 1) -> int:
    """Index (1, 2 or 3) of the first condition set satisfied by ``diag(a1, a2), q0``."""
    checks = []
    one1, one2 = abs(a1 - 1) <= 1e-14, abs(a2 - 1) <= 1e-14
    balance = abs(m * m * (q0 - a1) - n * n * (a2 - q0)) <= 1e-12 * max(1.0, abs(q0), abs(a1), abs(a2))
    if not one1 and not one2 and balance and (m, n) != (0, 0):
        return 1
    checks.append(f"set 1: needs a1 != 1, a2 != 1 and m^2 (q0 - a1) = n^2 (a2 - q0); "
                  f"got {m * m * (q0 - a1):.6g} vs {n * n * (a2 - q0):.6g}")
    if one1 and not one2 and (q0 - 1) * (a2 - 1) > 0:
        return 2
    checks.append("set 2: needs a1 = 1, a2 != 1 and (q0 - 1)(a2 - 1) > 0")
    if one2 and not one1 and (q0 - 1) * (a1 - 1) > 0:
        return 3
    checks.append("set 3: needs a2 = 1, a1 != 1 and (q0 - 1)(a1 - 1) > 0")
    raise ConditionSetViolated("; ".join(checks))


def _separable_pair(k: float, m: int, c1: float, c2: float, swap: bool) -> TrigProducts:
    """``(c1 cos(b s) + c2 sin(b s)) cos(m t)`` with ``b^2 = k^2 - m^2``; ``swap`` exchanges x and y."""
    b2 = k * k - m * m
    if b2 >= 0:
        b = math.sqrt(b2)
        f1, f2 = ("cos", "sin")
    else:
        b = math.sqrt(-b2)
        f1, f2 = ("cosh", "sinh")
    terms = []
    for c, f in ((c1, f1), (c2, f2)):
        if c == 0 or (b == 0 and f in ("sin", "sinh")):
            continue
        if swap:
            terms.append(TrigTerm(c, "cos", float(m), 0.0, f, b, 0.0))
        else:
            terms.append(TrigTerm(c, f, b, 0.0, "cos", float(m), 0.0))
    return TrigProducts(k, tuple(terms))


def adiag_square(a1: float, a2: float, q0: float, m: int = 1, n: int = 1, c1: float = 1.0,
                 c2: float = 0.5) -> ExplicitExample:
    """``A = diag(a1, a2)``, ``q = q0`` on ``(0, pi)^2``.

    Set 1 yields ``k = kappa sqrt(m^2 + n^2)`` for integers ``kappa``.
    Sets 2 and 3 yield one ``k`` per ``m``.
    """
    for v in (a1, a2, q0):
        if v <= 0:
            raise ConditionSetViolated("coefficients must be positive")
    which = adiag_condition_set(a1, a2, q0, m, n)
    dom = Rectangle(0.0, math.pi, 0.0, math.pi)
    med = MediumSpec(dom, _const_A(np.diag([a1, a2])), _const_q(q0), "explicit-example", "AdiagSquare",
                     {"a1": a1, "a2": a2, "q0": q0, "m": m, "n": n, "set": which}, _zero_div)

    def gen(index: int = 1):
        if which == 1:
            kap = int(index)
            k = kap * math.hypot(m, n)
            v = TrigProducts(k, (TrigTerm(1.0, "cos", kap * m, 0.0, "cos", kap * n, 0.0),))
            return k, v, v
        mm = int(index)
        if which == 2:
            k = mm * math.sqrt((a2 - 1) / (q0 - 1))
        else:
            k = mm * math.sqrt((a1 - 1) / (q0 - 1))
        v = _separable_pair(k, mm, c1, c2, swap=(which == 3))
        return k, v, v

    return ExplicitExample(med, gen, {"set": which})


def rank_deficient(U=None, A1=5.0, domain: Domain | None = None, c1: float = 1.0, c2: float = 0.3) -> ExplicitExample:
    """``A = U diag(1, A1) U^T``, ``q = 1``; every ``k > 0`` is a transmission eigenvalue."""
    U = np.eye(2) if U is None else np.asarray(U, dtype=float)
    if np.max(np.abs(U @ U.T - np.eye(2))) > 1e-12:
        raise ConditionSetViolated("U must be orthogonal")
    if A1 <= 0:
        raise ConditionSetViolated("A1 must be positive definite")
    dom = domain if domain is not None else Rectangle(0.0, 1.0, 0.0, 1.0)
    A = U @ np.diag([1.0, A1]) @ U.T
    med = MediumSpec(dom, _const_A(A), _const_q(1.0), "explicit-example", "RankDeficient",
                     {"U": U, "A1": A1}, _zero_div)
    e = U[:, 0]

    def gen(k: float):
        d = (float(e[0]), float(e[1]))
        amps = (0.5 * (c1 - 1j * c2), 0.5 * (c1 + 1j * c2))
        v = PlaneWaves(float(k), (d, (-d[0], -d[1])), amps)
        return float(k), v, v

    return ExplicitExample(med, gen)


def slab(b1: float = 0.0, b2: float = 1.0, a0: float = 2.0, A22: float = 3.0, height=(0.0, 1.0)) -> ExplicitExample:
    """``A = diag(a0, A22)``, ``q = a0`` on ``(b1, b2) x D``; ``k = m pi / (b2 - b1)``."""
    if a0 <= 0 or A22 <= 0:
        raise ConditionSetViolated("a0 and A22 must be positive")
    if b2 <= b1:
        raise ConditionSetViolated("need b1 < b2")
    dom = Rectangle(b1, b2, height[0], height[1])
    med = MediumSpec(dom, _const_A(np.diag([a0, A22])), _const_q(a0), "explicit-example", "Slab",
                     {"b1": b1, "b2": b2, "a0": a0, "A22": A22}, _zero_div)

    def gen(m: int = 1):
        k = m * math.pi / (b2 - b1)
        v = TrigProducts(k, (TrigTerm(1.0, "cos", k, -k * b1, "cos", 0.0, 0.0),))
        return k, v, v

    return ExplicitExample(med, gen)


def build_explicit_example(name: str, params: dict | None = None) -> ExplicitExample:
    params = dict(params or {})
    key = name.lower().replace("_", "").replace("-", "")
    if key == "adiagsquare":
        return adiag_square(**params)
    if key == "rankdeficient":
        return rank_deficient(**params)
    if key == "slab":
        return slab(**params)
    raise ValueError(f"unknown explicit example {name!r}")


def medium_from_dict(d: dict) -> MediumSpec:
    """Rebuild a medium from its analytic description."""
    from .geometry import domain_from_dict

    kind = d["kind"]
    if kind == "isotropic":
        return constant_medium(domain_from_dict(d["domain"]), float(d["a"]), d.get("q"))
    if kind == "square-diffeo":
        return build_transform_medium(square_diffeo(float(d["alpha"])))
    if kind == "disk-diffeo":
        return build_transform_medium(disk_diffeo())
    if kind == "explicit":
        return build_explicit_example(d["name"], d.get("params", {})).medium
    if kind == "background":
        return constant_medium(domain_from_dict(d["domain"]), 1.0, 1.0, "background")
    raise ValueError(f"unknown medium kind {kind!r}")
