"""Closed-form solutions of the Helmholtz equation ``Lap v + k^2 v = 0``.

Every field exposes ``jet(points)`` returning value, gradient and Hessian
arrays of shapes ``(n,)``, ``(n, 2)`` and ``(n, 2, 2)``; all derivatives are
analytic.  Fractional-order Bessel terms are smooth only off a set of rays
(``cuts``); evaluating within ``CUT_TOL`` of a ray raises ``BranchCutHit``
unless ``strict=False`` is passed.
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np

from .bessel import bessel_first_zero, besselj_derivs, is_integer_order
from .errors import BranchCutHit, WavenumberMismatch
from .geometry import rotation

CUT_TOL = 1e-12


@dataclass(frozen=True)
class Ray:
    origin: tuple
    direction: tuple

    def distance(self, pts: np.ndarray) -> np.ndarray:
        o = np.asarray(self.origin)
        d = np.asarray(self.direction)
        rel = pts - o
        t = np.maximum(rel @ d, 0.0)
        return np.linalg.norm(rel - t[:, None] * d, axis=1)

    def to_list(self):
        return [list(map(float, self.origin)), list(map(float, self.direction))]


@dataclass(frozen=True)
class FieldJet:
    value: float
    grad: np.ndarray
    hess: np.ndarray


def cut_distance(cuts, pts) -> np.ndarray:
    pts = np.asarray(pts, dtype=float).reshape(-1, 2)
    if not cuts:
        return np.full(len(pts), np.inf)
    return np.min([r.distance(pts) for r in cuts], axis=0)


class HelmholtzField:
    """Base class; subclasses implement ``_jet``."""

    k: float
    is_complex = False

    @property
    def cuts(self) -> tuple:
        return ()

    def jet(self, points, strict: bool = True):
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        if strict and self.cuts:
            d = cut_distance(self.cuts, pts)
            if np.any(d <= CUT_TOL):
                bad = pts[np.argmin(d)]
                raise BranchCutHit(f"point {bad.tolist()} lies on a branch cut")
        return self._jet(pts)

    def __call__(self, points, strict: bool = True):
        return self.jet(points, strict=strict)[0]

    def value(self, points, strict: bool = True):
        return self.jet(points, strict=strict)[0]

    def grad(self, points, strict: bool = True):
        return self.jet(points, strict=strict)[1]

    def terms(self) -> list:
        return [self]

    def to_dict(self) -> dict:
        raise NotImplementedError

    def _jet(self, pts):
        raise NotImplementedError

    def __add__(self, other):
        return combine([self, other], [1.0, 1.0])

    def __rmul__(self, c):
        return combine([self], [c])


def eval_jet(field: HelmholtzField, point) -> FieldJet:
    v, g, h = field.jet(np.asarray(point, dtype=float).reshape(1, 2))
    val = v[0] if field.is_complex else float(np.real(v[0]))
    return FieldJet(val, g[0], h[0])


def cut_jump_probe(field: HelmholtzField, cut_index: int = 0, distance: float = 0.5, eps: float = 1e-7) -> dict:
    """Jumps of ``v`` and of its derivative normal to a cut, measured at ``distance`` along the ray.

    A nonzero derivative jump shows the field has no analytic continuation
    across the ray.
    """
    cut = field.cuts[cut_index]
    o, d = np.asarray(cut.origin, dtype=float), np.asarray(cut.direction, dtype=float)
    n = np.array([-d[1], d[0]])
    p = o + distance * d
    v, g, _ = field.jet(np.vstack([p + eps * n, p - eps * n]), strict=False)
    return {"point": p.tolist(), "value_jump": float(abs(v[0] - v[1])),
            "normal_derivative_jump": float(abs((g[0] - g[1]) @ n))}


def helmholtz_residual(field: HelmholtzField, points, strict: bool = True) -> np.ndarray:
    v, _, h = field.jet(points, strict=strict)
    return np.abs(h[:, 0, 0] + h[:, 1, 1] + field.k ** 2 * v)


# ---------------------------------------------------------------------------
# plane waves
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PlaneWaves(HelmholtzField):
    """``sum_j A_j exp(i k d_j . x)`` with unit directions ``d_j``."""

    k: float
    directions: tuple
    amplitudes: tuple
    is_complex = True

    def __post_init__(self):
        if self.k <= 0:
            raise ValueError("k must be positive")
        d = np.asarray(self.directions, dtype=float).reshape(-1, 2)
        d = d / np.linalg.norm(d, axis=1, keepdims=True)
        object.__setattr__(self, "directions", tuple(map(tuple, d)))
        object.__setattr__(self, "amplitudes", tuple(complex(a) for a in self.amplitudes))

    def _jet(self, pts):
        d = np.asarray(self.directions)
        amp = np.asarray(self.amplitudes)
        e = amp[None, :] * np.exp(1j * self.k * (pts @ d.T))
        val = e.sum(axis=1)
        grad = 1j * self.k * (e @ d)
        hess = -self.k ** 2 * np.einsum("nj,ja,jb->nab", e, d, d)
        return val, grad, hess

    def to_dict(self):
        return {
            "k": self.k,
            "kind": "planewaves",
            "directions": [list(x) for x in self.directions],
            "amplitudes": [[a.real, a.imag] for a in self.amplitudes],
        }


def sine_product_planewaves(m: int = 1, n: int = 1) -> PlaneWaves:
    """Four plane waves summing to ``4 sin(m pi x) sin(n pi y)``."""
    k = math.pi * math.hypot(m, n)
    dirs = [(m, -n), (-m, n), (m, n), (-m, -n)]
    return PlaneWaves(k, tuple(dirs), (1, 1, -1, -1))


def plane_wave(k: float, direction=(1.0, 0.0), amplitude: complex = 1.0) -> PlaneWaves:
    return PlaneWaves(k, (tuple(direction),), (amplitude,))


# ---------------------------------------------------------------------------
# separable trig / hyperbolic products
# ---------------------------------------------------------------------------

_FUNCS = {
    "cos": (np.cos, lambda t: -np.sin(t), lambda t: -np.cos(t), 1.0),
    "sin": (np.sin, np.cos, lambda t: -np.sin(t), 1.0),
    "cosh": (np.cosh, np.sinh, np.cosh, -1.0),
    "sinh": (np.sinh, np.cosh, np.sinh, -1.0),
}


@dataclass(frozen=True)
class TrigTerm:
    """``coef * fx(wx x + px) * fy(wy y + py)``."""

    coef: float
    fx: str = "cos"
    wx: float = 0.0
    px: float = 0.0
    fy: str = "cos"
    wy: float = 0.0
    py: float = 0.0

    def k2(self) -> float:
        return _FUNCS[self.fx][3] * self.wx ** 2 + _FUNCS[self.fy][3] * self.wy ** 2


@dataclass(frozen=True)
class TrigProducts(HelmholtzField):
    k: float
    terms_: tuple

    def __post_init__(self):
        if self.k <= 0:
            raise ValueError("k must be positive")
        for t in self.terms_:
            if t.fx not in _FUNCS or t.fy not in _FUNCS:
                raise ValueError(f"unknown factor in {t}")
            if abs(t.k2() - self.k ** 2) > 1e-12 * max(1.0, self.k ** 2):
                raise WavenumberMismatch(f"term {t} solves the equation with k^2={t.k2()}, not {self.k ** 2}")

    def _jet(self, pts):
        x, y = pts[:, 0], pts[:, 1]
        val = np.zeros(len(pts))
        grad = np.zeros((len(pts), 2))
        hess = np.zeros((len(pts), 2, 2))
        for t in self.terms_:
            f0, f1, f2, _ = _FUNCS[t.fx]
            g0, g1, g2, _ = _FUNCS[t.fy]
            ax, ay = t.wx * x + t.px, t.wy * y + t.py
            F, Fp, Fpp = f0(ax), t.wx * f1(ax), t.wx ** 2 * f2(ax)
            G, Gp, Gpp = g0(ay), t.wy * g1(ay), t.wy ** 2 * g2(ay)
            c = t.coef
            val += c * F * G
            grad[:, 0] += c * Fp * G
            grad[:, 1] += c * F * Gp
            hess[:, 0, 0] += c * Fpp * G
            hess[:, 1, 1] += c * F * Gpp
            hess[:, 0, 1] += c * Fp * Gp
        hess[:, 1, 0] = hess[:, 0, 1]
        return val, grad, hess

    def terms(self):
        return [TrigProducts(self.k, (t,)) for t in self.terms_]

    def to_dict(self):
        return {"k": self.k, "kind": "trig", "terms": [vars(t).copy() for t in self.terms_]}


def trig(k: float, *terms) -> TrigProducts:
    return TrigProducts(k, tuple(t if isinstance(t, TrigTerm) else TrigTerm(*t) for t in terms))


def sin_sin(wx: float = 1.0, wy: float = 1.0, coef: float = 1.0) -> TrigProducts:
    return trig(math.hypot(wx, wy), TrigTerm(coef, "sin", wx, 0.0, "sin", wy, 0.0))


def cos_cos(wx: float = 1.0, wy: float = 1.0, coef: float = 1.0) -> TrigProducts:
    return trig(math.hypot(wx, wy), TrigTerm(coef, "cos", wx, 0.0, "cos", wy, 0.0))


def neg_cos_sum() -> TrigProducts:
    """``-(cos x + cos y)``, a solution with k = 1."""
    return trig(1.0, TrigTerm(-1.0, "cos", 1.0, 0.0, "cos", 0.0, 0.0),
                TrigTerm(-1.0, "cos", 0.0, 0.0, "cos", 1.0, 0.0))


# ---------------------------------------------------------------------------
# fractional-order Bessel wave functions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WaveTerm:
    """``weight * J_mu(k rho) cos(mu (psi - phase))`` in a shifted, rotated frame.

    ``rho cos psi = shift + r cos(theta + rot)``,
    ``rho sin psi = r sin(theta + rot)``.
    """

    mu: float
    shift: float = 0.0
    rot: float = 0.0
    phase: float = 0.0
    weight: float = 1.0

    def __post_init__(self):
        if self.mu < 0:
            raise ValueError("Bessel order must be nonnegative")

    @property
    def integer(self) -> bool:
        return is_integer_order(self.mu)

    def cut(self) -> Ray | None:
        if self.integer:
            return None
        rt = rotation(self.rot).T
        origin = rt @ np.array([-self.shift, 0.0])
        direction = rt @ np.array([-1.0, 0.0])
        return Ray(tuple(origin), tuple(direction))

    def local(self, pts):
        c, s = math.cos(self.rot), math.sin(self.rot)
        X = self.shift + c * pts[:, 0] - s * pts[:, 1]
        Y = s * pts[:, 0] + c * pts[:, 1]
        return X, Y


def _term_jet(term: WaveTerm, k: float, pts):
    X, Y = term.local(pts)
    rho = np.hypot(X, Y)
    psi = np.arctan2(Y, X)
    mu = term.mu
    n = len(pts)
    val = np.zeros(n)
    gl = np.zeros((n, 2))
    hl = np.zeros((n, 2, 2))
    tiny = rho < 1e-8 if term.integer else rho == 0.0
    ok = ~tiny
    if ok.any():
        r, p = rho[ok], psi[ok]
        J, Jp, Jpp = besselj_derivs(mu, k * r)
        C = np.cos(mu * (p - term.phase))
        S = np.sin(mu * (p - term.phase))
        f = J * C
        f_r = k * Jp * C
        f_p = -mu * J * S
        f_rr = k * k * Jpp * C
        f_rp = -mu * k * Jp * S
        f_pp = -mu * mu * J * C
        cp, sp = np.cos(p), np.sin(p)
        er = np.column_stack([cp, sp])
        ep = np.column_stack([-sp, cp])
        g = f_r[:, None] * er + (f_p / r)[:, None] * ep
        h_rr = f_rr
        h_rp = f_rp / r - f_p / r ** 2
        h_pp = f_r / r + f_pp / r ** 2
        H = (h_rr[:, None, None] * np.einsum("na,nb->nab", er, er)
             + h_rp[:, None, None] * (np.einsum("na,nb->nab", er, ep) + np.einsum("na,nb->nab", ep, er))
             + h_pp[:, None, None] * np.einsum("na,nb->nab", ep, ep))
        val[ok], gl[ok], hl[ok] = f, g, H
    if tiny.any():
        # Taylor jet at the centre, integer orders only
        m = int(round(mu))
        ph = term.phase
        if m == 0:
            val[tiny] = 1.0
            hl[tiny] = -0.5 * k * k * np.eye(2)
        elif m == 1:
            gl[tiny] = 0.5 * k * np.array([math.cos(ph), math.sin(ph)])
        elif m == 2:
            c2, s2 = math.cos(2 * ph), math.sin(2 * ph)
            hl[tiny] = 0.25 * k * k * np.array([[c2, s2], [s2, -c2]])
    R = rotation(term.rot)
    grad = gl @ R
    hess = np.einsum("ia,nij,jb->nab", R, hl, R)
    w = term.weight
    return w * val, w * grad, w * hess


@dataclass(frozen=True)
class BesselSum(HelmholtzField):
    """Sum of ``WaveTerm`` contributions sharing one wavenumber."""

    k: float
    terms_: tuple

    def __post_init__(self):
        if self.k <= 0:
            raise ValueError("k must be positive")

    @property
    def cuts(self):
        return tuple(c for c in (t.cut() for t in self.terms_) if c is not None)

    def _jet(self, pts):
        val = np.zeros(len(pts))
        grad = np.zeros((len(pts), 2))
        hess = np.zeros((len(pts), 2, 2))
        for t in self.terms_:
            v, g, h = _term_jet(t, self.k, pts)
            val += v
            grad += g
            hess += h
        return val, grad, hess

    def terms(self):
        return [BesselSum(self.k, (t,)) for t in self.terms_]

    def to_dict(self):
        return {"k": self.k, "kind": "besselsum", "terms": [vars(t).copy() for t in self.terms_],
                "sigma": [c.to_list() for c in self.cuts]}


def eckmann_pillet(mu, L: int, a, k: float | None = None, phases=None, weights=None, rotations=None) -> BesselSum:
    """Sum of ``L`` Bessel wave functions rotated by ``2 pi l / L`` and shifted by ``a``.

    ``mu``, ``a``, ``phases`` and ``weights`` may be scalars or length-``L``
    sequences.  When all orders agree and ``k`` is omitted, ``k`` is the
    first positive zero of ``J_mu``; with distinct orders ``k`` is required.
    """
    mus = np.broadcast_to(np.asarray(mu, dtype=float), (L,))
    shifts = np.broadcast_to(np.asarray(a, dtype=float), (L,))
    ph = np.zeros(L) if phases is None else np.broadcast_to(np.asarray(phases, dtype=float), (L,))
    ws = np.ones(L) if weights is None else np.broadcast_to(np.asarray(weights, dtype=float), (L,))
    rots = 2 * np.pi * np.arange(L) / L if rotations is None else np.broadcast_to(np.asarray(rotations, dtype=float), (L,))
    if k is None:
        if np.ptp(mus) > 0:
            raise ValueError("distinct Bessel orders: k must be given explicitly")
        k = bessel_first_zero(float(mus[0]))
    terms = tuple(WaveTerm(float(mus[l]), float(shifts[l]), float(rots[l]), float(ph[l]), float(ws[l]))
                  for l in range(L))
    return BesselSum(float(k), terms)


def bessel_wave(mu: float, k: float, phase: float = 0.0, weight: float = 1.0) -> BesselSum:
    """Single centred term ``J_mu(k r) cos(mu (theta - phase))``."""
    return BesselSum(k, (WaveTerm(mu, 0.0, 0.0, phase, weight),))


# ---------------------------------------------------------------------------
# algebra: linear combinations and affine pullbacks
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Combination(HelmholtzField):
    k: float
    fields: tuple
    weights: tuple

    @property
    def is_complex(self):
        return any(f.is_complex for f in self.fields) or any(isinstance(w, complex) for w in self.weights)

    @property
    def cuts(self):
        out = []
        for f, w in zip(self.fields, self.weights):
            if w != 0:
                out.extend(c for c in f.cuts if c not in out)
        return tuple(out)

    def _jet(self, pts):
        cplx = self.is_complex
        dt = complex if cplx else float
        val = np.zeros(len(pts), dtype=dt)
        grad = np.zeros((len(pts), 2), dtype=dt)
        hess = np.zeros((len(pts), 2, 2), dtype=dt)
        for f, w in zip(self.fields, self.weights):
            if w == 0:
                continue
            v, g, h = f._jet(pts)
            val = val + w * v
            grad = grad + w * g
            hess = hess + w * h
        return val, grad, hess

    def terms(self):
        out = []
        for f, w in zip(self.fields, self.weights):
            if w != 0:
                out.extend(Combination(self.k, (t,), (w,)) for t in f.terms())
        return out

    def to_dict(self):
        return {"k": self.k, "kind": "sum", "weights": [_num(w) for w in self.weights],
                "fields": [f.to_dict() for f in self.fields]}


def _num(w):
    return [w.real, w.imag] if isinstance(w, complex) else float(w)


def combine(fields, weights) -> Combination:
    """Linear combination; all fields must share one wavenumber."""
    fields = tuple(fields)
    weights = tuple(weights)
    if len(fields) != len(weights):
        raise ValueError("fields and weights differ in length")
    if not fields:
        raise ValueError("nothing to combine")
    k = fields[0].k
    for f in fields[1:]:
        if abs(f.k - k) > 1e-12 * k:
            raise WavenumberMismatch(f"cannot combine k={k} with k={f.k}")
    return Combination(k, fields, weights)


@dataclass(frozen=True)
class Pullback(HelmholtzField):
    """``base(R(alpha) x - shift)``: a rigid motion of ``base``."""

    base: HelmholtzField
    alpha: float = 0.0
    shift: tuple = (0.0, 0.0)

    @property
    def k(self):
        return self.base.k

    @property
    def is_complex(self):
        return self.base.is_complex

    @property
    def cuts(self):
        rt = rotation(self.alpha).T
        t = np.asarray(self.shift, dtype=float)
        return tuple(Ray(tuple(rt @ (np.asarray(c.origin) + t)), tuple(rt @ np.asarray(c.direction)))
                     for c in self.base.cuts)

    def _jet(self, pts):
        R = rotation(self.alpha)
        q = pts @ R.T - np.asarray(self.shift, dtype=float)
        v, g, h = self.base._jet(q)
        return v, g @ R, np.einsum("ia,nij,jb->nab", R, h, R)

    def terms(self):
        return [Pullback(t, self.alpha, self.shift) for t in self.base.terms()]

    def to_dict(self):
        return {"k": self.k, "kind": "pullback", "alpha": self.alpha, "shift": list(map(float, self.shift)),
                "base": self.base.to_dict()}


def affine_pull(field: HelmholtzField, alpha: float, translation=(0.0, 0.0)) -> Pullback:
    return Pullback(field, float(alpha), tuple(map(float, translation)))


def rotated_combination(v0: HelmholtzField, alpha: float, lam: float) -> Combination:
    """``v0 + lam * v0(R(alpha) x)``."""
    return combine([v0, affine_pull(v0, alpha)], [1.0, lam])


# ---------------------------------------------------------------------------
# serialisation
# ---------------------------------------------------------------------------


def field_from_dict(d: dict) -> HelmholtzField:
    kind = d["kind"]
    if kind == "planewaves":
        amps = [complex(a[0], a[1]) if isinstance(a, (list, tuple)) else complex(a) for a in d["amplitudes"]]
        return PlaneWaves(float(d["k"]), tuple(map(tuple, d["directions"])), tuple(amps))
    if kind == "trig":
        return TrigProducts(float(d["k"]), tuple(TrigTerm(**t) for t in d["terms"]))
    if kind == "besselsum":
        return BesselSum(float(d["k"]), tuple(WaveTerm(**t) for t in d["terms"]))
    if kind == "pullback":
        return Pullback(field_from_dict(d["base"]), float(d.get("alpha", 0.0)), tuple(d.get("shift", (0.0, 0.0))))
    if kind == "sum":
        ws = [complex(*w) if isinstance(w, (list, tuple)) else w for w in d["weights"]]
        return combine([field_from_dict(f) for f in d["fields"]], ws)
    if kind == "eckmann_pillet":
        return eckmann_pillet(d["mu"], int(d["L"]), d["a"], d.get("k"), d.get("phases"), d.get("weights"))
    raise ValueError(f"unknown field kind {kind!r}")


def grid_csv(field: HelmholtzField, x, y, strict: bool = False) -> str:
    """CSV with header ``x,y,value,gx,gy`` (real parts) over a tensor grid."""
    X, Y = np.meshgrid(np.asarray(x, dtype=float), np.asarray(y, dtype=float), indexing="ij")
    pts = np.column_stack([X.ravel(), Y.ravel()])
    v, g, _ = field.jet(pts, strict=strict)
    buf = io.StringIO()
    buf.write("x,y,value,gx,gy\n")
    for p, vv, gg in zip(pts, np.real(v), np.real(g)):
        buf.write(f"{p[0]:.15g},{p[1]:.15g},{vv:.15g},{gg[0]:.15g},{gg[1]:.15g}\n")
    return buf.getvalue()
