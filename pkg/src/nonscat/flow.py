"""Gradient-flow orbits ``X' = +/- grad v`` and Neumann domains built from them.

Any orbit is tangent to ``grad v``, so ``d v / d nu`` vanishes on it.
Orbits are integrated in arc length (``dX/ds = +/- g/|g|``, ``dt/ds = 1/|g|``)
with an embedded Runge-Kutta pair, which gives evenly spaced vertices and
keeps the flow time as a by-product.  Once ``|grad v|`` falls below
``SWITCH_GRAD`` the flow is continued with its linearisation
``X(t) = P + exp(+/- t H) (X0 - P)`` about the nearby stationary point ``P``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy.integrate import solve_ivp

from ._search import newton_gradient, stationary_candidates
from .errors import NotClosed, StartIsStationary
from .fields import cut_distance
from .geometry import PlanarCurve

SWITCH_GRAD = 1e-4
SNAP_RADIUS = 1e-6
SNAP_GRAD = 1e-8
APERTURE_RADIUS = 1e-3


@dataclass
class StationaryPoint:
    location: np.ndarray
    hess_eigenvalues: np.ndarray
    hess_eigenvectors: np.ndarray
    kind: str
    value: float = 0.0

    @property
    def recessive(self) -> np.ndarray:
        """Eigendirection of the smaller ``|lambda|``: the generic approach direction."""
        i = int(np.argmin(np.abs(self.hess_eigenvalues)))
        return self.hess_eigenvectors[:, i]

    @property
    def dominant(self) -> np.ndarray:
        i = int(np.argmax(np.abs(self.hess_eigenvalues)))
        return self.hess_eigenvectors[:, i]

    @property
    def isotropic(self) -> bool:
        lam = self.hess_eigenvalues
        return abs(lam[0] - lam[1]) <= 1e-8 * max(abs(lam).max(), 1e-300)

    def to_dict(self):
        return {"location": [float(c) for c in self.location], "kind": self.kind,
                "hess_eigenvalues": [float(c) for c in self.hess_eigenvalues], "value": float(self.value)}


def classify_stationary(field, p) -> StationaryPoint:
    p = np.asarray(p, dtype=float)
    v, _, H = field.jet(p[None, :], strict=False)
    H = np.real(H[0])
    lam, vec = np.linalg.eigh(0.5 * (H + H.T))
    big = np.abs(lam).max()
    if big == 0.0 or np.abs(lam).min() < 1e-8 * big:
        kind = "Degenerate"
    elif lam.min() > 0:
        kind = "Source"
    elif lam.max() < 0:
        kind = "Sink"
    else:
        kind = "Saddle"
    return StationaryPoint(p, lam, vec, kind, float(np.real(v[0])))


def find_stationary(field, window, n: int = 161) -> list:
    """All zeros of ``grad v`` in ``window``, classified by the analytic Hessian.

    ``Source`` and ``Sink`` refer to the forward flow ``X' = grad v``.
    """
    pts, _ = stationary_candidates(field, window, n)
    return [classify_stationary(field, p) for p in pts]


# ---------------------------------------------------------------------------
# orbits
# ---------------------------------------------------------------------------


@dataclass
class Orbit:
    vertices: np.ndarray
    times: np.ndarray
    direction: str
    endpoints: tuple
    end_point: StationaryPoint | None = None
    start_point: StationaryPoint | None = None
    arclength: np.ndarray | None = None

    def to_curve(self) -> PlanarCurve:
        return PlanarCurve(self.vertices.copy(), False, params=self.arclength, end_kinds=self.endpoints)

    def to_jsonl(self, field) -> str:
        _, g, _ = field.jet(self.vertices, strict=False)
        gn = np.linalg.norm(np.real(g), axis=1)
        rows = []
        for t, (x, y), n in zip(self.times, self.vertices, gn):
            rows.append(json.dumps({"t": float(f"{t:.15g}"), "x": float(f"{x:.15g}"),
                                    "y": float(f"{y:.15g}"), "grad_norm": float(f"{n:.15g}")}))
        return "\n".join(rows) + "\n"


def _linear_tail(field, x0, sign, ds):
    """Points of the linearised flow from ``x0`` into the nearby stationary point."""
    P = newton_gradient(field, x0)
    sp = classify_stationary(field, P)
    lam, E = sp.hess_eigenvalues, sp.hess_eigenvectors
    c = E.T @ (x0 - P)
    rate = sign * lam
    # only contracting components survive; an expanding one must already be ~0
    pts, times = [], []
    t = 0.0
    d = x0 - P
    while np.linalg.norm(d) > SNAP_RADIUS:
        r = np.linalg.norm(d)
        dt = min(ds, 0.25 * r) / max(np.abs(lam).max() * r, 1e-300)
        t += dt
        d = E @ (c * np.exp(rate * t))
        pts.append(P + d)
        times.append(t)
        if t > 1e6 or np.linalg.norm(d) > 10 * np.linalg.norm(x0 - P):
            break
    pts.append(P.copy())
    times.append(t)
    return np.array(pts), np.array(times), sp


def _arc_samples(field, sol, ds):
    """Arc-length stations spaced at most ``ds``, tighter where the orbit bends.

    The local spacing is capped by ``0.01 / curvature`` and by 0.03 times
    ``|g| / |H|``, a proxy for the distance to the nearest stationary point.
    """
    s_end = sol.t[-1]
    out = [0.0]
    s = 0.0
    while True:
        z = sol.sol(s)
        _, g, H = field.jet(z[None, :2], strict=False)
        g, H = np.real(g[0]), np.real(H[0])
        gn = np.linalg.norm(g)
        t = g / gn
        nrm = np.array([-t[1], t[0]])
        curv = abs(nrm @ H @ t) / gn
        h = min(ds, 0.01 / max(curv, 1e-300), 0.03 * gn / max(np.linalg.norm(H, 2), 1e-300))
        s += max(h, 1e-9)
        if s >= s_end - 0.3 * h:
            break
        out.append(s)
    out.append(s_end)
    return np.array(out)


def trace_orbit(field, start, direction: str = "forward", max_time: float = 200.0, window=None,
                ds: float = 2.5e-3, rtol: float = 1e-12, atol: float = 1e-14,
                grad_tol: float = SWITCH_GRAD, max_length: float | None = None) -> Orbit:
    """Integrate ``X' = grad v`` (forward) or ``X' = -grad v`` (backward) from ``start``.

    The orbit ends near a stationary point (snapped onto it), on leaving
    ``window``, or once the flow time reaches ``max_time``.
    """
    sign = 1.0 if direction == "forward" else -1.0
    x0 = np.asarray(start, dtype=float)
    _, g0, _ = field.jet(x0[None, :], strict=False)
    if np.linalg.norm(np.real(g0[0])) <= grad_tol:
        raise StartIsStationary(f"|grad v| = {np.linalg.norm(np.real(g0[0])):.3g} at the start point")
    if window is None:
        span = 20.0 * math.pi / field.k
        window = (x0[0] - span, x0[0] + span, x0[1] - span, x0[1] + span)
    x_lo, x_hi, y_lo, y_hi = window
    if max_length is None:
        max_length = 4.0 * ((x_hi - x_lo) + (y_hi - y_lo))

    def rhs(s, z):
        _, g, _ = field.jet(np.asarray(z)[None, :2], strict=False)
        g = np.real(g[0])
        n = math.hypot(g[0], g[1])
        return [sign * g[0] / n, sign * g[1] / n, 1.0 / n]

    def ev_grad(s, z):
        _, g, _ = field.jet(np.asarray(z)[None, :2], strict=False)
        return np.linalg.norm(np.real(g[0])) - grad_tol
    ev_grad.terminal = True
    ev_grad.direction = -1

    def ev_window(s, z):
        m = min(z[0] - x_lo, x_hi - z[0], z[1] - y_lo, y_hi - z[1])
        if field.cuts:
            m = min(m, cut_distance(field.cuts, np.asarray(z)[None, :2])[0] - ds)
        return m
    ev_window.terminal = True
    ev_window.direction = -1

    def ev_time(s, z):
        return max_time - z[2]
    ev_time.terminal = True
    ev_time.direction = -1

    sol = solve_ivp(rhs, (0.0, max_length), [x0[0], x0[1], 0.0], method="DOP853", rtol=rtol, atol=atol,
                    dense_output=True, events=(ev_grad, ev_window, ev_time))
    svals = _arc_samples(field, sol, ds)
    Z = sol.sol(svals).T
    verts, times, arcs = Z[:, :2], Z[:, 2], svals
    end_kind, end_point = "MaxLength", None
    if sol.t_events[0].size:
        tail, tt, sp = _linear_tail(field, verts[-1], sign, ds)
        step = np.linalg.norm(np.diff(np.vstack([verts[-1:], tail]), axis=0), axis=1)
        verts = np.vstack([verts, tail])
        times = np.concatenate([times, times[-1] + tt])
        arcs = np.concatenate([arcs, arcs[-1] + np.cumsum(step)])
        end_kind, end_point = "Stationary", sp
    elif sol.t_events[1].size:
        end_kind = "WindowExit"
    elif sol.t_events[2].size:
        end_kind = "MaxTime"
    return Orbit(verts, times, direction, ("Start", end_kind), end_point, None, arcs)


def full_orbit(field, point, window=None, **kw) -> Orbit:
    """Orbit through ``point`` traced both ways, oriented along increasing ``v``."""
    back = trace_orbit(field, point, "backward", window=window, **kw)
    fwd = trace_orbit(field, point, "forward", window=window, **kw)
    verts = np.vstack([back.vertices[::-1], fwd.vertices[1:]])
    times = np.concatenate([-back.times[::-1], fwd.times[1:]])
    arcs = np.concatenate([-back.arclength[::-1], fwd.arclength[1:]])
    return Orbit(verts, times, "forward", (back.endpoints[1], fwd.endpoints[1]), fwd.end_point,
                 back.end_point, arcs)


def neumann_flux_check(field, curve) -> float:
    """Largest ``|nu . grad v|`` over the vertices of ``curve`` (tags excluded)."""
    if isinstance(curve, Orbit):
        curve = curve.to_curve()
    nrm = curve.normals()
    _, g, _ = field.jet(curve.vertices, strict=False)
    flux = np.abs(np.sum(nrm * np.real(g), axis=1))
    flux = flux[np.isfinite(flux)]
    return float(flux.max()) if flux.size else 0.0


def orbit_monotone(field, orbit: Orbit) -> bool:
    v = np.real(field.jet(orbit.vertices, strict=False)[0])
    dv = np.diff(v)
    return bool(np.all(dv > 0) if orbit.direction == "forward" else np.all(dv < 0))


# ---------------------------------------------------------------------------
# domain assembly
# ---------------------------------------------------------------------------


def _secant(verts, P, radius, from_end):
    """Unit vector from ``P`` to where the arc is ``radius`` away from it."""
    seq = verts[::-1] if from_end else verts
    d = np.linalg.norm(seq - P, axis=1)
    idx = np.nonzero(d >= radius)[0]
    if idx.size == 0:
        q = seq[-1]
    else:
        i = idx[0]
        if i == 0:
            q = seq[0]
        else:
            # interpolate to hit the circle
            a, b = seq[i - 1], seq[i]
            da, db = d[i - 1], d[i]
            w = (radius - da) / (db - da)
            q = a + w * (b - a)
    u = q - P
    return u / np.linalg.norm(u)


@dataclass
class NeumannDomain:
    boundary: PlanarCurve
    apertures: list = dc_field(default_factory=list)
    corner_points: list = dc_field(default_factory=list)
    cusp_tags: list = dc_field(default_factory=list)
    junctions: list = dc_field(default_factory=list)

    def aperture_at(self, point, tol: float = 1e-6) -> float:
        """Interior angle of the junction at ``point`` (``pi`` where the boundary is smooth)."""
        for q, ang in self.junctions:
            if np.linalg.norm(np.asarray(q) - np.asarray(point)) <= tol:
                return ang
        raise KeyError(f"no junction at {list(point)}")

    @property
    def area(self) -> float:
        return self.boundary.area()


def assemble_neumann_domain(orbits, separatrices=(), tol: float = 1e-6, radius: float = APERTURE_RADIUS,
                            cusp_angle: float = 0.05, stationary=()) -> NeumannDomain:
    """Chain orbits end to end into a closed counterclockwise boundary.

    At every junction the interior angle between the two arcs' secants at
    ``radius`` is reported.  A junction whose arcs leave in the same
    direction (aperture within ``cusp_angle`` of 0 or ``2 pi``) is a cusp.
    Junctions where the boundary continues smoothly (aperture ``pi``) are
    not tagged as corners.
    """
    arcs = []
    for o in list(orbits) + list(separatrices):
        arcs.append(o.vertices if isinstance(o, Orbit) else np.asarray(o.vertices if hasattr(o, "vertices") else o))
    if not arcs:
        raise NotClosed("no arcs")
    if len(arcs) == 1:
        v = arcs[0]
        if np.linalg.norm(v[0] - v[-1]) > tol:
            raise NotClosed("single arc is not closed")
        b = PlanarCurve(v[:-1].copy(), True)
        if b.area() < 0:
            b = PlanarCurve(v[:-1][::-1].copy(), True)
        return NeumannDomain(b)
    chain = [arcs[0]]
    remaining = list(range(1, len(arcs)))
    end = arcs[0][-1]
    while remaining:
        best = None
        for i in remaining:
            for rev in (False, True):
                head = arcs[i][-1] if rev else arcs[i][0]
                d = np.linalg.norm(head - end)
                if d <= tol and (best is None or d < best[0]):
                    best = (d, i, rev)
        if best is None:
            raise NotClosed(f"no arc continues from {end.tolist()}")
        _, i, rev = best
        a = arcs[i][::-1] if rev else arcs[i]
        chain.append(a)
        end = a[-1]
        remaining.remove(i)
    if np.linalg.norm(end - chain[0][0]) > tol:
        raise NotClosed(f"boundary gap {np.linalg.norm(end - chain[0][0]):.3g}")
    area = sum(0.5 * np.sum(c[:-1, 0] * c[1:, 1] - c[1:, 0] * c[:-1, 1]) for c in chain)
    if area < 0:
        chain = [c[::-1] for c in chain[::-1]]
    verts, junction_idx = [], []
    for c in chain:
        junction_idx.append(sum(len(x) for x in verts))
        verts.append(c[:-1])
    allv = np.vstack(verts)
    apertures, corners, tags, cusps, junctions = [], [], [], [], []
    m = len(chain)
    for j in range(m):
        incoming, outgoing = chain[j - 1], chain[j]
        P = outgoing[0]
        u_out = _secant(outgoing, P, radius, from_end=False)
        u_in = _secant(incoming, P, radius, from_end=True)
        ang = (math.atan2(u_in[1], u_in[0]) - math.atan2(u_out[1], u_out[0])) % (2 * math.pi)
        junctions.append((P.copy(), ang))
        if abs(ang - math.pi) < 1e-3:
            continue
        idx = junction_idx[j]
        if ang < cusp_angle or ang > 2 * math.pi - cusp_angle:
            cusps.append(idx)
        else:
            tags.append(idx)
        apertures.append(ang)
        corners.append(P.copy())
    b = PlanarCurve(allv, True, sorted(tags), cusp_tags=sorted(cusps))
    return NeumannDomain(b, apertures, corners, sorted(cusps), junctions)


def limit_tangent_angle(orbit: Orbit, P, radius: float = APERTURE_RADIUS) -> float:
    """Angle (mod pi) of the arc direction where the orbit is ``radius`` from ``P``."""
    d = np.linalg.norm(orbit.vertices - np.asarray(P), axis=1)
    near_end = d[-1] < d[0]
    u = _secant(orbit.vertices, np.asarray(P, dtype=float), radius, from_end=near_end)
    return math.atan2(u[1], u[0]) % math.pi
