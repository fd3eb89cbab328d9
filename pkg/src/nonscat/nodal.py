"""Nodal sets of real Helmholtz fields.

Sign certificates bracket the zero set on a lattice, ``trace_nodal``
follows ``{v = 0}`` by predictor-corrector continuation, and
``find_critical_points`` locates points where ``v`` and ``grad v`` vanish
together.  Near such a point of vanishing order ``N`` the leading part of
``v`` is ``Re(c z^N)``, so exactly ``N`` nodal lines cross at angles
``pi/N``.
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass, field as dc_field

import numpy as np
import shapely

from ._search import stationary_candidates, window_grid
from .errors import (CornerLawViolation, NotClosed, SeedNotOnCurve, SelfIntersecting,
                     StallAtCriticalPoint)
from .fields import cut_distance
from .geometry import PlanarCurve, lagrange_tangents

MIXED, POSITIVE, NEGATIVE, NEAR_CUT = 0, 1, -1, 2
LABEL_NAMES = {MIXED: "Mixed", POSITIVE: "AllTermsPositive", NEGATIVE: "AllTermsNegative", NEAR_CUT: "NearCut"}

GRAD_TOL = 1e-6
MIN_STEP = 1e-4


# ---------------------------------------------------------------------------
# sign certificates
# ---------------------------------------------------------------------------


@dataclass
class SignCertificate:
    origin: tuple
    h: float
    dims: tuple
    labels: np.ndarray

    def cell_centers(self) -> np.ndarray:
        nx, ny = self.dims
        xc = self.origin[0] + self.h * (np.arange(nx) + 0.5)
        yc = self.origin[1] + self.h * (np.arange(ny) + 0.5)
        X, Y = np.meshgrid(xc, yc, indexing="ij")
        return np.stack([X, Y], axis=-1)

    def count(self, label: int) -> int:
        return int(np.sum(self.labels == label))

    def cells(self, label: int) -> np.ndarray:
        """Lower-left corners of all cells carrying ``label``."""
        idx = np.argwhere(self.labels == label)
        return np.asarray(self.origin) + self.h * idx

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("i,j,x0,y0,label\n")
        nx, ny = self.dims
        for i in range(nx):
            for j in range(ny):
                x0 = self.origin[0] + i * self.h
                y0 = self.origin[1] + j * self.h
                buf.write(f"{i},{j},{x0:.15g},{y0:.15g},{LABEL_NAMES[int(self.labels[i, j])]}\n")
        return buf.getvalue()


def certify_signs(field, window, h: float) -> SignCertificate:
    """Label lattice cells where every term of ``field`` provably shares a sign.

    A term is certified positive on a cell when it is positive at all four
    corners and its smallest corner value exceeds the cell diameter times
    1.5 times the largest corner gradient norm.  Cells within ``h`` of a
    branch cut are labelled ``NEAR_CUT``.
    """
    x0, x1, y0, y1 = map(float, window)
    nx = max(1, int(round((x1 - x0) / h)))
    ny = max(1, int(round((y1 - y0) / h)))
    xs = x0 + h * np.arange(nx + 1)
    ys = y0 + h * np.arange(ny + 1)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    nodes = np.column_stack([X.ravel(), Y.ravel()])
    diam = h * math.sqrt(2.0)
    all_pos = np.ones((nx, ny), dtype=bool)
    all_neg = np.ones((nx, ny), dtype=bool)
    for term in field.terms():
        v, g, _ = term.jet(nodes, strict=False)
        v = np.real(v).reshape(nx + 1, ny + 1)
        gn = np.linalg.norm(np.real(g), axis=1).reshape(nx + 1, ny + 1)
        corners_v = np.stack([v[:-1, :-1], v[1:, :-1], v[:-1, 1:], v[1:, 1:]])
        corners_g = np.stack([gn[:-1, :-1], gn[1:, :-1], gn[:-1, 1:], gn[1:, 1:]])
        margin = diam * 1.5 * corners_g.max(axis=0)
        all_pos &= corners_v.min(axis=0) > margin
        all_neg &= corners_v.max(axis=0) < -margin
    labels = np.full((nx, ny), MIXED, dtype=int)
    labels[all_pos] = POSITIVE
    labels[all_neg] = NEGATIVE
    if field.cuts:
        centers = np.column_stack([(X[:-1, :-1] + 0.5 * h).ravel(), (Y[:-1, :-1] + 0.5 * h).ravel()])
        near = (cut_distance(field.cuts, centers) <= h).reshape(nx, ny)
        labels[near] = NEAR_CUT
    return SignCertificate((x0, y0), float(h), (nx, ny), labels)


# ---------------------------------------------------------------------------
# seeds and tracing
# ---------------------------------------------------------------------------


def _jet1(field, p):
    v, g, H = field.jet(np.asarray(p, dtype=float)[None, :], strict=False)
    return float(np.real(v[0])), np.real(g[0]), np.real(H[0])


def seed_on_segment(field, p0, p1, tol: float = 1e-14):
    """Bisection for a zero of ``v`` on the segment ``[p0, p1]``."""
    p0 = np.asarray(p0, dtype=float)
    p1 = np.asarray(p1, dtype=float)
    f0 = _jet1(field, p0)[0]
    f1 = _jet1(field, p1)[0]
    if f0 == 0.0:
        return p0
    if (f0 > 0) == (f1 > 0):
        raise SeedNotOnCurve("no sign change on the segment")
    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        fm = _jet1(field, p0 + mid * (p1 - p0))[0]
        if (fm > 0) == (f0 > 0):
            lo = mid
        else:
            hi = mid
    return p0 + 0.5 * (lo + hi) * (p1 - p0)


def _project(field, p, value_tol, maxiter=30):
    """Newton projection onto ``{v = 0}`` along the gradient."""
    p = np.asarray(p, dtype=float).copy()
    for _ in range(maxiter):
        v, g, _ = _jet1(field, p)
        gg = g @ g
        if gg == 0.0:
            return p, False
        if abs(v) <= 0.01 * value_tol:
            return p, True
        p = p - v * g / gg
    v = _jet1(field, p)[0]
    return p, abs(v) <= value_tol


def _critical_near(field, p, radius):
    from ._search import newton_gradient

    q = newton_gradient(field, p)
    if np.linalg.norm(q - p) > radius:
        return None
    return q


class _Tracer:
    def __init__(self, field, step, window, value_tol, stop_points, cut_margin):
        self.field = field
        self.step = step
        self.window = window
        self.value_tol = value_tol
        self.stop_points = [np.asarray(p, dtype=float) for p in stop_points]
        self.cut_margin = cut_margin

    def inside(self, p):
        x0, x1, y0, y1 = self.window
        if not (x0 <= p[0] <= x1 and y0 <= p[1] <= y1):
            return False
        if self.field.cuts and cut_distance(self.field.cuts, p[None, :])[0] < self.cut_margin:
            return False
        return True

    def run(self, start, sign, max_steps, check_closure=True):
        """March from ``start`` with tangent ``sign * rot90(grad)``.

        Returns ``(points, end_kind, extra)`` where ``extra`` is the closure
        gap or the critical point reached.
        """
        f = self.field
        pts = [start]
        x = start
        travelled = 0.0
        for _ in range(max_steps):
            v, g, H = _jet1(f, x)
            gn = np.linalg.norm(g)
            t = sign * np.array([-g[1], g[0]]) / gn
            hn = max(np.linalg.norm(H, 2), 1e-300)
            curv = abs(t @ H @ t) / gn
            s = min(self.step, 0.1 / max(curv, 1e-300), 0.25 * gn / hn)
            for q in self.stop_points:
                d = np.linalg.norm(q - x)
                if d < 2.0 * max(s, MIN_STEP) and (q - x) @ t > 0.5 * d:
                    pts.append(q.copy())
                    return pts, "critical", q.copy()
            if s < MIN_STEP:
                q = _critical_near(f, x, 20.0 * gn / hn + 1e-9)
                if q is not None and abs(_jet1(f, q)[0]) < 1e-8 * max(1.0, abs(v) + gn):
                    pts.append(q)
                    return pts, "critical", q
                s = MIN_STEP
            if check_closure and travelled > 4 * self.step:
                d0 = start - x
                dist = np.linalg.norm(d0)
                if dist <= 1.05 * s and d0 @ t > 0:
                    p, ok = _project(f, x + dist * t, self.value_tol)
                    gap = float(np.linalg.norm(p - start))
                    return pts, "closed", gap
            for _ in range(12):
                p, ok = _project(f, x + s * t, self.value_tol)
                moved = np.linalg.norm(p - x)
                if ok and 0.5 * s <= moved <= 1.5 * s:
                    _, gp, _ = _jet1(f, p)
                    if gp @ g > 0:
                        break
                ok = False
                s *= 0.5
            if not ok:
                raise StallAtCriticalPoint(f"corrector failed near {x.tolist()}", location=x, curve=np.array(pts))
            if not self.inside(p):
                return pts, "window", None
            travelled += np.linalg.norm(p - x)
            pts.append(p)
            x = p
        return pts, "maxsteps", None


def trace_nodal(field, seed, step: float = 1e-2, window=None, value_tol: float = 1e-10,
                stop_points=(), on_critical: str = "stop", max_steps: int = 200_000,
                direction: int = 0) -> PlanarCurve:
    """Trace the nodal line of ``field`` through ``seed``.

    The seed must satisfy ``|v| < 0.1 |grad v| step``; it is Newton-projected
    first.  Tracing proceeds in one direction until the curve closes, meets a
    critical point, or leaves the window; open curves are then continued in
    the opposite direction from the seed.  ``stop_points`` lists known
    critical points to snap onto.  ``direction`` of +1 or -1 traces one way
    only.
    """
    seed = np.asarray(seed, dtype=float)
    v, g, _ = _jet1(field, seed)
    gn = np.linalg.norm(g)
    if gn == 0.0 or abs(v) >= 0.1 * gn * step:
        raise SeedNotOnCurve(f"|v|={abs(v):.3g} too large for |grad v|={gn:.3g} at the seed")
    start, ok = _project(field, seed, value_tol)
    if not ok:
        raise SeedNotOnCurve("Newton projection of the seed did not converge")
    if window is None:
        span = 40.0 * math.pi / field.k
        window = (start[0] - span, start[0] + span, start[1] - span, start[1] + span)
    cut_margin = max(step, 1e-6) if field.cuts else 0.0
    tr = _Tracer(field, step, window, value_tol, stop_points, cut_margin)

    def finish(kind, extra):
        if kind == "critical" and on_critical == "raise":
            raise StallAtCriticalPoint(f"critical point at {np.asarray(extra).tolist()}", location=extra)

    signs = (direction,) if direction else (1, -1)
    fwd, kind_f, extra_f = tr.run(start, signs[0], max_steps)
    finish(kind_f, extra_f)
    if kind_f == "closed" or len(signs) == 1:
        verts = np.array(fwd)
        curve = _make_curve(field, verts, kind_f == "closed", ("seed", kind_f))
        if kind_f == "closed":
            if curve.area() < 0:
                curve = _make_curve(field, verts[::-1].copy(), True, ("seed", kind_f))
            curve.closure_gap = extra_f
        elif kind_f == "critical":
            curve.corner_tags = [len(verts) - 1]
        return curve
    bwd, kind_b, extra_b = tr.run(start, -signs[0], max_steps, check_closure=False)
    finish(kind_b, extra_b)
    verts = np.vstack([np.array(bwd[::-1]), np.array(fwd[1:])])
    curve = _make_curve(field, verts, False, (kind_b, kind_f))
    tags = []
    if kind_b == "critical":
        tags.append(0)
    if kind_f == "critical":
        tags.append(len(verts) - 1)
    curve.corner_tags = tags
    return curve


def _make_curve(field, verts, closed, end_kinds):
    v, g, _ = field.jet(verts, strict=False)
    c = PlanarCurve(verts, closed=closed, values=np.real(v), grad_norms=np.linalg.norm(np.real(g), axis=1),
                    end_kinds=tuple(end_kinds))
    c.closure_gap = None
    return c


def trace_fidelity(field, curve: PlanarCurve):
    """Return ``(max |v|, max angle between discrete tangent and level line)``."""
    v, g, _ = field.jet(curve.vertices, strict=False)
    vmax = float(np.max(np.abs(np.real(v))))
    worst = 0.0
    pieces, closed = curve.pieces()
    for idx in pieces:
        if len(idx) < 5:
            continue
        t = lagrange_tangents(curve.vertices[idx], closed=closed)
        gg = np.real(g[idx])
        cosang = np.abs(np.sum(t * gg, axis=1)) / np.linalg.norm(gg, axis=1)
        keep = np.ones(len(idx), dtype=bool)
        if not closed:
            keep[[0, -1]] = False
        worst = max(worst, float(np.max(np.arcsin(np.clip(cosang[keep], 0, 1)))))
    return vmax, worst


def winding_number(curve: PlanarCurve, point) -> int:
    d = curve.vertices - np.asarray(point, dtype=float)
    ang = np.arctan2(d[:, 1], d[:, 0])
    if curve.closed:
        ang = np.append(ang, ang[0])
    dang = np.diff(ang)
    dang = (dang + np.pi) % (2 * np.pi) - np.pi
    return int(round(dang.sum() / (2 * np.pi)))


# ---------------------------------------------------------------------------
# critical points
# ---------------------------------------------------------------------------


@dataclass
class NodalCriticalPoint:
    location: np.ndarray
    order: int | None
    theta0: float
    branch_directions: list = dc_field(default_factory=list)
    value: float = 0.0
    grad_norm: float = 0.0

    @property
    def resolved(self) -> bool:
        return self.order is not None

    def to_dict(self):
        return {"location": [float(c) for c in self.location], "order": self.order,
                "theta0": float(self.theta0), "branch_directions": [float(a) for a in self.branch_directions],
                "value": float(self.value), "grad_norm": float(self.grad_norm)}


def _third_derivs(field, p, h=1e-3):
    """``(v_xxx, v_xxy)`` by fourth-order central differences of the analytic Hessian."""
    def hxx(q):
        return _jet1(field, q)[2][0, 0]
    out = []
    for e in (np.array([1.0, 0.0]), np.array([0.0, 1.0])):
        d = (-hxx(p + 2 * h * e) + 8 * hxx(p + h * e) - 8 * hxx(p - h * e) + hxx(p - 2 * h * e)) / (12 * h)
        out.append(d)
    return out


def _fourth_derivs(field, p, h=1e-3):
    """``(v_xxxx, v_xxxy)`` by second differences of ``v_xx``."""
    def hxx(q):
        return _jet1(field, q)[2][0, 0]
    ex, ey = np.array([1.0, 0.0]), np.array([0.0, 1.0])
    dxx = (-hxx(p + 2 * h * ex) + 16 * hxx(p + h * ex) - 30 * hxx(p) + 16 * hxx(p - h * ex) - hxx(p - 2 * h * ex)) / (12 * h * h)
    dxy = (hxx(p + h * (ex + ey)) - hxx(p + h * (ex - ey)) - hxx(p + h * (ey - ex)) + hxx(p - h * (ex + ey))) / (4 * h * h)
    return dxx, dxy


def _refine_on_hessian(field, p, maxiter=8):
    """Newton on ``(v_xx, v_xy) = 0``; a simple root at order-3 points.

    Solving ``grad v = 0`` there only reaches ``sqrt(eps)`` accuracy because
    the gradient vanishes quadratically.
    """
    p = np.asarray(p, dtype=float).copy()
    for _ in range(maxiter):
        H = _jet1(field, p)[2]
        r = np.array([H[0, 0], H[0, 1]])
        dx, dxy = _third_derivs(field, p)
        J = np.array([[dx, dxy], [dxy, -dx]])
        try:
            step = np.linalg.solve(J, r)
        except np.linalg.LinAlgError:
            break
        p = p - step
        if np.linalg.norm(step) < 1e-15:
            break
    return p


def classify_critical(field, p, scale: float = 1.0) -> NodalCriticalPoint:
    """Vanishing order and branch directions at a zero of ``(v, grad v)``."""
    p = np.asarray(p, dtype=float)
    v, g, H = _jet1(field, p)
    k = max(field.k, 1.0)
    order = None
    c = 0j
    if np.linalg.norm(H) > 1e-6 * k ** 2 * scale:
        order = 2
        c = complex(H[0, 0], -H[0, 1]) / 2.0
    else:
        dx, dxy = _third_derivs(field, p)
        if math.hypot(dx, dxy) > 1e-4 * k ** 3 * scale:
            order = 3
            p = _refine_on_hessian(field, p)
            v, g, H = _jet1(field, p)
            dx, dxy = _third_derivs(field, p)
            c = complex(dx, -dxy) / 6.0
        else:
            dx, dxy = _fourth_derivs(field, p)
            if math.hypot(dx, dxy) > 1e-2 * k ** 4 * scale:
                order = 4
                c = complex(dx, -dxy) / 24.0
    if order is None:
        return NodalCriticalPoint(p, None, float("nan"), [], v, float(np.linalg.norm(g)))
    theta0 = -math.atan2(c.imag, c.real)
    dirs = sorted(((math.pi / 2 + kap * math.pi + theta0) / order) % math.pi for kap in range(order))
    return NodalCriticalPoint(p, order, theta0, dirs, v, float(np.linalg.norm(g)))


def find_critical_points(field, window, n: int = 161, value_tol: float = 1e-8) -> list:
    """All points of ``window`` where ``v`` and ``grad v`` vanish together."""
    k = max(field.k, 1.0)
    cands, scale = stationary_candidates(
        field, window, n, score=lambda v, g: np.abs(v) * k + np.linalg.norm(g, axis=1))
    out = []
    for p in cands:
        v, g, _ = _jet1(field, p)
        if abs(v) > value_tol * scale:
            continue
        out.append(classify_critical(field, p, scale))
    return out


def _ray_zero_angles(field, p, order, eps):
    """Angles in [0, 2 pi) where ``v`` vanishes on the circle of radius ``eps``."""
    m = 64 * order
    th = np.linspace(0.0, 2 * np.pi, m, endpoint=False)
    ring = p + eps * np.column_stack([np.cos(th), np.sin(th)])
    vals = np.real(field.jet(ring, strict=False)[0])
    out = []
    for i in range(m):
        a, b = th[i], th[i] + 2 * np.pi / m
        fa, fb = vals[i], vals[(i + 1) % m]
        if (fa > 0) == (fb > 0):
            continue
        for _ in range(60):
            mid = 0.5 * (a + b)
            fm = float(np.real(field.jet((p + eps * np.array([math.cos(mid), math.sin(mid)]))[None, :], strict=False)[0][0]))
            if (fm > 0) == (fa > 0):
                a, fa = mid, fm
            else:
                b = mid
        out.append(0.5 * (a + b) % (2 * np.pi))
    return np.sort(np.array(out))


def measure_branch_angles(field, cp: NodalCriticalPoint, radii=(4e-3, 2e-3, 1e-3)):
    """Ray directions of the nodal lines leaving ``cp``, Richardson-extrapolated to radius 0."""
    N = cp.order
    rows = [_ray_zero_angles(field, cp.location, N, r) for r in radii]
    if any(len(r) != 2 * N for r in rows):
        raise CornerLawViolation(f"expected {2 * N} nodal rays, found {[len(r) for r in rows]}")
    ref = rows[-1]
    aligned = []
    for r in rows:
        shift = np.angle(np.exp(1j * (r[:, None] - ref[None, :])))
        j = np.argmin(np.abs(shift), axis=0)
        aligned.append(ref + shift[j, np.arange(len(ref))])
    a = np.array(aligned)
    h = np.asarray(radii)
    # quadratic in the radius through the three samples, evaluated at 0
    V = np.vander(h, 3)
    coef = np.linalg.solve(V, a)
    return np.sort(coef[-1] % (2 * np.pi))


def corner_angle_check(cp: NodalCriticalPoint, field=None, tol: float = 1e-6) -> dict:
    """Confirm that nodal branches at ``cp`` meet at multiples of ``pi / N``.

    With ``field`` given the ray angles are measured on small circles around
    the point; otherwise the predicted branch directions are checked.
    Raises ``CornerLawViolation`` when an angle is off the lattice by more
    than ``tol``.
    """
    if not cp.resolved:
        raise CornerLawViolation("vanishing order unresolved")
    N = cp.order
    if field is not None:
        rays = measure_branch_angles(field, cp)
    else:
        d = np.asarray(cp.branch_directions)
        rays = np.sort(np.concatenate([d, d + np.pi]) % (2 * np.pi))
    gaps = np.diff(np.append(rays, rays[0] + 2 * np.pi))
    kappas = np.rint(gaps * N / np.pi).astype(int)
    dev = np.abs(gaps - kappas * np.pi / N)
    flags = [bool(x <= tol) for x in dev]
    if not all(flags) or np.any(kappas < 1):
        raise CornerLawViolation(f"branch gaps {gaps.tolist()} off the pi/{N} lattice by {dev.max():.3g}")
    return {"angles": gaps.tolist(), "kappa": kappas.tolist(), "rational_multiple_of_pi": flags,
            "max_deviation": float(dev.max()), "rays": rays.tolist()}


def trace_branches(field, cp: NodalCriticalPoint, step: float = 1e-2, window=None, stop_points=(), **kw):
    """Trace every nodal branch leaving ``cp``, starting ``2 step`` away from it."""
    out = []
    dirs = list(cp.branch_directions) + [d + math.pi for d in cp.branch_directions]
    stops = [np.asarray(cp.location)] + [np.asarray(q) for q in stop_points]
    for th in dirs:
        e = np.array([math.cos(th), math.sin(th)])
        seed0 = cp.location + 2 * step * e
        nrm = np.array([-e[1], e[0]])
        try:
            seed = seed_on_segment(field, seed0 - step * nrm, seed0 + step * nrm)
        except SeedNotOnCurve:
            continue
        v, g, _ = _jet1(field, seed)
        sign = 1 if (np.array([-g[1], g[0]]) @ e) > 0 else -1
        c = trace_nodal(field, seed, step, window, stop_points=stops, direction=sign, **kw)
        c = PlanarCurve(np.vstack([cp.location, c.vertices]), False, [0] + [i + 1 for i in c.corner_tags],
                        None, None, None, ("critical", c.end_kinds[1]))
        out.append(c)
    return out


# ---------------------------------------------------------------------------
# domain assembly
# ---------------------------------------------------------------------------


def assemble_dirichlet_domain(curves, tol: float = 1e-6):
    """Stitch traced arcs into a closed, simple, counterclockwise boundary.

    Returns ``(boundary, area)``.  Junctions between arcs become corner tags.
    """
    curves = list(curves)
    if not curves:
        raise NotClosed("no curves given")
    if len(curves) == 1 and curves[0].closed:
        b = curves[0]
        b = PlanarCurve(b.vertices.copy(), True, list(b.corner_tags), b.values, b.grad_norms)
    else:
        if any(c.closed for c in curves):
            raise NotClosed("cannot join a closed curve with other arcs")
        remaining = list(range(1, len(curves)))
        verts = [curves[0].vertices]
        tags = []
        end = curves[0].vertices[-1]
        first = curves[0].vertices[0]
        while remaining:
            best = None
            for i in remaining:
                c = curves[i].vertices
                for rev in (False, True):
                    head = c[-1] if rev else c[0]
                    d = np.linalg.norm(head - end)
                    if d <= tol and (best is None or d < best[0]):
                        best = (d, i, rev)
            if best is None:
                raise NotClosed(f"no arc starts within {tol:g} of {end.tolist()}")
            _, i, rev = best
            c = curves[i].vertices[::-1] if rev else curves[i].vertices
            tags.append(sum(len(x) for x in verts) - 1)
            verts.append(c[1:])
            end = c[-1]
            remaining.remove(i)
        if np.linalg.norm(end - first) > tol:
            raise NotClosed(f"boundary gap {np.linalg.norm(end - first):.3g} exceeds {tol:g}")
        allv = np.vstack(verts)[:-1]
        tags = sorted(set(tags) | {0})
        b = PlanarCurve(allv, True, tags)
    if not shapely.LinearRing(b.vertices).is_simple:
        raise SelfIntersecting("assembled boundary intersects itself")
    if b.area() < 0:
        n = len(b.vertices)
        idx = (n - np.arange(n)) % n
        pick = lambda a: None if a is None else np.asarray(a)[idx]
        b = PlanarCurve(b.vertices[idx], True, sorted((n - i) % n for i in b.corner_tags),
                        pick(b.values), pick(b.grad_norms))
    return b, float(b.area())
