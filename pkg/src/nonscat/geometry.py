"""Planar domains, polyline curves and sampling helpers."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
import shapely
from scipy.stats import qmc

from .errors import DegenerateCurve


def rotation(alpha: float) -> np.ndarray:
    c, s = math.cos(alpha), math.sin(alpha)
    return np.array([[c, -s], [s, c]])


def shoelace_area(vertices: np.ndarray) -> float:
    x, y = vertices[:, 0], vertices[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def lagrange_tangents(points: np.ndarray, closed: bool = False, params=None, width: int = 7) -> np.ndarray:
    """Unit tangents from a ``width``-point Lagrange derivative in chord-length parameter.

    Accurate to order ``width - 1`` for smooth curves.  Open curves use one-sided
    stencils near the ends.  ``params`` overrides the chord-length parameter
    (open curves only).
    """
    pts = np.asarray(points, dtype=float)
    n = len(pts)
    if n < 2:
        raise DegenerateCurve("need at least two vertices")
    seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    if np.any(seg == 0.0):
        raise DegenerateCurve("duplicate consecutive vertices")
    width = min(width, n if n % 2 else n - 1) if n > 2 else n
    half = width // 2
    if closed:
        if n < width or n < 3 or np.linalg.norm(pts[0] - pts[-1]) == 0.0:
            raise DegenerateCurve(f"closed curve needs {width} distinct vertices and no repeated endpoint")
        ext = np.vstack([pts[-half:], pts, pts[:half]])
        s = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(ext, axis=0), axis=1))])
        tang = np.empty_like(pts)
        for i in range(n):
            idx = np.arange(i, i + width)
            w = _lagrange_derivative_weights(s[idx], s[i + half])
            d = w @ ext[idx]
            tang[i] = d / np.linalg.norm(d)
        return tang
    s = np.concatenate([[0.0], np.cumsum(seg)]) if params is None else np.asarray(params, dtype=float)
    tang = np.empty_like(pts)
    for i in range(n):
        lo = min(max(i - half, 0), n - width)
        idx = np.arange(lo, lo + width)
        w = _lagrange_derivative_weights(s[idx], s[i])
        d = w @ pts[idx]
        tang[i] = d / np.linalg.norm(d)
    return tang


def _lagrange_derivative_weights(nodes: np.ndarray, t: float) -> np.ndarray:
    m = len(nodes)
    w = np.zeros(m)
    for j in range(m):
        others = [nodes[i] for i in range(m) if i != j]
        denom = np.prod([nodes[j] - o for o in others])
        total = 0.0
        for a in range(len(others)):
            total += np.prod([t - others[b] for b in range(len(others)) if b != a])
        w[j] = total / denom
    return w


@dataclass
class PlanarCurve:
    """Oriented polyline with per-vertex metadata.

    ``corner_tags`` holds vertex indices where two traced arcs meet at a
    critical point; tangents are never estimated across them.
    """

    vertices: np.ndarray
    closed: bool = False
    corner_tags: list = field(default_factory=list)
    values: np.ndarray | None = None
    grad_norms: np.ndarray | None = None
    params: np.ndarray | None = None
    end_kinds: tuple = ("open", "open")
    cusp_tags: list = field(default_factory=list)

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=float).reshape(-1, 2)

    def __len__(self):
        return len(self.vertices)

    def reversed(self) -> "PlanarCurve":
        n = len(self.vertices)
        rev = lambda a: None if a is None else np.asarray(a)[::-1].copy()
        params = None if self.params is None else -np.asarray(self.params)[::-1]
        return PlanarCurve(
            self.vertices[::-1].copy(),
            self.closed,
            sorted(n - 1 - i for i in self.corner_tags),
            rev(self.values),
            rev(self.grad_norms),
            params,
            self.end_kinds[::-1],
            sorted(n - 1 - i for i in self.cusp_tags),
        )

    def area(self) -> float:
        return shoelace_area(self.vertices)

    def length(self) -> float:
        seg = np.linalg.norm(np.diff(self.vertices, axis=0), axis=1).sum()
        if self.closed:
            seg += np.linalg.norm(self.vertices[0] - self.vertices[-1])
        return float(seg)

    def pieces(self):
        """Index arrays of the smooth pieces between corner tags."""
        n = len(self.vertices)
        tags = sorted(set(self.corner_tags) | set(self.cusp_tags))
        if not tags:
            return [np.arange(n)], self.closed
        if self.closed:
            out = []
            for a, b in zip(tags, tags[1:] + [tags[0] + n]):
                out.append(np.arange(a, b + 1) % n)
            return out, False
        cuts = [0] + tags + [n - 1]
        out = [np.arange(a, b + 1) for a, b in zip(cuts, cuts[1:]) if b > a]
        return out, False

    def normals(self):
        """Unit normals (tangent rotated clockwise) per vertex; NaN at tags."""
        nrm = np.full_like(self.vertices, np.nan)
        pieces, closed = self.pieces()
        for idx in pieces:
            pts = self.vertices[idx]
            prm = None if self.params is None else np.asarray(self.params)[idx]
            if prm is not None and closed:
                prm = None
            t = lagrange_tangents(pts, closed=closed, params=prm)
            nn = np.column_stack([t[:, 1], -t[:, 0]])
            if closed:
                nrm[idx] = nn
            else:
                inner = idx[1:-1] if len(idx) > 2 else idx[:0]
                nrm[inner] = nn[1:-1]
                for end, pos in ((idx[0], 0), (idx[-1], -1)):
                    if end not in self.corner_tags and end not in self.cusp_tags:
                        nrm[end] = nn[pos]
        return nrm

    def to_jsonl(self, field_jet=None) -> str:
        """One record per vertex: x, y, v, gx, gy."""
        lines = []
        vals = grads = None
        if field_jet is not None:
            vals, grads, _ = field_jet(self.vertices)
        for i, (x, y) in enumerate(self.vertices):
            rec = {"x": _fmt(x), "y": _fmt(y)}
            if vals is not None:
                rec.update(v=_fmt(np.real(vals[i])), gx=_fmt(np.real(grads[i, 0])), gy=_fmt(np.real(grads[i, 1])))
            elif self.values is not None:
                rec["v"] = _fmt(self.values[i])
            lines.append(json.dumps(rec))
        return "\n".join(lines) + "\n"

    def to_svg(self, size: int = 400, extra=()) -> str:
        return curves_to_svg([self, *extra], size=size)


def _fmt(x):
    return float(f"{float(x):.15g}")


def curves_to_svg(curves, size: int = 400, margin: float = 0.05) -> str:
    """Polylines with red corner markers, in a square viewBox."""
    allpts = np.vstack([c.vertices for c in curves])
    lo, hi = allpts.min(axis=0), allpts.max(axis=0)
    span = float(max(hi - lo)) or 1.0
    lo = lo - margin * span
    span *= 1 + 2 * margin
    sc = size / span

    def tr(p):
        return (p[0] - lo[0]) * sc, size - (p[1] - lo[1]) * sc

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">']
    for c in curves:
        pts = " ".join("{:.3f},{:.3f}".format(*tr(p)) for p in c.vertices)
        tag = "polygon" if c.closed else "polyline"
        parts.append(f'<{tag} points="{pts}" fill="none" stroke="black" stroke-width="1"/>')
        for i in c.corner_tags:
            x, y = tr(c.vertices[i])
            parts.append(f'<circle cx="{x:.3f}" cy="{y:.3f}" r="3" fill="red"/>')
        for i in c.cusp_tags:
            x, y = tr(c.vertices[i])
            parts.append(f'<circle cx="{x:.3f}" cy="{y:.3f}" r="3" fill="blue"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


# ---------------------------------------------------------------------------
# domains
# ---------------------------------------------------------------------------


def sobol_points(n: int, lo, hi, seed: int = 0) -> np.ndarray:
    m = int(math.ceil(math.log2(max(n, 2))))
    pts = qmc.Sobol(d=2, scramble=True, seed=seed).random_base2(m)
    return np.asarray(lo) + pts * (np.asarray(hi) - np.asarray(lo))


class Domain:
    """Bounded planar domain with boundary sampling and outward normals."""

    kind = "domain"

    def contains(self, pts) -> np.ndarray:
        raise NotImplementedError

    def bbox(self):
        raise NotImplementedError

    def boundary(self, n: int = 400):
        """Return ``(points, normals)``; corners appear once per adjacent edge."""
        raise NotImplementedError

    def corners(self):
        return np.zeros((0, 2))

    def radius(self) -> float:
        lo, hi = self.bbox()
        return 0.5 * float(np.linalg.norm(np.asarray(hi) - np.asarray(lo)))

    def center(self):
        lo, hi = self.bbox()
        return 0.5 * (np.asarray(lo) + np.asarray(hi))

    def distance_to_boundary(self, pts) -> np.ndarray:
        poly = self.polygon()
        return shapely.distance(poly.exterior, shapely.points(np.asarray(pts)))

    def polygon(self, n: int = 2000):
        pts, _ = self.boundary(n)
        return shapely.Polygon(pts)

    def sample_interior(self, n: int = 10_000, seed: int = 0, margin: float = 0.0) -> np.ndarray:
        lo, hi = self.bbox()
        out = []
        total = 0
        s = seed
        while total < n:
            pts = sobol_points(2 * n, lo, hi, seed=s)
            pts = pts[self.contains(pts)]
            if margin > 0:
                pts = pts[self.distance_to_boundary(pts) > margin]
            out.append(pts)
            total += len(pts)
            s += 1
        return np.vstack(out)[:n]

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class Rectangle(Domain):
    x0: float
    x1: float
    y0: float
    y1: float
    kind = "rectangle"

    def contains(self, pts):
        p = np.asarray(pts, dtype=float).reshape(-1, 2)
        return (p[:, 0] > self.x0) & (p[:, 0] < self.x1) & (p[:, 1] > self.y0) & (p[:, 1] < self.y1)

    def bbox(self):
        return np.array([self.x0, self.y0]), np.array([self.x1, self.y1])

    def corners(self):
        return np.array([[self.x0, self.y0], [self.x1, self.y0], [self.x1, self.y1], [self.x0, self.y1]])

    def boundary(self, n=400):
        per = max(2, n // 4)
        t = np.linspace(0.0, 1.0, per + 1)
        c = self.corners()
        pts, nrm = [], []
        outward = [(0.0, -1.0), (1.0, 0.0), (0.0, 1.0), (-1.0, 0.0)]
        for e in range(4):
            a, b = c[e], c[(e + 1) % 4]
            pts.append(a + t[:, None] * (b - a))
            nrm.append(np.tile(outward[e], (len(t), 1)))
        return np.vstack(pts), np.vstack(nrm)

    def polygon(self, n=4):
        return shapely.box(self.x0, self.y0, self.x1, self.y1)

    def boundary_curve(self, n=400) -> PlanarCurve:
        per = max(2, n // 4)
        t = np.linspace(0.0, 1.0, per + 1)[:-1]
        c = self.corners()
        pts = np.vstack([c[e] + t[:, None] * (c[(e + 1) % 4] - c[e]) for e in range(4)])
        return PlanarCurve(pts, closed=True, corner_tags=[0, per, 2 * per, 3 * per])

    def to_dict(self):
        return {"kind": "rectangle", "x0": self.x0, "x1": self.x1, "y0": self.y0, "y1": self.y1}


@dataclass(frozen=True)
class Disk(Domain):
    cx: float = 0.0
    cy: float = 0.0
    r: float = 1.0
    kind = "disk"

    def contains(self, pts):
        p = np.asarray(pts, dtype=float).reshape(-1, 2)
        return np.hypot(p[:, 0] - self.cx, p[:, 1] - self.cy) < self.r

    def bbox(self):
        return np.array([self.cx - self.r, self.cy - self.r]), np.array([self.cx + self.r, self.cy + self.r])

    def radius(self):
        return self.r

    def boundary(self, n=400):
        th = np.linspace(0, 2 * np.pi, n, endpoint=False)
        nrm = np.column_stack([np.cos(th), np.sin(th)])
        return np.array([self.cx, self.cy]) + self.r * nrm, nrm

    def distance_to_boundary(self, pts):
        p = np.asarray(pts, dtype=float).reshape(-1, 2)
        return np.abs(np.hypot(p[:, 0] - self.cx, p[:, 1] - self.cy) - self.r)

    def boundary_curve(self, n=400):
        return PlanarCurve(self.boundary(n)[0], closed=True)

    def to_dict(self):
        return {"kind": "disk", "cx": self.cx, "cy": self.cy, "r": self.r}


@dataclass(frozen=True)
class Sector(Domain):
    """{(r cos phi, r sin phi): 0 < r < ell, 0 < phi < alpha}."""

    alpha: float
    ell: float = 1.0
    kind = "sector"

    def contains(self, pts):
        p = np.asarray(pts, dtype=float).reshape(-1, 2)
        r = np.hypot(p[:, 0], p[:, 1])
        phi = np.mod(np.arctan2(p[:, 1], p[:, 0]), 2 * np.pi)
        return (r < self.ell) & (r > 0) & (phi > 0) & (phi < self.alpha)

    def bbox(self):
        pts, _ = self.boundary(720)
        return pts.min(axis=0), pts.max(axis=0)

    def corners(self):
        a = self.alpha
        return np.array([[0.0, 0.0], [self.ell, 0.0], [self.ell * math.cos(a), self.ell * math.sin(a)]])

    def boundary(self, n=400):
        m = max(4, n // 3)
        t = np.linspace(0, 1, m + 1)
        a = self.alpha
        e1 = t[:, None] * np.array([self.ell, 0.0])
        n1 = np.tile([0.0, -1.0], (len(t), 1))
        th = np.linspace(0, a, m + 1)
        e2 = self.ell * np.column_stack([np.cos(th), np.sin(th)])
        n2 = np.column_stack([np.cos(th), np.sin(th)])
        e3 = (1 - t)[:, None] * np.array([self.ell * math.cos(a), self.ell * math.sin(a)])
        n3 = np.tile([-math.sin(a), math.cos(a)], (len(t), 1))
        return np.vstack([e1, e2, e3]), np.vstack([n1, n2, n3])

    def polygon(self, n=2000):
        pts, _ = self.boundary(n)
        # drop duplicated corner points for a valid ring
        keep = np.ones(len(pts), dtype=bool)
        keep[1:] = np.linalg.norm(np.diff(pts, axis=0), axis=1) > 0
        return shapely.Polygon(pts[keep])

    def to_dict(self):
        return {"kind": "sector", "alpha": self.alpha, "ell": self.ell}


class PolygonDomain(Domain):
    """Domain enclosed by a closed ``PlanarCurve``."""

    kind = "polygon"

    def __init__(self, curve: PlanarCurve):
        self.curve = curve
        self._poly = shapely.Polygon(curve.vertices)
        shapely.prepare(self._poly)

    def contains(self, pts):
        p = np.asarray(pts, dtype=float).reshape(-1, 2)
        return shapely.contains_xy(self._poly, p[:, 0], p[:, 1])

    def bbox(self):
        return self.curve.vertices.min(axis=0), self.curve.vertices.max(axis=0)

    def polygon(self, n=0):
        return self._poly

    def boundary(self, n=0):
        nrm = self.curve.normals()
        if self.curve.area() < 0:
            nrm = -nrm
        return self.curve.vertices, nrm

    def to_dict(self):
        return {"kind": "polygon", "vertices": self.curve.vertices.tolist()}


def domain_from_dict(d: dict) -> Domain:
    kind = d["kind"]
    if kind == "rectangle":
        return Rectangle(d["x0"], d["x1"], d["y0"], d["y1"])
    if kind == "disk":
        return Disk(d.get("cx", 0.0), d.get("cy", 0.0), d.get("r", 1.0))
    if kind == "sector":
        return Sector(d["alpha"], d.get("ell", 1.0))
    if kind == "polygon":
        return PolygonDomain(PlanarCurve(np.asarray(d["vertices"]), closed=True))
    raise ValueError(f"unknown domain kind {kind!r}")
