"""Forward scattering solver used to certify non-scattering numerically.

The scattered field solves ``div(A grad u_s) + k^2 q u_s = -div((A - Id) grad u_i)
- k^2 (q - 1) u_i`` on a truncated box closed by a perfectly matched layer.
The operator is a cell-centred finite-volume discretisation in flux form; the
right-hand side applies the difference of the discrete medium and background
operators to the sampled incident field, so it is supported only where the
medium differs from the background.
"""
from __future__ import annotations

import io
import json
import math
import time
from dataclasses import dataclass, field as dc_field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.interpolate import RegularGridInterpolator
from scipy.special import hankel1

from .errors import SolverDiverged, SourceInsideNeighborhood, WavelengthUnderResolved
from .fields import HelmholtzField, cut_distance
from .geometry import Domain

NON_SCATTERING = "NonScatteringConsistent"
SCATTERING = "Scattering"
INCONCLUSIVE = "Inconclusive"
MIN_ORDER = 0.8


@dataclass
class SolverConfig:
    """Grid spacing ``h`` and the widths of the free margin and the absorbing layer."""

    h: float
    margin: float = 0.5
    layer: float = 0.5
    sigma_degree: int = 2
    sigma_strength: float | None = None
    tol: float = 1e-8
    max_unknowns: int = 2_000_000
    subsample: int = 4
    min_ppw: float = 12.0
    contour_nodes: int = 720

    def to_dict(self):
        return {k: v for k, v in vars(self).items()}


@dataclass
class ScatterResult:
    us: np.ndarray
    xc: np.ndarray
    yc: np.ndarray
    rel_scatter: float
    h: float
    k: float
    contour: dict
    interior_rel: float | None = None
    info: dict = dc_field(default_factory=dict)

    def field_csv(self) -> str:
        X, Y = np.meshgrid(self.xc, self.yc, indexing="ij")
        buf = io.StringIO()
        buf.write("x,y,Re,Im\n")
        for x, y, u in zip(X.ravel(), Y.ravel(), self.us.ravel()):
            buf.write(f"{x:.15g},{y:.15g},{u.real:.15g},{u.imag:.15g}\n")
        return buf.getvalue()

    def to_dict(self):
        f = lambda x: None if x is None else float(f"{x:.15g}")
        return {"h": f(self.h), "k": f(self.k), "relScatter": f(self.rel_scatter),
                "interiorRel": f(self.interior_rel), "contour": {k: f(v) for k, v in self.contour.items()},
                "unknowns": int(self.us.size)}


# ---------------------------------------------------------------------------
# incident fields
# ---------------------------------------------------------------------------


class PointSource(HelmholtzField):
    """Outgoing fundamental solution ``(i/4) H0(k |x - x0|)``."""

    is_complex = True

    def __init__(self, location, k: float, neighborhood: Domain | None = None, min_distance: float = 1e-2):
        self.location = np.asarray(location, dtype=float)
        self.k = float(k)
        self.neighborhood = neighborhood
        self.min_distance = float(min_distance)
        if neighborhood is not None:
            inside = neighborhood.contains(self.location[None, :])[0]
            if inside or neighborhood.distance_to_boundary(self.location[None, :])[0] < self.min_distance:
                raise SourceInsideNeighborhood(f"source {self.location.tolist()} lies in the declared neighbourhood")

    def _jet(self, pts):
        d = pts - self.location
        r = np.hypot(d[:, 0], d[:, 1])
        if np.any(r < self.min_distance):
            raise SourceInsideNeighborhood("evaluation point too close to the point source")
        k = self.k
        z = k * r
        H0, H1 = hankel1(0, z), hankel1(1, z)
        val = 0.25j * H0
        e = d / r[:, None]
        fp = -0.25j * k * H1
        fpp = -0.25j * k * k * (H0 - H1 / z)
        g = fp[:, None] * e
        P = e[:, :, None] * e[:, None, :]
        H = fpp[:, None, None] * P + (fp / r)[:, None, None] * (np.eye(2) - P)
        return val, g, H

    def to_dict(self):
        return {"kind": "pointsource", "location": self.location.tolist(), "k": self.k}


def point_source_incident(location, k: float, neighborhood: Domain | None = None) -> PointSource:
    return PointSource(location, k, neighborhood)


# ---------------------------------------------------------------------------
# grid and coefficients
# ---------------------------------------------------------------------------


@dataclass
class Grid:
    x0: float
    y0: float
    h: float
    nx: int
    ny: int
    inner: tuple  # (xlo, xhi, ylo, yhi) of the region without the layer

    @property
    def xc(self):
        return self.x0 + (np.arange(self.nx) + 0.5) * self.h

    @property
    def yc(self):
        return self.y0 + (np.arange(self.ny) + 0.5) * self.h

    def centers(self):
        X, Y = np.meshgrid(self.xc, self.yc, indexing="ij")
        return np.column_stack([X.ravel(), Y.ravel()])


def build_grid(domain: Domain, h: float, margin: float, layer: float) -> Grid:
    """Grid whose cell faces pass through the lower-left corner of the domain's box."""
    lo, hi = domain.bbox()
    lo, hi = np.asarray(lo, float), np.asarray(hi, float)
    nlo = int(math.ceil((margin + layer) / h - 1e-9))
    nx, ny = (np.ceil((hi - lo) / h - 1e-9).astype(int) + 2 * nlo).tolist()
    x0, y0 = (lo - nlo * h).tolist()
    nin = int(math.ceil(layer / h - 1e-9))
    inner = (x0 + nin * h, x0 + (nx - nin) * h, y0 + nin * h, y0 + (ny - nin) * h)
    return Grid(x0, y0, h, nx, ny, inner)


def cell_coefficients(medium, grid: Grid, sub: int):
    """Cell averages of ``A`` and ``q`` by ``sub x sub`` midpoint subsampling."""
    nx, ny, h = grid.nx, grid.ny, grid.h
    a11 = np.ones((nx, ny))
    a12 = np.zeros((nx, ny))
    a22 = np.ones((nx, ny))
    q = np.ones((nx, ny))
    lo, hi = medium.domain.bbox()
    i0 = max(int(math.floor((lo[0] - grid.x0) / h)) - 1, 0)
    i1 = min(int(math.ceil((hi[0] - grid.x0) / h)) + 1, nx)
    j0 = max(int(math.floor((lo[1] - grid.y0) / h)) - 1, 0)
    j1 = min(int(math.ceil((hi[1] - grid.y0) / h)) + 1, ny)
    off = (np.arange(sub) + 0.5) / sub
    xs = grid.x0 + (np.arange(i0, i1)[:, None] + off[None, :]).ravel() * h
    ys = grid.y0 + (np.arange(j0, j1)[:, None] + off[None, :]).ravel() * h
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    p = np.column_stack([X.ravel(), Y.ravel()])
    A = medium.A_full(p)
    qq = medium.q_full(p)
    shape = (i1 - i0, sub, j1 - j0, sub)

    def avg(f):
        return f.reshape(shape).mean(axis=(1, 3))

    a11[i0:i1, j0:j1] = avg(A[:, 0, 0])
    a12[i0:i1, j0:j1] = avg(0.5 * (A[:, 0, 1] + A[:, 1, 0]))
    a22[i0:i1, j0:j1] = avg(A[:, 1, 1])
    q[i0:i1, j0:j1] = avg(qq)
    return a11, a12, a22, q


def _stretch(coord, lo, hi, width, k, sigma0, degree):
    d = np.maximum(lo - coord, 0.0) + np.maximum(coord - hi, 0.0)
    sigma = sigma0 * (d / width) ** degree
    return 1.0 + 1j * sigma / k


def assemble(grid: Grid, coeffs, k: float, sigma0: float, degree: int, layer: float):
    """Sparse matrix of ``div(A grad .) + k^2 q .`` with complex stretching, divided by cell area."""
    a11, a12, a22, q = coeffs
    nx, ny, h = grid.nx, grid.ny, grid.h
    xlo, xhi, ylo, yhi = grid.inner
    xc, yc = grid.xc, grid.yc
    xf = grid.x0 + np.arange(1, nx) * h  # interior x-faces
    yf = grid.y0 + np.arange(1, ny) * h
    sx_c = _stretch(xc, xlo, xhi, layer, k, sigma0, degree)
    sy_c = _stretch(yc, ylo, yhi, layer, k, sigma0, degree)
    sx_f = _stretch(xf, xlo, xhi, layer, k, sigma0, degree)
    sy_f = _stretch(yf, ylo, yhi, layer, k, sigma0, degree)
    idx = np.arange(nx * ny).reshape(nx, ny)
    rows, cols, vals = [], [], []

    def add(r, c, v):
        m = v != 0
        rows.append(r[m])
        cols.append(c[m])
        vals.append(v[m])

    # x-faces between (i, j) and (i+1, j)
    hx = 2 * a11[:-1] * a11[1:] / (a11[:-1] + a11[1:])
    cx = hx * (sy_c[None, :] / sx_f[:, None]) / h ** 2
    P, E = idx[:-1].ravel(), idx[1:].ravel()
    c = cx.ravel()
    add(P, P, -c); add(P, E, c); add(E, E, -c); add(E, P, c)
    # y-faces between (i, j) and (i, j+1)
    hy = 2 * a22[:, :-1] * a22[:, 1:] / (a22[:, :-1] + a22[:, 1:])
    cy = hy * (sx_c[:, None] / sy_f[None, :]) / h ** 2
    P, N = idx[:, :-1].ravel(), idx[:, 1:].ravel()
    c = cy.ravel()
    add(P, P, -c); add(P, N, c); add(N, N, -c); add(N, P, c)
    # cross terms; the medium never overlaps the layer, so no stretching here
    if np.any(a12 != 0):
        fx = 0.5 * (a12[:-1] + a12[1:])  # on x-faces, shape (nx-1, ny)
        # tangential derivative averaged over the two cells, one-sided at the box edge
        jn = np.minimum(np.arange(ny) + 1, ny - 1)
        js = np.maximum(np.arange(ny) - 1, 0)
        span = (jn - js).astype(float)
        w = fx / (span[None, :] * h) / h / 2.0  # /2 averages the two cells, /h for the divergence
        for cells_i in (idx[:-1], idx[1:]):
            N_ = cells_i[:, jn].ravel()
            S_ = cells_i[:, js].ravel()
            ww = w.ravel()
            # outflow from the left cell, inflow into the right cell
            add(idx[:-1].ravel(), N_, ww); add(idx[:-1].ravel(), S_, -ww)
            add(idx[1:].ravel(), N_, -ww); add(idx[1:].ravel(), S_, ww)
        fy = 0.5 * (a12[:, :-1] + a12[:, 1:])
        ie = np.minimum(np.arange(nx) + 1, nx - 1)
        iw = np.maximum(np.arange(nx) - 1, 0)
        span = (ie - iw).astype(float)
        w = fy / (span[:, None] * h) / h / 2.0
        for cells_j in (idx[:, :-1], idx[:, 1:]):
            E_ = cells_j[ie, :].ravel()
            W_ = cells_j[iw, :].ravel()
            ww = w.ravel()
            add(idx[:, :-1].ravel(), E_, ww); add(idx[:, :-1].ravel(), W_, -ww)
            add(idx[:, 1:].ravel(), E_, -ww); add(idx[:, 1:].ravel(), W_, ww)
    # reaction term and homogeneous Dirichlet closure at the outer boundary
    diag = (k * k * q * sx_c[:, None] * sy_c[None, :]).astype(complex)
    edge = np.zeros((nx, ny), dtype=complex)
    edge[0, :] -= 2 * a11[0, :] * (sy_c / sx_c[0]) / h ** 2
    edge[-1, :] -= 2 * a11[-1, :] * (sy_c / sx_c[-1]) / h ** 2
    edge[:, 0] -= 2 * a22[:, 0] * (sx_c / sy_c[0]) / h ** 2
    edge[:, -1] -= 2 * a22[:, -1] * (sx_c / sy_c[-1]) / h ** 2
    add(idx.ravel(), idx.ravel(), (diag + edge).ravel())
    r = np.concatenate(rows)
    c = np.concatenate(cols)
    v = np.concatenate(vals)
    return sp.csc_matrix((v, (r, c)), shape=(nx * ny, nx * ny))


def _k_eff(medium, k: float) -> float:
    """``k sqrt(max q / lambda_min(A))`` over interior samples and the boundary, where media compress most."""
    p = np.vstack([medium.domain.sample_interior(512), medium.domain.boundary(800)[0]])
    A = medium.A(p)
    lam = np.linalg.eigvalsh(0.5 * (A + np.swapaxes(A, 1, 2)))[:, 0]
    return k * math.sqrt(max(1.0, float(np.max(medium.q(p) / lam))))


def _sigma0(cfg: SolverConfig, layer: float) -> float:
    if cfg.sigma_strength is not None:
        return cfg.sigma_strength
    # one-way attenuation exp(-sigma0 * layer / (degree + 1)) of about 1e-6
    return 14.0 * (cfg.sigma_degree + 1) / layer


def _contour(domain: Domain, grid: Grid, n: int):
    c = domain.center()
    r_dom = domain.radius()
    xlo, xhi, ylo, yhi = grid.inner
    r_in = min(c[0] - xlo, xhi - c[0], c[1] - ylo, yhi - c[1])
    R = 0.5 * (r_dom + r_in)
    th = 2 * np.pi * np.arange(n) / n
    return c + R * np.column_stack([np.cos(th), np.sin(th)]), float(R)


def nested_dissection(nx: int, ny: int, leaf: int = 8) -> np.ndarray:
    """Geometric nested-dissection ordering of an ``nx`` by ``ny`` grid indexed as ``i * ny + j``."""
    out = []

    def rec(i0, i1, j0, j1):
        if (i1 - i0) * (j1 - j0) <= leaf * leaf:
            I, J = np.meshgrid(np.arange(i0, i1), np.arange(j0, j1), indexing="ij")
            out.append((I * ny + J).ravel())
        elif i1 - i0 >= j1 - j0:
            m = (i0 + i1) // 2
            rec(i0, m, j0, j1)
            rec(m + 1, i1, j0, j1)
            out.append(m * ny + np.arange(j0, j1))
        else:
            m = (j0 + j1) // 2
            rec(i0, i1, j0, m)
            rec(i0, i1, m + 1, j1)
            out.append(np.arange(i0, i1) * ny + m)

    rec(0, nx, 0, ny)
    return np.concatenate(out)


def _direct_solve(M, rhs, nx: int, ny: int, tol: float):
    """Sparse LU in nested-dissection order without pivoting; falls back to COLAMD with pivoting."""
    p = nested_dissection(nx, ny)
    M = M.tocsr()
    try:
        lu = spla.splu(M[p][:, p].tocsc(), permc_spec="NATURAL", diag_pivot_thresh=0.0,
                       options={"SymmetricMode": True})
        us = np.empty_like(rhs)
        us[p] = lu.solve(rhs[p])
        resid = float(np.linalg.norm(M @ us - rhs) / np.linalg.norm(rhs))
        if np.isfinite(resid) and resid <= tol:
            return us, resid
    except RuntimeError:
        pass
    us = spla.spsolve(M.tocsc(), rhs)
    return us, float(np.linalg.norm(M @ us - rhs) / np.linalg.norm(rhs))


def assemble_and_solve(medium, u_i: HelmholtzField, k: float, cfg: SolverConfig, interior_field=None) -> ScatterResult:
    """Solve for the scattered field and measure it on a circle between the medium and the layer."""
    t0 = time.perf_counter()
    if k <= 0:
        raise ValueError("k must be positive")
    k_eff = _k_eff(medium, k)
    ppw = 2 * math.pi / (k_eff * cfg.h)
    if ppw < cfg.min_ppw:
        raise WavelengthUnderResolved(f"{ppw:.1f} points per wavelength < {cfg.min_ppw}")
    margin, layer = cfg.margin, cfg.layer
    grid = build_grid(medium.domain, cfg.h, margin, layer)
    if grid.nx * grid.ny > cfg.max_unknowns:
        raise SolverDiverged(f"{grid.nx * grid.ny} unknowns exceed the direct-solver budget {cfg.max_unknowns}")
    sigma0 = _sigma0(cfg, layer)
    coeffs = cell_coefficients(medium, grid, cfg.subsample)
    ones = (np.ones_like(coeffs[0]), np.zeros_like(coeffs[1]), np.ones_like(coeffs[2]), np.ones_like(coeffs[3]))
    M = assemble(grid, coeffs, k, sigma0, cfg.sigma_degree, layer)
    M0 = assemble(grid, ones, k, sigma0, cfg.sigma_degree, layer)
    D = (M - M0).tocsc()
    D.eliminate_zeros()
    D.data[np.abs(D.data) < 1e-13 * max(1.0, np.abs(D.data).max(initial=0.0))] = 0
    D.eliminate_zeros()
    support = np.unique(D.indices)
    pts = grid.centers()
    ui = np.zeros(grid.nx * grid.ny, dtype=complex)
    if len(support):
        sp_pts = pts[support]
        if u_i.cuts and np.any(cut_distance(u_i.cuts, sp_pts) <= grid.h):
            raise SourceInsideNeighborhood("incident field has a branch cut inside the medium's support")
        ui[support] = u_i.jet(sp_pts)[0]
    rhs = -(D @ ui)
    if not np.any(rhs):
        us = np.zeros_like(ui)
        resid = 0.0
    else:
        us, resid = _direct_solve(M, rhs, grid.nx, grid.ny, cfg.tol)
        if not np.isfinite(resid) or resid > cfg.tol:
            raise SolverDiverged(f"relative residual {resid:.3g} > {cfg.tol}")
    U = us.reshape(grid.nx, grid.ny)
    C, R = _contour(medium.domain, grid, cfg.contour_nodes)
    interp = RegularGridInterpolator((grid.xc, grid.yc), U, method="linear")
    us_c = interp(C)
    ui_c = u_i.jet(C, strict=False)[0]
    num = math.sqrt(np.mean(np.abs(us_c) ** 2))
    den = math.sqrt(np.mean(np.abs(ui_c) ** 2))
    rel = num / den if den > 0 else float("inf")
    interior_rel = None
    if interior_field is not None:
        inside = medium.domain.contains(pts)
        if np.any(inside):
            total = u_i.jet(pts[inside], strict=False)[0] + us[inside]
            pred = interior_field.jet(pts[inside], strict=False)[0]
            interior_rel = float(np.linalg.norm(total - pred) / np.linalg.norm(pred))
    info = {"unknowns": int(grid.nx * grid.ny), "residual": resid, "margin": margin, "layer": layer,
            "sigma0": sigma0, "ppw": ppw, "seconds": time.perf_counter() - t0}
    return ScatterResult(U, grid.xc, grid.yc, float(rel), cfg.h, k, {"radius": R, "nodes": cfg.contour_nodes},
                         interior_rel, info)


# ---------------------------------------------------------------------------
# refinement studies
# ---------------------------------------------------------------------------


@dataclass
class RefinementStudy:
    table: list
    verdict: str
    orders: list

    def to_dict(self):
        f = lambda x: None if x is None else float(f"{x:.15g}")
        return {"verdict": self.verdict, "orders": [f(o) for o in self.orders],
                "refinement": [{"h": f(r.h), "relScatter": f(r.rel_scatter), "interiorRel": f(r.interior_rel)}
                               for r in self.table]}

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)


def classify_refinement(rels, zero_tol: float = 1e-9, hs=None) -> tuple:
    """Verdict and empirical orders for ``relScatter`` values on decreasing ``hs`` (halving by default)."""
    rels = [float(r) for r in rels]
    hs = [2.0 ** -i for i in range(len(rels))] if hs is None else [float(h) for h in hs]
    orders = []
    for a, b, ha, hb in zip(rels[:-1], rels[1:], hs[:-1], hs[1:]):
        orders.append(math.log(a / b) / math.log(ha / hb) if a > 0 and b > 0 else None)
    if all(r < zero_tol for r in rels):
        return NON_SCATTERING, orders
    decreasing = all(b < a for a, b in zip(rels[:-1], rels[1:]))
    # staircased interfaces make the scheme first order; 0.8 absorbs pre-asymptotic wobble
    good_order = all(o is not None and o >= MIN_ORDER for o in orders if o is not None) and orders
    if decreasing and good_order and rels[-1] < 1e-3:
        return NON_SCATTERING, orders
    last, prev = rels[-1], rels[-2]
    if last > 1e-2 and prev > 1e-2 and abs(last - prev) <= 0.25 * last:
        return SCATTERING, orders
    return INCONCLUSIVE, orders


def resolved_h_list(medium, k: float, base=(1 / 20, 1 / 40, 1 / 80), min_ppw: float = 12.0) -> list:
    """``base`` when its coarsest level resolves ``k``; otherwise three levels from the coarsest resolved one.

    The fallback levels are ``1/n0``, ``1/(sqrt(2) n0)`` and ``1/(2 n0)`` with
    each ``n`` rounded up to a multiple of 16.
    """
    n0 = math.ceil(_k_eff(medium, k) * min_ppw / (2 * math.pi))
    if n0 <= 1 / base[0]:
        return list(base)
    up = lambda n: 16 * math.ceil(n / 16)
    n0 = up(n0)
    return [1 / n0, 1 / up(math.sqrt(2) * n0), 1 / (2 * n0)]


def refinement_study(medium, u_i: HelmholtzField, k: float, h_list, cfg: SolverConfig | None = None,
                     interior_field=None) -> RefinementStudy:
    hs = sorted((float(h) for h in h_list), reverse=True)
    if len(hs) < 2:
        raise ValueError("a refinement study needs at least two grid levels")
    base = cfg if cfg is not None else SolverConfig(h=hs[0])
    table = []
    for h in hs:
        c = SolverConfig(**{**base.to_dict(), "h": h})
        table.append(assemble_and_solve(medium, u_i, k, c, interior_field))
    verdict, orders = classify_refinement([r.rel_scatter for r in table], hs=hs)
    return RefinementStudy(table, verdict, orders)
