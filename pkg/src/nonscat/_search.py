"""Grid screening plus Newton refinement for zeros of a field gradient."""
from __future__ import annotations

import numpy as np

from .fields import cut_distance


def window_grid(window, n: int):
    x0, x1, y0, y1 = window
    xs = np.linspace(x0, x1, n)
    ys = np.linspace(y0, y1, n)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    return xs, ys, np.column_stack([X.ravel(), Y.ravel()])


def local_minima(F: np.ndarray) -> np.ndarray:
    """Indices ``(i, j)`` of interior-or-edge grid nodes no larger than their 8 neighbours."""
    P = np.pad(F, 1, constant_values=np.inf)
    c = P[1:-1, 1:-1]
    mask = np.ones_like(F, dtype=bool)
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            if di == 0 and dj == 0:
                continue
            mask &= c <= P[1 + di:P.shape[0] - 1 + di, 1 + dj:P.shape[1] - 1 + dj]
    return np.argwhere(mask)


def newton_gradient(field, x0, maxiter: int = 200, tol: float = 1e-15):
    """Newton iteration on ``grad v = 0`` using the analytic Hessian.

    Degenerate Hessians (higher-order critical points) fall back to a
    least-squares step, which still converges linearly.  Returns the final
    point and a convergence flag.
    """
    x = np.asarray(x0, dtype=float).copy()
    best = x.copy()
    best_g = np.inf
    for _ in range(maxiter):
        _, g, H = field.jet(x[None, :], strict=False)
        g = np.real(g[0])
        H = np.real(H[0])
        gn = np.linalg.norm(g)
        if gn < best_g:
            best, best_g = x.copy(), gn
        if gn == 0.0:
            break
        step = np.linalg.lstsq(H, g, rcond=1e-13)[0]
        x = x - step
        if np.linalg.norm(step) <= tol * max(1.0, np.linalg.norm(x)):
            break
    _, g, _ = field.jet(x[None, :], strict=False)
    if np.linalg.norm(np.real(g[0])) < best_g:
        best = x
    return best


def stationary_candidates(field, window, n: int = 161, score=None):
    """Refined zeros of ``grad v`` inside ``window`` (deduplicated)."""
    x0, x1, y0, y1 = window
    _, _, pts = window_grid(window, n)
    h = max(x1 - x0, y1 - y0) / (n - 1)
    v, g, _ = field.jet(pts, strict=False)
    v, g = np.real(v), np.real(g)
    F = np.linalg.norm(g, axis=1) if score is None else score(v, g)
    F = np.where(cut_distance(field.cuts, pts) > 2 * h, F, np.inf).reshape(n, n)
    scale = max(np.max(np.abs(v)), 1e-300)
    starts = [pts[i * n + j] for i, j in local_minima(F) if np.isfinite(F[i, j])]
    # cells where both gradient components change sign
    gx = g[:, 0].reshape(n, n)
    gy = g[:, 1].reshape(n, n)
    fin = np.isfinite(F)
    ok = fin[:-1, :-1] & fin[1:, 1:]
    for comp in (gx, gy):
        c = np.stack([comp[:-1, :-1], comp[1:, :-1], comp[:-1, 1:], comp[1:, 1:]])
        ok &= (c.min(axis=0) <= 0) & (c.max(axis=0) >= 0)
    half = 0.5 * np.array([(x1 - x0) / (n - 1), (y1 - y0) / (n - 1)])
    for i, j in np.argwhere(ok):
        starts.append(pts[i * n + j] + half)
    found = []
    for start in starts:
        p = newton_gradient(field, start)
        if not (x0 - 1e-9 <= p[0] <= x1 + 1e-9 and y0 - 1e-9 <= p[1] <= y1 + 1e-9):
            continue
        if np.linalg.norm(p - start) > 3 * h:
            continue
        if field.cuts and cut_distance(field.cuts, p[None, :])[0] <= 1e-9:
            continue
        _, gp, _ = field.jet(p[None, :], strict=False)
        if np.linalg.norm(np.real(gp[0])) > 1e-9 * scale * max(field.k, 1.0):
            continue
        if any(np.linalg.norm(p - q) < 1e-6 for q in found):
            continue
        found.append(p)
    found.sort(key=lambda q: (round(q[0], 9), round(q[1], 9)))
    return found, scale
