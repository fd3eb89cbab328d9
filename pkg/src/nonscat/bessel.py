"""Bessel functions of the first kind for real order mu >= 0.

Three regimes are used, chosen per argument:

* ascending power series for small arguments (x < 2), where no cancellation
  occurs;
* Hankel's asymptotic expansion for x >= max(25, mu**2);
* Miller's backward recurrence in between, normalised with the Neumann-type
  identity ``(x/2)**nu = sum_k (nu + 2k) Gamma(nu + k) / k! * J_{nu+2k}(x)``.

All routines are vectorised over ``x``.  Zeros of ``J_mu`` and ``J_mu'`` are
found by scanning for a sign change, bisecting, then polishing with Newton.
"""
from __future__ import annotations

import math

import numpy as np

from .errors import BesselZeroNotFound

SERIES_MAX_X = 2.0
ASYMPTOTIC_MIN_X = 25.0


def is_integer_order(mu: float, tol: float = 1e-12) -> bool:
    return abs(mu - round(mu)) <= tol


def _series(mu, x):
    # J_mu(x) = (x/2)^mu / Gamma(mu+1) * sum_m (-x^2/4)^m / (m! (mu+1)_m)
    z = -0.25 * x * x
    term = np.ones_like(x)
    total = np.ones_like(x)
    for m in range(1, 40):
        term = term * z / (m * (m + mu))
        total = total + term
        if np.all(np.abs(term) <= 1e-17 * np.abs(total)):
            break
    with np.errstate(divide="ignore"):
        lead = np.exp(mu * np.log(0.5 * x) - math.lgamma(mu + 1.0))
    return lead * total


def _asymptotic(mu, x):
    """Hankel expansion; accurate to ~1e-16 relative for x >= max(25, mu^2)."""
    four_mu2 = 4.0 * mu * mu
    p = np.ones_like(x)
    q = np.zeros_like(x)
    term = np.ones_like(x)
    prev = np.full_like(x, np.inf)
    active = np.ones(x.shape, dtype=bool)
    for j in range(1, 80):
        term = term * (four_mu2 - (2 * j - 1) ** 2) / (8.0 * j * x)
        mag = np.abs(term)
        # stop each element once its terms become negligible or start to grow
        active &= (mag < prev) & (mag > 1e-18)
        if not active.any():
            break
        contrib = np.where(active, term, 0.0)
        sign = -1.0 if (j // 2) % 2 else 1.0
        if j % 2:
            q = q + sign * contrib
        else:
            p = p + sign * contrib
        prev = mag
    omega = x - (0.5 * mu + 0.25) * math.pi
    return np.sqrt(2.0 / (math.pi * x)) * (p * np.cos(omega) - q * np.sin(omega))


def _miller(mu, x, extra=1):
    """Return J_{mu + j}(x) for j = 0..extra-1 via backward recurrence."""
    n_top = int(math.floor(mu + 1e-14))
    nu0 = mu - n_top
    if nu0 < 0:
        nu0 = 0.0
    needed = n_top + extra
    xmax = float(np.max(x))
    start = int(max(xmax + 10.0 * xmax ** (1.0 / 3.0) + 30.0, needed + 30))
    start += start % 2
    f_next = np.zeros_like(x)
    f_cur = np.full_like(x, 1e-300)
    norm = np.zeros_like(x)
    kept = np.zeros((extra,) + x.shape)
    for n in range(start, -1, -1):
        # f_cur holds the (unnormalised) value at order nu0 + n
        if n % 2 == 0:
            k = n // 2
            if k == 0:
                w = math.gamma(nu0 + 1.0)
            else:
                w = (nu0 + 2 * k) * math.exp(math.lgamma(nu0 + k) - math.lgamma(k + 1.0))
            norm = norm + w * f_cur
        if n_top <= n < needed:
            kept[n - n_top] = f_cur
        if n == 0:
            break
        f_prev = (2.0 * (nu0 + n) / x) * f_cur - f_next
        f_next, f_cur = f_cur, f_prev
        big = np.abs(f_cur) > 1e250
        if big.any():
            s = np.where(big, 1e-250, 1.0)
            f_cur = f_cur * s
            f_next = f_next * s
            norm = norm * s
            kept = kept * s
    scale = np.exp(nu0 * np.log(0.5 * x)) / norm
    return kept * scale


def besselj(mu: float, x):
    """Evaluate J_mu(x) for real order ``mu >= 0`` and ``x >= 0``."""
    return besselj_pair(mu, x)[0]


def besselj_pair(mu: float, x):
    """Return ``(J_mu(x), J_{mu+1}(x))`` evaluated together."""
    if mu < 0:
        raise ValueError("order must be nonnegative")
    xa = np.asarray(x, dtype=float)
    scalar = xa.ndim == 0
    xa = np.atleast_1d(xa)
    if np.any(xa < 0):
        raise ValueError("argument must be nonnegative")
    j0 = np.zeros_like(xa)
    j1 = np.zeros_like(xa)

    zero = xa == 0.0
    if zero.any():
        j0[zero] = 1.0 if mu == 0 else 0.0
        j1[zero] = 0.0

    small = (~zero) & (xa < SERIES_MAX_X)
    if small.any():
        xs = xa[small]
        j0[small] = _series(mu, xs)
        j1[small] = _series(mu + 1.0, xs)

    x_asym = max(ASYMPTOTIC_MIN_X, (mu + 1.0) ** 2)
    large = xa >= x_asym
    if large.any():
        xl = xa[large]
        j0[large] = _asymptotic(mu, xl)
        j1[large] = _asymptotic(mu + 1.0, xl)

    mid = (~zero) & (~small) & (~large)
    if mid.any():
        vals = _miller(mu, xa[mid], extra=2)
        j0[mid] = vals[0]
        j1[mid] = vals[1]

    if scalar:
        return float(j0[0]), float(j1[0])
    return j0, j1


def besselj_derivs(mu: float, x):
    """Return ``(J, J', J'')`` at ``x > 0``.

    ``J' = (mu/x) J - J_{mu+1}`` and ``J''`` comes from Bessel's equation
    ``J'' = -J'/x + (mu^2/x^2 - 1) J``.
    """
    xa = np.asarray(x, dtype=float)
    j, jn = besselj_pair(mu, xa)
    with np.errstate(divide="ignore", invalid="ignore"):
        jp = (mu / xa) * j - jn
        jpp = -jp / xa + (mu * mu / (xa * xa) - 1.0) * j
    return j, jp, jpp


def besselj_prime(mu: float, x):
    return besselj_derivs(mu, x)[1]


def _bisect(fun, lo, hi, flo, tol=1e-14, maxiter=200):
    for _ in range(maxiter):
        mid = 0.5 * (lo + hi)
        fm = fun(mid)
        if fm == 0.0:
            return mid
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
        if hi - lo <= tol * max(1.0, abs(mid)):
            break
    return 0.5 * (lo + hi)


def _polish(fun, dfun, x0, lo, hi):
    x = x0
    for _ in range(4):
        d = dfun(x)
        if d == 0.0:
            break
        step = fun(x) / d
        xn = x - step
        if not (lo <= xn <= hi):
            break
        x = xn
        if abs(step) < 1e-15 * max(1.0, abs(x)):
            break
    return x


def bessel_zeros(mu: float, count: int, derivative: bool = False, scan_step: float = 0.05):
    """First ``count`` positive zeros of ``J_mu`` (or of ``J_mu'``).

    The zero of ``J_0'`` at the origin is not counted.
    """
    if mu < 0:
        raise ValueError("order must be nonnegative")

    if derivative:
        def fun(t):
            return float(besselj_prime(mu, t))

        def dfun(t):
            return float(besselj_derivs(mu, t)[2])
    else:
        def fun(t):
            return float(besselj(mu, t))

        def dfun(t):
            return float(besselj_prime(mu, t))

    # no zero of J_mu or J_mu' (mu > 0) lies below mu
    x = max(mu, 1e-3) if mu > 0 else 1e-3
    window = 4.0 * mu + 20.0 + 3.2 * count
    roots = []
    fx = fun(x)
    while len(roots) < count:
        if x > window:
            raise BesselZeroNotFound(
                f"no sign change of J_{mu}{chr(39) if derivative else ''} found in [0, {window:g}]"
            )
        xn = x + scan_step
        fn = fun(xn)
        if fn == 0.0:
            roots.append(xn)
        elif (fx > 0) != (fn > 0):
            r = _bisect(fun, x, xn, fx)
            roots.append(_polish(fun, dfun, r, x, xn))
        x, fx = xn, fn
    return np.array(roots)


def bessel_first_zero(mu: float) -> float:
    """Smallest positive zero of J_mu, accurate to about 1e-13."""
    return float(bessel_zeros(mu, 1)[0])
