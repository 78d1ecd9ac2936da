"""Shared numerical helpers: differencing, small Newton solvers, fits."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np


def deriv1_central4(f, x, h):
    """4th-order central first derivative of a scalar/vector-valued f."""
    return (
        -np.asarray(f(x + 2 * h))
        + 8 * np.asarray(f(x + h))
        - 8 * np.asarray(f(x - h))
        + np.asarray(f(x - 2 * h))
    ) / (12.0 * h)


def deriv2_central4(f, x, h):
    """4th-order central second derivative."""
    return (
        -np.asarray(f(x + 2 * h))
        + 16 * np.asarray(f(x + h))
        - 30 * np.asarray(f(x))
        + 16 * np.asarray(f(x - h))
        - np.asarray(f(x - 2 * h))
    ) / (12.0 * h * h)


def mixed2_richardson(f, x0, y0, h):
    """Mixed second derivative d2f/dxdy, Richardson-extrapolated cross stencil."""

    def cross(hh):
        return (
            np.asarray(f(x0 + hh, y0 + hh))
            - np.asarray(f(x0 + hh, y0 - hh))
            - np.asarray(f(x0 - hh, y0 + hh))
            + np.asarray(f(x0 - hh, y0 - hh))
        ) / (4.0 * hh * hh)

    return (4.0 * cross(h / 2) - cross(h)) / 3.0


def fd_jacobian(f, z, h=1e-7):
    """Forward-over-central FD Jacobian of f: R^n -> R^m at z."""
    z = np.asarray(z, dtype=float)
    f0 = np.atleast_1d(np.asarray(f(z), dtype=float))
    J = np.empty((f0.size, z.size))
    for j in range(z.size):
        dz = np.zeros_like(z)
        step = h * max(1.0, abs(z[j]))
        dz[j] = step
        J[:, j] = (np.atleast_1d(f(z + dz)) - np.atleast_1d(f(z - dz))) / (2 * step)
    return J


def newton_nd(f, z0, tol=1e-12, max_iter=50, jac=None, damping=True):
    """Newton iteration for f: R^n -> R^n; returns (z, ok, residual)."""
    z = np.array(z0, dtype=float)
    for _ in range(max_iter):
        fz = np.atleast_1d(np.asarray(f(z), dtype=float))
        res = float(np.linalg.norm(fz))
        if res < tol:
            return z, True, res
        J = jac(z) if jac is not None else fd_jacobian(f, z)
        try:
            step = np.linalg.solve(J, fz)
        except np.linalg.LinAlgError:
            return z, False, res
        if not np.all(np.isfinite(step)):
            return z, False, res
        znew = z - step
        if damping:
            # halve until the residual does not blow up (guards wild FD Jacobians)
            for _ in range(8):
                fn = np.atleast_1d(np.asarray(f(znew), dtype=float))
                if np.all(np.isfinite(fn)) and np.linalg.norm(fn) <= 2 * res:
                    break
                znew = (z + znew) / 2
        z = znew
    fz = np.atleast_1d(np.asarray(f(z), dtype=float))
    res = float(np.linalg.norm(fz))
    return z, res < tol, res


def bisect_scalar(f, lo, hi, tol=1e-13, max_iter=200):
    """Plain bisection; f(lo), f(hi) must have opposite signs."""
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if flo * fhi > 0:
        raise ValueError("bisect_scalar needs a sign change")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0.0 or (hi - lo) < tol:
            return mid
        if flo * fm < 0:
            hi, fhi = mid, fm
        else:
            lo, flo = mid, fm
    return 0.5 * (lo + hi)


def loglog_slope(xs, ys):
    """Least-squares slope of log|y| against log|x|."""
    xs = np.abs(np.asarray(xs, dtype=float))
    ys = np.abs(np.asarray(ys, dtype=float))
    keep = (xs > 0) & (ys > 0)
    lx, ly = np.log(xs[keep]), np.log(ys[keep])
    if lx.size < 2:
        return np.nan
    A = np.stack([lx, np.ones_like(lx)], axis=1)
    sol, *_ = np.linalg.lstsq(A, ly, rcond=None)
    return float(sol[0])


def fit_monomials(x, y, powers):
    """Least-squares coefficients of y ~ sum c_p x^p for the given powers."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    A = np.stack([x**p for p in powers], axis=1)
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    return coef, float(np.linalg.norm(resid))

# polynomial coefficient extraction on a symmetric stencil; much more stable
# than high-order divided differences for m-detection


def poly_coeffs_on_box(f, half_width, degree, n_points=None):
    """Coefficients c_j of f(t) ~ sum c_j t^j on [-h, h], by least squares.

    Returned in units of the original variable (c_j multiplies t^j).
    """
    n_points = n_points or (2 * degree + 3)
    u = np.linspace(-1.0, 1.0, n_points)
    t = half_width * u
    vals = np.array([f(ti) for ti in t], dtype=float)
    V = np.vander(u, degree + 1, increasing=True)
    coef_u, *_ = np.linalg.lstsq(V, vals, rcond=None)
    return coef_u / half_width ** np.arange(degree + 1)


def parallel_map(fn, items, threads=1):
    """Order-preserving map, optionally over a thread pool."""
    items = list(items)
    if threads is None or threads <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def geometric_schedule(start=1e-2, stop=1e-5, ratio=0.5):
    """Geometric sequence from start down to ~stop (inclusive-ish)."""
    vals = []
    v = start
    while v >= stop * (1 - 1e-12):
        vals.append(v)
        v *= ratio
    return np.array(vals)
