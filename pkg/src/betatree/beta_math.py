"""Regularized incomplete beta function and its inverse.

Both kernels are vectorized over numpy arrays and broadcast their
arguments. Scalars in give Python floats out.

The CDF uses the classical continued fraction (modified Lentz) with the
symmetry switch ``I_x(a, b) = 1 - I_{1-x}(b, a)``. The power prefactor
``x^a (1-x)^b / (a B(a, b))`` is evaluated around the mean ``a/(a+b)`` with
Stirling remainders, so that shapes of order 1e6 keep full precision.
"""
from __future__ import annotations

import math

import numpy as np
from scipy.special import gammaln, ndtri

from .errors import InvalidShape, NoConvergence

__all__ = ["beta_cdf", "beta_pdf", "beta_quantile"]

_EPS = 1e-15
_FPMIN = 1e-300
_CF_MAXITER = 50_000
_NEWTON_MAXITER = 200
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


def _check_shapes(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if np.any(~(a > 0)) or np.any(~(b > 0)) or not np.all(np.isfinite(a) & np.isfinite(b)):
        raise InvalidShape("shape parameters must be finite and > 0")
    return a, b


def _stirling_error(z):
    """``lgamma(z) - [(z - 1/2) log z - z + log(2 pi)/2]``."""
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    big = z >= 10.0
    zb = z[big]
    r = 1.0 / (zb * zb)
    out[big] = (1.0 / zb) * (1 / 12 - r * (1 / 360 - r * (1 / 1260 - r * (1 / 1680 - r / 1188))))
    zs = z[~big]
    out[~big] = gammaln(zs) - ((zs - 0.5) * np.log(zs) - zs + _HALF_LOG_2PI)
    return out


def _log_front(x, y, a, b):
    """``log(x^a y^b / (a B(a, b)))`` with ``y = 1 - x`` passed explicitly."""
    s = a + b
    x0 = a / s
    y0 = b / s
    with np.errstate(divide="ignore", invalid="ignore"):
        const = (
            0.5 * np.log(a * b / s)
            - _HALF_LOG_2PI
            - _stirling_error(a)
            - _stirling_error(b)
            + _stirling_error(s)
        )
        # a*log(x/x0) + b*log(y/y0), with the differences formed before the log
        dev = x - x0
        t = a * np.log1p(dev / x0) + b * np.log1p(-dev / y0)
        # log1p loses accuracy when the deviation is of order one; fall back
        far = np.abs(dev) > 0.5 * np.minimum(x0, y0)
        if np.any(far):
            t = np.where(far, a * np.log(x / x0) + b * np.log(y / y0), t)
    return t + const - np.log(a)


def _betacf(x, a, b):
    """Continued fraction for ``I_x(a, b)``; valid for ``x < (a+1)/(a+b+2)``."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = np.ones_like(x)
    d = 1.0 - qab * x / qap
    d = np.where(np.abs(d) < _FPMIN, _FPMIN, d)
    d = 1.0 / d
    h = d.copy()
    active = np.ones(x.shape, dtype=bool)
    idx = np.arange(x.size)
    for m in range(1, _CF_MAXITER + 1):
        i = idx[active]
        xi, ai, bi = x[i], a[i], b[i]
        m2 = 2 * m
        aa = m * (bi - m) * xi / ((qam[i] + m2) * (ai + m2))
        di = 1.0 + aa * d[i]
        di = np.where(np.abs(di) < _FPMIN, _FPMIN, di)
        ci = 1.0 + aa / c[i]
        ci = np.where(np.abs(ci) < _FPMIN, _FPMIN, ci)
        di = 1.0 / di
        hi = h[i] * di * ci
        aa = -(ai + m) * (qab[i] + m) * xi / ((ai + m2) * (qap[i] + m2))
        di = 1.0 + aa * di
        di = np.where(np.abs(di) < _FPMIN, _FPMIN, di)
        ci = 1.0 + aa / ci
        ci = np.where(np.abs(ci) < _FPMIN, _FPMIN, ci)
        di = 1.0 / di
        delta = di * ci
        hi = hi * delta
        c[i], d[i], h[i] = ci, di, hi
        done = np.abs(delta - 1.0) < _EPS
        active[i[done]] = False
        if not active.any():
            return h
    raise NoConvergence(f"continued fraction did not converge in {_CF_MAXITER} iterations")


def _cdf(x, a, b):
    """Flat-array CDF; all inputs already validated and broadcast."""
    out = np.empty_like(x)
    lo = x <= 0.0
    hi = x >= 1.0
    out[lo] = 0.0
    out[hi] = 1.0
    mid = ~(lo | hi)
    if not mid.any():
        return out
    xm, am, bm = x[mid], a[mid], b[mid]
    ym = 1.0 - xm
    front = np.exp(_log_front(xm, ym, am, bm))
    direct = xm < (am + 1.0) / (am + bm + 2.0)
    res = np.empty_like(xm)
    if direct.any():
        res[direct] = front[direct] * _betacf(xm[direct], am[direct], bm[direct])
    swap = ~direct
    if swap.any():
        # front is symmetric: x^a y^b / (a B) * a / b  is the swapped front
        fs = front[swap] * am[swap] / bm[swap]
        res[swap] = 1.0 - fs * _betacf(ym[swap], bm[swap], am[swap])
    out[mid] = np.clip(res, 0.0, 1.0)
    return out


def _pdf(x, a, b):
    y = 1.0 - x
    with np.errstate(divide="ignore", invalid="ignore"):
        lp = _log_front(x, y, a, b) + np.log(a) - np.log(x) - np.log(y)
        return np.where((x > 0) & (x < 1), np.exp(lp), 0.0)


def _unwrap(arr, scalar):
    return float(arr.reshape(())) if scalar else arr


def beta_cdf(x, a, b):
    """Regularized incomplete beta function ``I_x(a, b)``.

    Parameters
    ----------
    x : float or array_like
        Evaluation points; values outside ``[0, 1]`` are clamped.
    a, b : float or array_like
        Positive shape parameters.

    Returns
    -------
    float or ndarray
    """
    a, b = _check_shapes(a, b)
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0 and a.ndim == 0 and b.ndim == 0
    x, a, b = np.broadcast_arrays(x, a, b)
    shape = x.shape
    out = _cdf(x.ravel().copy(), a.ravel().copy(), b.ravel().copy())
    return _unwrap(out.reshape(shape), scalar)


def beta_pdf(x, a, b):
    """Beta density at ``x``."""
    a, b = _check_shapes(a, b)
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0 and a.ndim == 0 and b.ndim == 0
    x, a, b = np.broadcast_arrays(x, a, b)
    return _unwrap(np.asarray(_pdf(x, a, b)), scalar)


def beta_quantile(q, a, b):
    """Inverse of :func:`beta_cdf` in its first argument.

    Safeguarded Newton iteration: the bracket ``[lo, hi]`` is updated from
    the sign of ``cdf(x) - q`` on every step and a bisection step replaces
    any Newton step that leaves it. The start is the normal approximation.
    ``q = 0`` and ``q = 1`` map to 0 and 1.
    """
    a, b = _check_shapes(a, b)
    q = np.asarray(q, dtype=float)
    if np.any((q < 0) | (q > 1)) or np.any(np.isnan(q)):
        raise ValueError("q must lie in [0, 1]")
    scalar = q.ndim == 0 and a.ndim == 0 and b.ndim == 0
    shape = np.broadcast_shapes(q.shape, a.shape, b.shape)
    q, a, b = (v.ravel().copy() for v in np.broadcast_arrays(q, a, b))
    out = np.where(q >= 1.0, 1.0, 0.0)
    interior = (q > 0) & (q < 1)
    if interior.any():
        out[interior] = _quantile(q[interior], a[interior], b[interior])
    return _unwrap(out.reshape(shape), scalar)


def _quantile(q, a, b):
    s = a + b
    mean = a / s
    sd = np.sqrt(a * b / (s * s * (s + 1.0)))
    x = np.clip(mean + ndtri(q) * sd, 1e-3 * mean, 1.0 - 1e-3 * (1.0 - mean))
    lo = np.zeros_like(x)
    hi = np.ones_like(x)
    active = np.ones(x.shape, dtype=bool)
    idx = np.arange(x.size)
    for _ in range(_NEWTON_MAXITER):
        i = idx[active]
        xi, ai, bi, qi = x[i], a[i], b[i], q[i]
        f = _cdf(xi, ai, bi) - qi
        below = f < 0
        lo[i] = np.where(below, xi, lo[i])
        hi[i] = np.where(below, hi[i], xi)
        dens = _pdf(xi, ai, bi)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            xn = xi - f / dens
        bad = ~np.isfinite(xn) | (xn <= lo[i]) | (xn >= hi[i])
        xn = np.where(bad, 0.5 * (lo[i] + hi[i]), xn)
        xn = np.where(f == 0, xi, xn)
        step = np.abs(xn - xi)
        x[i] = xn
        tol = 4 * np.finfo(float).eps * xn + 1e-300
        done = (step <= tol) | (f == 0) | (hi[i] - lo[i] <= tol)
        active[i[done]] = False
        if not active.any():
            return x
    raise NoConvergence(f"quantile solver did not converge in {_NEWTON_MAXITER} iterations")
