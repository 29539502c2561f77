"""Small numerical utilities: log-log regression and bracketed root finding."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import brentq

from .errors import BracketError, ParameterError


@dataclass(frozen=True)
class LogLogFit:
    slope: float
    stderr: float
    intercept: float


def fit_loglog_slope(xs: Sequence[float], ys: Sequence[float],
                     window: slice | None = None) -> LogLogFit:
    """Least-squares slope of log y against log x over an index window."""
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if window is not None:
        x, y = x[window], y[window]
    if len(x) < 3:
        raise ParameterError("need at least 3 points")
    if np.any(x <= 0) or np.any(y <= 0):
        raise ParameterError("log-log fit needs positive values")
    lx, ly = np.log(x), np.log(y)
    A = np.vstack([lx, np.ones_like(lx)]).T
    coef, res, *_ = np.linalg.lstsq(A, ly, rcond=None)
    slope, intercept = coef
    n = len(lx)
    dof = n - 2
    ssr = float(res[0]) if len(res) else float(np.sum((ly - A @ coef) ** 2))
    sxx = float(np.sum((lx - lx.mean()) ** 2))
    stderr = np.sqrt(ssr / dof / sxx) if dof > 0 and sxx > 0 else 0.0
    return LogLogFit(float(slope), float(stderr), float(intercept))


def solve_root(f: Callable[[float], float], a: float, b: float,
               tol: float = 1e-12, max_iter: int = 200) -> float:
    """Root of a monotone f on [a, b] with |f(root)| <= tol (Brent).

    Raises BracketError when f(a) and f(b) do not change sign.
    """
    fa, fb = f(a), f(b)
    if fa == 0.0:
        return float(a)
    if fb == 0.0:
        return float(b)
    if np.sign(fa) == np.sign(fb):
        raise BracketError(f"no sign change on [{a}, {b}]")
    x = brentq(f, a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=max_iter)
    # brentq controls the x error; polish by bisection if |f| is still loose
    fx = f(x)
    lo, hi = (a, x) if np.sign(fa) != np.sign(fx) else (x, b)
    it = 0
    while abs(fx) > tol and hi - lo > 0.0 and it < max_iter:
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if abs(fm) < abs(fx):
            x, fx = mid, fm
        if np.sign(fm) == np.sign(f(lo)):
            lo = mid
        else:
            hi = mid
        it += 1
    return float(x)
