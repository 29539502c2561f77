"""Latent order book of a competitive market maker.

The book is the volume profile v_p the market maker supplies at each integer
price level p so that, against meta-orders with tail F(L), (i) the price is a
martingale level by level and (ii) he earns zero expected profit on every
order that completes at a level boundary.  Both conditions pin the reversion
gap Delta(p) jointly:

    martingale:    Delta(p) = F(L_p) / (F(L_{p-1}) - F(L_p))
    fair pricing:  Delta(p) = (sum_{k<p} L_k) / L_p

Each level is solved by finding the volume v_p that makes the two agree.
Prices are integer ticks, volumes are continuous non-negative reals; the
zero-profit equations generically have no integer-volume solution.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .errors import BracketError, DivergentMomentError, ParameterError, VolumeRangeError
from .numerics import LogLogFit, fit_loglog_slope
from .sizes import EMPIRICAL, POWER_LAW, TailDistribution

__all__ = [
    "LatentBook", "OracleReport", "solve_alpha_powerlaw", "solve_book_general",
    "power_law_book", "impact_at", "reversion_at", "calibrate_scale",
    "transient_impact", "permanent_impact", "latent_volume_profile",
    "volume_profile_slope", "impact_curve_slope", "verify_book_small",
]


@dataclass
class LatentBook:
    """Solved book: arrays indexed by price level p = 0..p_max.

    ``L`` is cumulative volume, ``delta`` the reversion gap Delta(p) (stored
    from the fair-pricing identity, exact by construction), ``exact`` flags
    levels whose martingale equation was solved exactly rather than placed at
    a support boundary of a discrete table.
    """

    v: np.ndarray
    L: np.ndarray
    delta: np.ndarray
    exact: np.ndarray
    gamma_tail: Optional[float] = None
    scale_C: float = 1.0
    truncated: bool = False

    @property
    def p_max(self) -> int:
        return len(self.L) - 1

    @property
    def L0(self) -> float:
        return float(self.L[0])

    @property
    def alpha(self) -> np.ndarray:
        """Reverted-to fraction alpha(p) = Delta(p)/p; alpha(0) := 0."""
        p = np.arange(len(self.delta), dtype=float)
        with np.errstate(invalid="ignore", divide="ignore"):
            a = np.where(p > 0, self.delta / np.where(p > 0, p, 1.0), 0.0)
        return a

    @property
    def p_inf(self) -> np.ndarray:
        """Post-completion price per level, p - Delta(p)."""
        return np.arange(len(self.delta), dtype=float) - self.delta

    def completion_prob(self) -> np.ndarray:
        """q(p) = 1/(1 + Delta(p))."""
        return 1.0 / (1.0 + self.delta)

    def cum_fair_value(self) -> np.ndarray:
        """sum_{k<=p} k v_k, the market maker's cash for a boundary order."""
        return np.cumsum(np.arange(len(self.v)) * self.v)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["p", "v_p", "L_p", "delta_p", "alpha_p"])
            alpha = self.alpha
            for p in range(len(self.L)):
                w.writerow([p, f"{self.v[p]:.12g}", f"{self.L[p]:.12g}",
                            f"{self.delta[p]:.12g}", f"{alpha[p]:.12g}"])

    @staticmethod
    def from_csv(path) -> "LatentBook":
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        v = np.array([float(r["v_p"]) for r in rows])
        L = np.array([float(r["L_p"]) for r in rows])
        d = np.array([float(r["delta_p"]) for r in rows])
        return LatentBook(v=v, L=L, delta=d, exact=np.ones(len(v), dtype=bool))


# ---------------------------------------------------------------------------
# pure power-law recursion for the reverted fraction
# ---------------------------------------------------------------------------

def solve_alpha_powerlaw(gamma_tail: float, p_max: int) -> np.ndarray:
    """alpha(1..p_max) for a pure power-law tail F(L) = L^-gamma.

    Explicit recursion
        alpha(p) = (1/p) sum_{k<p} prod_{i=k+1}^{p-1} (1 + 1/(alpha(i) i))^(-1/gamma),
    evaluated in O(p_max) with running prefix products.  alpha(p) tends to
    (gamma-1)/gamma from above; small-p values are approximation-affected.
    Returned array is indexed by p with alpha[0] = nan.
    """
    if not gamma_tail > 1.0:
        raise ParameterError("gamma_tail must exceed 1 (infinite-mean regime unsupported)")
    if p_max < 2:
        raise ParameterError("p_max must be at least 2")
    alpha = np.empty(p_max + 1)
    alpha[0] = math.nan
    g_prev = 1.0          # prod_{i<=p-1} (1 + 1/(alpha(i) i))^(1/gamma)
    g_sum = 1.0           # sum of the prefix products up to p-1
    for p in range(1, p_max + 1):
        a = g_sum / (p * g_prev)
        alpha[p] = a
        g_prev *= (1.0 + 1.0 / (a * p)) ** (1.0 / gamma_tail)
        g_sum += g_prev
    return alpha


# ---------------------------------------------------------------------------
# general level-by-level solver
# ---------------------------------------------------------------------------

def _solve_level_smooth(tail, L_prev: float, A: float) -> Optional[float]:
    """Root of F(L_prev+v) (L_prev+v+A) = A F(L_prev) for a smooth tail."""
    T_prev = tail(L_prev)
    if T_prev <= 0.0:
        return None

    def phi(x: float) -> float:
        return tail(L_prev + x) * (L_prev + x + A) - A * T_prev

    hi = max(1.0, L_prev)
    for _ in range(2000):
        if phi(hi) <= 0.0:
            break
        hi *= 2.0
    else:
        return None
    from scipy.optimize import brentq
    v = brentq(phi, 0.0, hi, xtol=1e-13, rtol=4 * np.finfo(float).eps, maxiter=200)
    return float(L_prev + v)


def _solve_level_table(sizes: np.ndarray, tails: np.ndarray, tail_at,
                       L_prev: float, A: float) -> Optional[Tuple[float, bool]]:
    """Level equation against a stepped tail.

    On each constant-tail interval the equation is linear with candidate
    L_p = A (T_prev - T)/T, increasing across intervals; the first interval
    the candidate enters gives an exact root, a candidate that jumps past its
    interval means the sign change sits at the support point in between, and
    the level is placed on that boundary (fair pricing kept exact, the
    martingale equation approximate there).
    """
    T_prev = tail_at(L_prev)
    if T_prev <= 0.0:
        return None
    j0 = int(np.searchsorted(sizes, L_prev, side="right"))
    if j0 >= len(sizes):
        return None
    T = tails[j0:]
    lefts = np.empty(len(T))
    lefts[0] = L_prev
    lefts[1:] = sizes[j0:-1]
    rights = sizes[j0:].astype(float)
    cand = np.full(len(T), np.inf)
    pos = T > 0.0
    cand[pos] = A * (T_prev - T[pos]) / T[pos]
    hit = cand > lefts
    if not hit.any():
        # the equation stays one-sided through the last populated interval;
        # the sign change sits at the end of the support
        b = float(sizes[-1])
        return (b, False) if b > L_prev else None
    j = int(np.argmax(hit))
    if cand[j] <= rights[j]:
        return float(cand[j]), True
    b = float(lefts[j])
    if b <= L_prev:
        return None
    return b, False


def solve_book_general(dist: TailDistribution, L0: float, p_max: int) -> LatentBook:
    """Solve the latent book level by level for an arbitrary size law.

    The book truncates (with ``truncated=True``) where the level equation has
    no admissible volume, e.g. once a bounded support is exhausted.
    """
    if not L0 > 0.0:
        raise ParameterError("L0 must be positive")
    if p_max < 1:
        raise ParameterError("p_max must be at least 1")
    if dist.kind == POWER_LAW and not dist.gamma_tail > 1.0:
        raise ParameterError("tail exponent must exceed 1 for a finite mean")

    v = [float(L0)]
    L = [float(L0)]
    delta = [0.0]
    exact = [True]
    truncated = False
    A = 0.0
    if dist.kind == EMPIRICAL:
        sizes = np.asarray(dist.sizes, dtype=float)
        tails = np.asarray(dist.tail_probs, dtype=float)
    for p in range(1, p_max + 1):
        A += L[-1]
        if dist.kind == EMPIRICAL:
            got = _solve_level_table(sizes, tails, dist.tail, L[-1], A)
            if got is None:
                truncated = True
                break
            Lp, is_exact = got
        else:
            Lp = _solve_level_smooth(dist.tail, L[-1], A)
            if Lp is None:
                truncated = True
                break
            is_exact = True
        v.append(Lp - L[-1])
        L.append(Lp)
        delta.append(A / Lp)
        exact.append(is_exact)
        if dist.tail(Lp) <= 0.0 or (dist.kind == EMPIRICAL and Lp >= sizes[-1]):
            truncated = True
            break
    gamma = dist.gamma_tail if dist.kind == POWER_LAW else None
    return LatentBook(v=np.array(v), L=np.array(L), delta=np.array(delta),
                      exact=np.array(exact, dtype=bool), gamma_tail=gamma,
                      truncated=truncated)


def power_law_book(gamma_tail: float, L0: float = 1.0, p_max: int = 2000,
                   scale_C: float = 1.0) -> LatentBook:
    """Latent book for a power-law size law with l_min = L0."""
    dist = TailDistribution.power_law(gamma_tail, l_min=L0)
    book = solve_book_general(dist, L0, p_max)
    book.scale_C = float(scale_C)
    return book


# ---------------------------------------------------------------------------
# impact / reversion lookups
# ---------------------------------------------------------------------------

def impact_at(book: LatentBook, L) -> float | np.ndarray:
    """Price reached after L unit volumes, linearly interpolated in volume.

    Exactly L_p maps to the integer level p; volumes within level 0 map to
    price 0.
    """
    arr = np.asarray(L, dtype=float)
    if np.any(arr <= 0.0) or np.any(arr > book.L[-1] * (1 + 1e-12)):
        raise VolumeRangeError("volume outside the solved book")
    # price is flat (0) across level 0, then linear in volume inside a level
    grid = np.concatenate([[0.0], book.L])
    prices = np.concatenate([[0.0], np.arange(len(book.L), dtype=float)])
    out = np.where(arr <= book.L[0], 0.0, np.interp(arr, grid, prices))
    return float(out) if np.isscalar(L) or arr.ndim == 0 else out


def reversion_at(book: LatentBook, L) -> float | np.ndarray:
    """Post-completion price p_inf(L) = p(L) - Delta(p(L)), interpolated."""
    x = np.asarray(impact_at(book, L), dtype=float)
    p = np.arange(len(book.delta), dtype=float)
    d = np.interp(x, p, book.delta)
    out = x - d
    return float(out) if np.isscalar(L) or out.ndim == 0 else out


# ---------------------------------------------------------------------------
# scale calibration and analytic impact forms
# ---------------------------------------------------------------------------

def calibrate_scale(sigma: float, mu: float, dist: TailDistribution,
                    delta: Optional[float] = None) -> float:
    """Tick scale C tying the impact curve to volatility per unit volume:

        C = (delta+1) sigma sqrt( E(l) / (mu E(l^{2 delta})) ).

    ``delta`` defaults to the distribution's impact exponent.
    """
    if not 0.0 < mu <= 1.0:
        raise ParameterError("participation rate mu must be in (0, 1]")
    if sigma <= 0.0:
        raise ParameterError("sigma must be positive")
    if delta is None:
        delta = dist.impact_exponent
    m1 = dist.moment(1.0)
    m2d = dist.moment(2.0 * delta)  # may raise DivergentMomentError
    return (delta + 1.0) * sigma * math.sqrt(m1 / (mu * m2d))


def transient_impact(C: float, delta: float, l) -> float | np.ndarray:
    """Peak price while executing: p_max(l) = C l^delta."""
    return C * np.asarray(l, dtype=float) ** delta if not np.isscalar(l) else C * l ** delta


def permanent_impact(C: float, delta: float, l) -> float | np.ndarray:
    """Post-reversion price: p_inf(l) = C l^delta / (delta + 1)."""
    return transient_impact(C, delta, l) / (delta + 1.0)


# ---------------------------------------------------------------------------
# latent volume profile
# ---------------------------------------------------------------------------

def latent_volume_profile(book: LatentBook) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(p, v_p, d_p = v_{p+1} - v_p) for p = 1..p_max-1."""
    p = np.arange(1, book.p_max)
    vp = book.v[1:-1]
    dp = book.v[2:] - book.v[1:-1]
    return p, vp, dp


def volume_profile_slope(book: LatentBook, decade: float = 10.0) -> LogLogFit:
    """Log-log slope of v_p against p over the top decade of levels.

    For a power-law book this approaches 1/(gamma-1) - 1.
    """
    p, vp, _ = latent_volume_profile(book)
    lo = book.p_max / decade
    m = p >= lo
    return fit_loglog_slope(p[m], vp[m])


def impact_curve_slope(book: LatentBook, decade: float = 10.0) -> LogLogFit:
    """Log-log slope of p against L_p over the top decade of levels."""
    p = np.arange(1, book.p_max + 1)
    m = p >= book.p_max / decade
    return fit_loglog_slope(book.L[1:][m], p[m])


# ---------------------------------------------------------------------------
# exhaustive small-book oracle
# ---------------------------------------------------------------------------

@dataclass
class OracleReport:
    """Exhaustive-enumeration verification of a small discrete book.

    ``max_martingale_residual`` checks p = q p_inf + (1-q)(p+1) with q taken
    from exact table sums, over levels with a continuation branch;
    ``max_fair_price_residual`` checks L_p p_inf(p) = sum k v_k on every
    level.  Per-size market-maker P&L is reported as-is: sizes completing
    strictly inside a level carry the tick-granularity premium and are not
    expected to vanish.
    """

    max_martingale_residual: float
    max_fair_price_residual: float
    per_size_mm_profit: List[Tuple[int, float]]
    martingale_residuals: np.ndarray = field(default_factory=lambda: np.array([]))
    fair_residuals: np.ndarray = field(default_factory=lambda: np.array([]))


def verify_book_small(dist: TailDistribution, book: LatentBook) -> OracleReport:
    """Replay every size of a discrete law through the book exactly."""
    if dist.kind != EMPIRICAL:
        raise ParameterError("oracle requires an empirical-discrete law")
    if len(dist.sizes) > 50:
        raise ParameterError("oracle supports at most 50 distinct sizes")
    sizes = np.asarray(dist.sizes, dtype=float)
    if sizes[-1] > book.L[-1] + 1e-9:
        raise VolumeRangeError("support exceeds the solved book")
    pmf = dist._pmf()
    p_inf = book.p_inf
    cum_fair = book.cum_fair_value()

    # fair pricing at every level: L_p p_inf(p) = sum_{k<=p} k v_k
    fair_res = np.abs(cum_fair - book.L * p_inf)

    # martingale at levels with a continuation branch, q from exact table
    # sums P(l >= x).  A level whose continuation mass is zero is terminal
    # (bounded support): the two-branch equation has no content there.
    def tail_geq(x: float) -> float:
        return float(np.sum(pmf[sizes >= x - 1e-12]))

    mart_res = []
    for p in range(1, book.p_max + 1):
        t_reach = tail_geq(book.L[p - 1])
        t_cont = tail_geq(book.L[p])
        if t_reach <= 0.0:
            break
        if t_cont <= 0.0:
            continue  # terminal level
        q = 1.0 - t_cont / t_reach
        recon = q * p_inf[p] + (1.0 - q) * (p + 1.0)
        mart_res.append(abs(p - recon))
    mart_res = np.asarray(mart_res)

    # per-size replay: deterministic path, cash at integer level prices,
    # inventory covered at the stored reversion price
    per_size: List[Tuple[int, float]] = []
    for s, w in zip(dist.sizes, pmf):
        if w <= 0.0:
            continue
        p = int(np.searchsorted(book.L, s - 1e-12, side="left"))
        p = min(p, book.p_max)
        cash = (cum_fair[p - 1] if p > 0 else 0.0) + p * (s - (book.L[p - 1] if p > 0 else 0.0))
        pnl = cash - s * p_inf[p]
        per_size.append((int(s), float(pnl)))

    return OracleReport(
        max_martingale_residual=float(mart_res.max()) if len(mart_res) else 0.0,
        max_fair_price_residual=float(fair_res.max()),
        per_size_mm_profit=per_size,
        martingale_residuals=mart_res,
        fair_residuals=fair_res,
    )
