"""Execution-cost analytics: decay exploitation, information premium, VWAPs.

The closed-form side prices the gain an informed trader extracts by pausing
until the post-trade decay completes before resuming; the Monte Carlo side
prices constant-rate (VWAP) execution against background trends, exactly per
the running-cost sum, and performs the static mean-variance rate selection.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from ._mc import map_replicas, random_signs, sample_trends_exact_total
from .decay import full_decay_lambda
from .errors import ParameterError
from .numerics import LogLogFit, fit_loglog_slope, solve_root
from .sizes import RandomSource, TailDistribution

__all__ = [
    "FastTradeAnalytics", "StrategySchedule", "VwapCostReport", "f_delta",
    "gain_analytics", "bucket_strategy", "trivial_strategy_bounds",
    "asymmetry_premium", "AsymmetryPremium", "vwap_cost_mc",
]


# ---------------------------------------------------------------------------
# decay-exploitation closed forms
# ---------------------------------------------------------------------------

def f_delta(delta: float) -> float:
    """Catch-up volume ratio L_eq/L: unique positive root of
    (1+x)^delta - x^delta = 1/(delta+1).  No root exists for delta >= 1."""
    if not 0.0 < delta < 1.0:
        raise ParameterError("delta must lie in (0, 1): the defining equation "
                             "has no positive root at delta = 1")
    target = 1.0 / (delta + 1.0)

    def g(x: float) -> float:
        return (1.0 + x) ** delta - x ** delta - target

    hi = 1.0
    while g(hi) > 0.0:
        hi *= 2.0
    return solve_root(g, 1e-16, hi, tol=1e-13)


@dataclass(frozen=True)
class FastTradeAnalytics:
    """Closed-form quantities for the pause-and-resume strategy."""

    delta: float
    f: float          # L_eq / L
    g: float          # savings kernel (1+f)^(d+1) - 1 - f - f^(d+1)
    gain: float       # single-step relative saving
    gain_max: float   # infinite-step bound
    lam: float        # relative full-decay time from the decay model


def gain_analytics(delta: float) -> FastTradeAnalytics:
    f = f_delta(delta)
    d1 = delta + 1.0
    g = (1.0 + f) ** d1 - 1.0 - f - f ** d1
    gain = g / (1.0 + f) ** d1
    gain_max = gain / (1.0 - (1.0 + f) ** (-d1))
    lam = full_decay_lambda(delta)
    return FastTradeAnalytics(delta=delta, f=f, g=g, gain=gain,
                              gain_max=gain_max, lam=lam)


@dataclass
class StrategySchedule:
    """Bucketed pause-and-resume execution plan.

    Bucket n has size f * L_{n-1}; after each bucket the trader waits for the
    decay to finish (lambda times the trading time elapsed so far).  The
    completion time reported is the exact geometric sum
    sum_k (1+f)^k lam^(N-k) L_0, which collapses to
    (1+f)/(1+f-lam) * L_N for lam < 1+f.
    """

    bucket_sizes: List[float]
    wait_times: List[float]
    total_volume: float
    relative_saving: float
    completion_time: float
    linear_time_coefficient: Optional[float]
    lam: float
    closed_form_valid: bool


def bucket_strategy(L0: float, N: int, delta: float, C: float = 1.0,
                    lam: Optional[float] = None) -> StrategySchedule:
    """Schedule, predicted saving and completion time for N decay steps."""
    if N < 1:
        raise ParameterError("N must be >= 1")
    if L0 <= 0.0:
        raise ParameterError("L0 must be positive")
    a = gain_analytics(delta)
    lam = a.lam if lam is None else float(lam)
    f = a.f
    d1 = delta + 1.0

    sizes = [float(L0)]
    cum = float(L0)
    waits = []
    for _ in range(N):
        waits.append(lam * cum)
        nxt = f * cum
        sizes.append(nxt)
        cum += nxt
    total = L0 * (1.0 + f) ** N

    r = (1.0 + f) ** (-d1)
    saving = a.gain * (1.0 - r ** N) / (1.0 - r)

    ks = np.arange(N + 1)
    completion = float(L0 * np.sum((1.0 + f) ** ks * lam ** (N - ks)))
    valid = lam < 1.0 + f
    lin = (1.0 + f) / (1.0 + f - lam) if valid else None
    return StrategySchedule(bucket_sizes=sizes, wait_times=waits,
                            total_volume=total, relative_saving=saving,
                            completion_time=completion,
                            linear_time_coefficient=lin, lam=lam,
                            closed_form_valid=valid)


def trivial_strategy_bounds(delta: float, L: float, lam: float) -> tuple[float, float]:
    """One-trade-at-a-time strategy: saving bound delta/(delta+1), completion
    time lam L^2 / 2 (quadratic in volume)."""
    if not 0.0 < delta < 1.0:
        raise ParameterError("delta must lie in (0, 1)")
    return delta / (delta + 1.0), lam * L * L / 2.0


# ---------------------------------------------------------------------------
# asymmetric-information premium
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AsymmetryPremium:
    per_unit: float
    total: float


def asymmetry_premium(l: float, mu: float, sigma_T: float, delta: float,
                      dist: TailDistribution) -> AsymmetryPremium:
    """Extra reversion uncertainty priced by an uninformed market maker:

        dp_inf(l) = delta sigma_T (sqrt(1-mu)/mu) l^(delta-1/2) / E(l^{2 delta - 1}).

    Vanishes at mu = 1 (no noise to hide in); for delta = 1/2 the premium per
    unit volume is independent of l.
    """
    if not 0.0 < mu <= 1.0:
        raise ParameterError("mu must lie in (0, 1]")
    if mu == 1.0:
        return AsymmetryPremium(0.0, 0.0)
    m = dist.moment(2.0 * delta - 1.0)
    per_unit = delta * sigma_T * math.sqrt(1.0 - mu) / mu * l ** (delta - 0.5) / m
    return AsymmetryPremium(per_unit=per_unit, total=l * per_unit)


# ---------------------------------------------------------------------------
# VWAP cost Monte Carlo
# ---------------------------------------------------------------------------

@dataclass
class VwapCostReport:
    l_A: float
    mu_tilde_grid: np.ndarray
    mean_cost: np.ndarray
    cost_variance: np.ndarray
    stderr: np.ndarray
    beta: Optional[LogLogFit]
    lambda_risk: float
    optimal_rate: float


def _vwap_cost_replica(gen: np.random.Generator, l_A: float, rate_ratio: float,
                       dist: TailDistribution, C: float, delta: float) -> float:
    """Exact running cost of a constant-rate execution across one trend draw.

    cost = C/(delta+1) * r * sum_i l_i * sum_{k<=i} eps_k (1 + eps_k r)^delta l_k^delta
    with r = mu_tilde/mu and trends truncated at total volume l_A / r.
    """
    total = l_A / rate_ratio
    ls = sample_trends_exact_total(gen, dist, total)
    eps = random_signs(gen, len(ls))
    terms = eps * (1.0 + eps * rate_ratio) ** delta * ls ** delta
    running = np.cumsum(terms)
    return float(C / (delta + 1.0) * rate_ratio * np.sum(ls * running))


def vwap_cost_mc(l_A: float, mu_tilde_grid: Sequence[float], mu: float,
                 dist: TailDistribution, C: float, delta: float,
                 replicas: int, seed: RandomSource, lambda_risk: float = 0.0,
                 threads: int = 1) -> VwapCostReport:
    """Cost mean/variance per participation rate, cost-rate exponent beta,
    and the mean-variance-optimal rate on the grid.

    The optimum maximises -E(cost) - lambda_risk * Var(cost), i.e. minimises
    the scalarised cost-risk objective.
    """
    rates = np.asarray(sorted(float(r) for r in mu_tilde_grid))
    if len(rates) == 0:
        raise ParameterError("empty rate grid")
    if np.any(rates <= 0.0) or np.any(rates > mu):
        raise ParameterError("rates must lie in (0, mu]")
    means = np.empty(len(rates))
    variances = np.empty(len(rates))
    ses = np.empty(len(rates))
    for i, r in enumerate(rates):
        vals = map_replicas(
            lambda gen, k: _vwap_cost_replica(gen, l_A, r / mu, dist, C, delta),
            replicas, seed, threads=threads, stream_offset=i * replicas)
        means[i] = vals.mean()
        variances[i] = vals.var(ddof=1) if len(vals) > 1 else 0.0
        ses[i] = vals.std(ddof=1) / math.sqrt(len(vals)) if len(vals) > 1 else 0.0
    beta = None
    if len(rates) >= 3 and np.all(means > 0):
        beta = fit_loglog_slope(rates, means)
    objective = -means - lambda_risk * variances
    optimal = float(rates[int(np.argmax(objective))])
    return VwapCostReport(l_A=l_A, mu_tilde_grid=rates, mean_cost=means,
                          cost_variance=variances, stderr=ses, beta=beta,
                          lambda_risk=lambda_risk, optimal_rate=optimal)


def write_cost_grid_csv(report: VwapCostReport, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["mu_tilde", "mean_cost", "var_cost", "stderr"])
        for r, m, v, s in zip(report.mu_tilde_grid, report.mean_cost,
                              report.cost_variance, report.stderr):
            w.writerow([f"{r:.12g}", f"{m:.12g}", f"{v:.12g}", f"{s:.12g}"])
