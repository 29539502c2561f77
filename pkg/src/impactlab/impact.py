"""Monte Carlo impact estimators.

Two observers of the same trend process:

* renormalized impact -- one slow trader works a volume l_A at rate mu_tilde
  while background trends of aggregate rate mu come and go; his permanent
  price shift is accumulated trend by trend through the marginal permanent
  impact of the volume he adds to each trend.
* aggregate impact -- an outside observer bins the price change over windows
  of L consecutive trades by the signed order-flow imbalance Q inside the
  window, with the straddling boundary trends entering pro rata.  The
  within-trend price position uses permanent-impact bookkeeping; the unreverted
  transient tail of the final trend is deliberately ignored.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from ._mc import map_replicas, mean_stderr, random_signs, sample_trends_exact_total
from .errors import ParameterError
from .numerics import LogLogFit, fit_loglog_slope
from .sizes import RandomSource, TailDistribution

__all__ = [
    "RenormConfig", "ImpactPoint", "ImpactCurve", "renormalized_impact_mc",
    "renormalized_curve", "renormalized_asymptote", "aggregate_impact_mc",
    "single_trend_impact_mc", "single_trade_cutoff_curve", "CutoffCurve",
]


@dataclass(frozen=True)
class RenormConfig:
    """One renormalized-impact experiment (a single l_A point)."""

    l_A: float
    mu_tilde: float
    mu: float
    dist: TailDistribution
    C: float
    delta: float
    replicas: int
    seed: RandomSource
    threads: int = 1
    stream_offset: int = 0

    def __post_init__(self) -> None:
        if not 0.0 < self.mu_tilde <= self.mu <= 1.0:
            raise ParameterError("need 0 < mu_tilde <= mu <= 1")
        if self.replicas < 1:
            raise ParameterError("replicas must be >= 1")
        if self.l_A <= 0.0:
            raise ParameterError("l_A must be positive")


@dataclass(frozen=True)
class ImpactPoint:
    x: float
    mean: float
    stderr: float
    n: int


@dataclass
class ImpactCurve:
    points: List[ImpactPoint]
    fitted_exponent: Optional[LogLogFit] = None
    bin_edges: Optional[np.ndarray] = None

    @property
    def x(self) -> np.ndarray:
        return np.array([p.x for p in self.points])

    @property
    def mean(self) -> np.ndarray:
        return np.array([p.mean for p in self.points])

    @property
    def stderr(self) -> np.ndarray:
        return np.array([p.stderr for p in self.points])

    def fit_exponent(self, window: slice | None = None) -> LogLogFit:
        x, y = self.x, self.mean
        m = (x > 0) & (y > 0)
        fit = fit_loglog_slope(x[m], y[m], window)
        self.fitted_exponent = fit
        return fit

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["x", "mean", "stderr", "n"])
            for p in self.points:
                w.writerow([f"{p.x:.12g}", f"{p.mean:.12g}", f"{p.stderr:.12g}", p.n])


# ---------------------------------------------------------------------------
# renormalized impact
# ---------------------------------------------------------------------------

def _renorm_replica_value(gen: np.random.Generator, cfg: RenormConfig) -> float:
    """One replica: trends until the background volume window is filled."""
    total = cfg.mu / cfg.mu_tilde * cfg.l_A
    trends = sample_trends_exact_total(gen, cfg.dist, total)
    # Delta l_i = l_i * l_A / sum(l); marginal permanent impact
    # I'(l) = C delta l^(delta-1) / (delta+1)
    coef = (cfg.l_A / total) * cfg.C * cfg.delta / (cfg.delta + 1.0)
    return coef * float(np.sum(trends ** cfg.delta))


def renormalized_impact_mc(config: RenormConfig) -> ImpactPoint:
    """Mean renormalized impact of trader A's volume l_A, with stderr.

    Trend lengths are sampled until the total concurrent volume reaches
    (mu/mu_tilde) l_A (the last trend truncated), trader A's volume is
    allocated proportionally, and his marginal permanent impact accumulated.
    """
    vals = map_replicas(lambda gen, i: _renorm_replica_value(gen, config),
                        config.replicas, config.seed, config.threads,
                        config.stream_offset)
    mean, se = mean_stderr(vals)
    return ImpactPoint(x=config.l_A, mean=mean, stderr=se, n=config.replicas)


def renormalized_curve(l_A_grid: Sequence[float], mu_tilde: float, mu: float,
                       dist: TailDistribution, C: float, delta: float,
                       replicas: int, seed: RandomSource,
                       threads: int = 1) -> ImpactCurve:
    """Impact curve over a grid of trader-A volumes (one MC point each).

    Replica streams are disjoint across grid points so the whole curve is
    reproducible regardless of the grid's order.
    """
    points = []
    for i, l_A in enumerate(l_A_grid):
        cfg = RenormConfig(l_A=float(l_A), mu_tilde=mu_tilde, mu=mu, dist=dist,
                           C=C, delta=delta, replicas=replicas, seed=seed,
                           threads=threads, stream_offset=i * replicas)
        points.append(renormalized_impact_mc(cfg))
    curve = ImpactCurve(points)
    curve.fit_exponent()
    return curve


def renormalized_asymptote(mu_tilde: float, mu: float, dist: TailDistribution,
                           C: float, delta: float) -> float:
    """Linear coefficient (mu_tilde/mu) (C delta/(delta+1)) E(l^delta)/E(l).

    This is the asymptotic impact per unit of *total concurrent volume*
    (mu/mu_tilde) l_A; per unit of trader A's own volume the slope is this
    value times mu/mu_tilde.
    """
    if not 0.0 < mu_tilde <= mu <= 1.0:
        raise ParameterError("need 0 < mu_tilde <= mu <= 1")
    return (mu_tilde / mu) * (C * delta / (delta + 1.0)) \
        * dist.moment(delta) / dist.moment(1.0)


# ---------------------------------------------------------------------------
# aggregate impact over observation windows
# ---------------------------------------------------------------------------

def _trend_panel(gen: np.random.Generator, dist: TailDistribution, n_trades: int,
                 C: float, delta: float):
    """Integer trend layout over a trade axis with permanent-impact prefix sums."""
    sizes = np.empty(0, dtype=np.int64)
    while sizes.sum() < n_trades:
        block = dist.sample(gen, max(1000, int(n_trades / max(dist.mean(), 1.0)) + 100))
        sizes = np.concatenate([sizes, block])
    bnd = np.cumsum(sizes)
    k = int(np.searchsorted(bnd, n_trades)) + 1
    sizes, bnd = sizes[:k], bnd[:k]
    eps = random_signs(gen, k)
    perm = C * sizes.astype(float) ** delta / (delta + 1.0)
    price_start = np.concatenate([[0.0], np.cumsum(eps * perm)[:-1]])
    flow_start = np.concatenate([[0], np.cumsum(eps * sizes)[:-1]])
    start = np.concatenate([[0], bnd[:-1]])

    def price(t: np.ndarray) -> np.ndarray:
        j = np.searchsorted(bnd, t, side="left")
        return price_start[j] + eps[j] * C * (t - start[j]) ** delta / (delta + 1.0)

    def flow(t: np.ndarray) -> np.ndarray:
        j = np.searchsorted(bnd, t, side="left")
        return flow_start[j] + eps[j] * (t - start[j])

    def trend_index(t: np.ndarray) -> np.ndarray:
        return np.searchsorted(bnd, t, side="left")

    return price, flow, trend_index, int(bnd[-1])


def aggregate_impact_mc(window_L: int, dist: TailDistribution, C: float,
                        delta: float, replicas: int, seed: RandomSource,
                        trades_per_replica: int = 400_000,
                        windows_per_replica: int = 50_000,
                        n_bins: int = 12,
                        bulk_quantiles: tuple[float, float] = (0.1, 0.9),
                        threads: int = 1) -> ImpactCurve:
    """Price change binned by signed imbalance Q over L-trade windows.

    Windows are placed uniformly over trade time.  Bins are symmetric around
    zero with equal-count edges on |Q|; the fitted exponent is taken over the
    bulk quantile range to keep single-giant-trend windows out of the fit.
    """
    if window_L < 1:
        raise ParameterError("window length must be >= 1")
    if window_L >= trades_per_replica:
        raise ParameterError("window longer than the simulated sequence")

    qs: List[np.ndarray] = []
    dps: List[np.ndarray] = []

    def one(gen: np.random.Generator, i: int) -> float:
        price, flow, _, total = _trend_panel(gen, dist, trades_per_replica, C, delta)
        s = gen.integers(0, total - window_L, size=windows_per_replica)
        dps.append(price(s + window_L) - price(s))
        qs.append(flow(s + window_L) - flow(s))
        return 0.0

    map_replicas(one, replicas, seed, threads=1)  # collection order must be fixed
    Q = np.concatenate(qs)
    dP = np.concatenate(dps)

    absQ = np.abs(Q)
    lo, hi = np.quantile(absQ[absQ > 0], bulk_quantiles)
    edges = np.unique(np.exp(np.linspace(np.log(max(lo, 0.5)), np.log(max(hi, 1.0)),
                                         n_bins + 1)))
    points = []
    for a, b in zip(edges[:-1], edges[1:]):
        for sgn in (1.0, -1.0):
            m = (sgn * Q > a) & (sgn * Q <= b)
            n = int(m.sum())
            if n < 50:
                continue
            mean, se = mean_stderr(dP[m])
            points.append(ImpactPoint(x=float(sgn * np.abs(Q[m]).mean()),
                                      mean=mean, stderr=se, n=n))
    points.sort(key=lambda p: p.x)
    curve = ImpactCurve(points, bin_edges=edges)
    pos = [p for p in curve.points if p.x > 0 and p.mean > 0]
    if len(pos) >= 3:
        curve.fitted_exponent = fit_loglog_slope([p.x for p in pos], [p.mean for p in pos])
    return curve


def single_trend_impact_mc(dist: TailDistribution, C: float, delta: float,
                           Ls: Sequence[int], replicas: int, seed: RandomSource,
                           trades_per_replica: int = 400_000,
                           windows_per_replica: int = 100_000) -> ImpactCurve:
    """Impact of L-trade windows lying inside a single trend, per window size.

    This is the single-trade regime of the aggregate measurement: |Q| = L and
    the curve inherits the concavity of the bare impact plus the finite-l_max
    cutoff correction.
    """
    means: dict[int, List[np.ndarray]] = {int(L): [] for L in Ls}

    def one(gen: np.random.Generator, i: int) -> float:
        price, _, trend_index, total = _trend_panel(gen, dist, trades_per_replica, C, delta)
        for L in means:
            s = gen.integers(0, total - L, size=windows_per_replica)
            keep = trend_index(s + 1) == trend_index(s + L)
            sk = s[keep]
            if len(sk):
                means[L].append(np.abs(price(sk + L) - price(sk)))
        return 0.0

    map_replicas(one, replicas, seed, threads=1)
    points = []
    for L in sorted(means):
        if not means[L]:
            continue
        vals = np.concatenate(means[L])
        mean, se = mean_stderr(vals)
        points.append(ImpactPoint(x=float(L), mean=mean, stderr=se, n=len(vals)))
    curve = ImpactCurve(points)
    if len(points) >= 3:
        curve.fit_exponent()
    return curve


@dataclass
class CutoffCurve:
    """Analytic single-trade impact with a finite-sample cutoff correction:
    I(L) = cte L^delta (1 - cte' L / l_max), constants fitted to MC output."""

    cte: float
    cte_prime: float
    l_max: float
    delta: float
    Ls: np.ndarray
    values: np.ndarray
    apparent_exponent: LogLogFit = field(default=None)

    def __call__(self, L) -> np.ndarray:
        L = np.asarray(L, dtype=float)
        return self.cte * L ** self.delta * (1.0 - self.cte_prime * L / self.l_max)


def single_trade_cutoff_curve(dist: TailDistribution, C: float, delta: float,
                              Ls: Sequence[int], mc_curve: ImpactCurve | None = None,
                              replicas: int = 4, seed: RandomSource | None = None) -> CutoffCurve:
    """Fit the cutoff-corrected form to the single-trend MC estimator.

    Requires a finite l_max (the correction scales with L/l_max); the
    apparent exponent is a log-log regression of the fitted closed form over
    L in [1, l_max/10].
    """
    if math.isinf(dist.l_max):
        raise ParameterError("cutoff curve requires a finite l_max")
    if mc_curve is None:
        if seed is None:
            raise ParameterError("need either an MC curve or a seed to run one")
        mc_curve = single_trend_impact_mc(dist, C, delta, Ls, replicas, seed)
    x, y = mc_curve.x, mc_curve.mean
    # linear least squares in (cte, cte*cte'): y = cte L^d - (cte cte'/l_max) L^(d+1)
    basis = np.vstack([x ** delta, -(x ** (delta + 1.0)) / dist.l_max]).T
    coef, *_ = np.linalg.lstsq(basis, y, rcond=None)
    cte = float(coef[0])
    cte_prime = float(coef[1] / coef[0]) if coef[0] != 0 else 0.0
    curve = CutoffCurve(cte=cte, cte_prime=cte_prime, l_max=dist.l_max,
                        delta=delta, Ls=np.asarray(Ls, dtype=float),
                        values=np.asarray(y))
    grid = np.asarray([L for L in Ls if 1 <= L <= dist.l_max / 10.0], dtype=float)
    vals = curve(grid)
    ok = vals > 0
    if ok.sum() >= 3:
        curve.apparent_exponent = fit_loglog_slope(grid[ok], vals[ok])
    return curve
