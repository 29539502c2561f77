"""Event-driven simulation of the stylized market.

One event per unit volume of trade time.  With probability mu the active
meta-order (drawn from the size law, random sign, orders back to back)
executes one unit; otherwise a noise unit trades.  Two market-maker
policies:

* ``adaptive-competitive`` -- the maker supplies the latent book.  The price
  walks the book's levels while an order executes and steps to the stored
  reversion level the moment it completes (perfect completion detection);
  noise never moves the price.  Meta-order volumes are quantized to the
  book's level boundaries (an order consumes whole price queues), which
  realizes the zero-expected-profit construction exactly, order by order;
  partial-queue completions would otherwise carry the tick-granularity
  premium that is out of scope here.
* ``passive-refill`` -- every market order consumes one unit at the best
  quote and the queue refills at the same price, so the price moves one tick
  in the trade direction regardless of who trades.  Autocorrelated signs then
  make the price superdiffusive.

The maker's ledger tracks the informed-flow book only: fills accrue cash and
(short) inventory, and each completion is covered at the post-reversion
price, so adaptive inventory returns to zero at every completion.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .book import LatentBook
from .errors import ParameterError
from .numerics import LogLogFit, fit_loglog_slope
from .sizes import RandomSource, TailDistribution

__all__ = [
    "SimConfig", "EventLog", "OrderLog", "SimResult", "run_simulation",
    "volatility_signature", "SignaturePoint", "variance_growth",
    "mm_pnl_by_size", "PnlBucket", "sign_autocorrelation",
    "decision_increments",
]

ADAPTIVE = "adaptive-competitive"
PASSIVE = "passive-refill"

OWNER_INFORMED = 0
OWNER_NOISE = 1
OWNER_TRADER_A = 2
OWNER_NAMES = {OWNER_INFORMED: "informed", OWNER_NOISE: "noise",
               OWNER_TRADER_A: "trader-A"}


@dataclass(frozen=True)
class SimConfig:
    dist: TailDistribution
    mu: float
    horizon: int
    policy: str = ADAPTIVE
    book: Optional[LatentBook] = None
    seed: RandomSource = RandomSource(0)

    def __post_init__(self) -> None:
        if not 0.0 < self.mu <= 1.0:
            raise ParameterError("mu must lie in (0, 1]")
        if self.horizon < 1:
            raise ParameterError("horizon must be at least 1")
        if self.policy not in (ADAPTIVE, PASSIVE):
            raise ParameterError(f"unknown policy {self.policy!r}")
        if self.policy == ADAPTIVE and self.book is None:
            raise ParameterError("adaptive policy needs a solved book")


@dataclass
class EventLog:
    """Columnar trade log; row i is trade time i."""

    sign: np.ndarray          # +-1
    owner: np.ndarray         # OWNER_* codes
    price_before: np.ndarray
    price_after: np.ndarray
    volume: np.ndarray

    def __len__(self) -> int:
        return len(self.sign)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["index", "sign", "owner", "price_before", "price_after"])
            for i in range(len(self.sign)):
                w.writerow([i, int(self.sign[i]), OWNER_NAMES[int(self.owner[i])],
                            f"{self.price_before[i]:.12g}", f"{self.price_after[i]:.12g}"])


@dataclass
class OrderLog:
    """One row per meta-order that started within the horizon."""

    level: np.ndarray         # completion level p* (adaptive) or -1
    size: np.ndarray          # executed volume target
    sign: np.ndarray
    pnl: np.ndarray           # maker P&L marked at the reversion price
    completed: np.ndarray     # bool

    def __len__(self) -> int:
        return len(self.size)


@dataclass
class SimResult:
    config: SimConfig
    events: EventLog
    orders: OrderLog
    mm_cash: np.ndarray
    mm_inventory: np.ndarray
    n_resampled: int = 0

    @property
    def price_path(self) -> np.ndarray:
        return self.events.price_after


# ---------------------------------------------------------------------------
# order generation
# ---------------------------------------------------------------------------

def _draw_levels(gen: np.random.Generator, dist: TailDistribution,
                 book: LatentBook, n: int) -> Tuple[np.ndarray, int]:
    """Completion levels for n meta-orders, resampling draws beyond the book."""
    draws = np.atleast_1d(dist.sample_continuous(gen, n))
    resampled = 0
    cap = book.L[-1]
    bad = draws > cap
    while bad.any():
        resampled += int(bad.sum())
        draws[bad] = np.atleast_1d(dist.sample_continuous(gen, int(bad.sum())))
        bad = draws > cap
    levels = np.searchsorted(book.L, draws, side="left")
    return levels.astype(np.int64), resampled


def _forward_fill_prices(horizon: int, informed_pos: np.ndarray,
                         informed_prices: np.ndarray) -> np.ndarray:
    """Full price path: informed events set the price, noise carries it."""
    marker = np.full(horizon, -1, dtype=np.int64)
    marker[informed_pos] = np.arange(len(informed_pos))
    ff = np.maximum.accumulate(marker)
    path = np.where(ff >= 0, informed_prices[np.maximum(ff, 0)], 0.0)
    return path


def run_simulation(config: SimConfig) -> SimResult:
    """Run the event loop; identical config and seed give identical logs."""
    gen = config.seed.generator()
    T = config.horizon
    informed_mask = gen.random(T) < config.mu
    n_inf = int(informed_mask.sum())
    noise_sign = np.where(gen.random(T - n_inf) < 0.5, -1, 1).astype(np.int8)

    if config.policy == PASSIVE:
        return _run_passive(config, gen, informed_mask, noise_sign)
    return _run_adaptive(config, gen, informed_mask, noise_sign)


def _order_stream(gen, config, book, n_units_needed):
    """Draw quantized meta-orders until they cover the informed event budget."""
    levels = np.empty(0, dtype=np.int64)
    n_resampled = 0
    mean_units = max(float(np.ceil(book.L[min(4, book.p_max)])), 2.0)
    while True:
        need = n_units_needed - int(np.ceil(book.L[levels]).sum()) if len(levels) else n_units_needed
        if need <= 0:
            break
        batch = max(64, int(need / mean_units) + 16)
        more, r = _draw_levels(gen, config.dist, book, batch)
        n_resampled += r
        levels = np.concatenate([levels, more])
    sizes = book.L[levels]
    units = np.ceil(sizes).astype(np.int64)
    cum_units = np.cumsum(units)
    k = int(np.searchsorted(cum_units, n_units_needed)) + 1
    levels, sizes, units = levels[:k], sizes[:k], units[:k]
    signs = np.where(gen.random(k) < 0.5, -1, 1).astype(np.int8)
    return levels, sizes, units, signs, n_resampled


def _run_adaptive(config: SimConfig, gen: np.random.Generator,
                  informed_mask: np.ndarray, noise_sign: np.ndarray) -> SimResult:
    book = config.book
    T = config.horizon
    n_inf = int(informed_mask.sum())

    if n_inf == 0:
        zero = np.zeros(T)
        events = EventLog(sign=noise_sign.copy(), owner=np.full(T, OWNER_NOISE, np.int8),
                          price_before=zero.copy(), price_after=zero.copy(),
                          volume=np.ones(T))
        orders = OrderLog(*(np.empty(0, dtype=t) for t in
                            (np.int64, float, np.int8, float, bool)))
        return SimResult(config, events, orders, zero.copy(), zero.copy())

    levels, sizes, units, osigns, n_resampled = _order_stream(gen, config, book, n_inf)
    k = len(levels)
    p_inf = book.p_inf
    fair = book.cum_fair_value()

    # base price walks by the signed permanent impact of completed orders
    base = np.concatenate([[0.0], np.cumsum(osigns * p_inf[levels])[:-1]])

    starts = np.concatenate([[0], np.cumsum(units)[:-1]])
    total_units = int(np.cumsum(units)[-1])
    order_of = np.repeat(np.arange(k), units)[:n_inf]
    e_within = np.arange(n_inf) - starts[order_of] + 1          # 1-based unit index
    w = np.minimum(e_within.astype(float), sizes[order_of])     # cumulative volume
    w_prev = np.minimum(e_within - 1.0, sizes[order_of])
    vol = w - w_prev

    lvl = np.searchsorted(book.L, w, side="left")
    is_completion = e_within == units[order_of]
    completed_orders = np.zeros(k, dtype=bool)
    completed_orders[order_of[is_completion]] = True

    inf_price = base[order_of] + osigns[order_of] * lvl
    inf_price[is_completion] = (base[order_of[is_completion]]
                                + osigns[order_of[is_completion]]
                                * p_inf[levels[order_of[is_completion]]])

    # cash swept across levels: cumcash(x) = fair[p-1] + p (x - L[p-1])
    def swept(x: np.ndarray) -> np.ndarray:
        x = np.maximum(x, 0.0)
        p = np.searchsorted(book.L, x, side="left")
        below = np.where(p > 0, fair[np.maximum(p - 1, 0)], 0.0)
        Lprev = np.where(p > 0, book.L[np.maximum(p - 1, 0)], 0.0)
        return np.where(p > 0, below + p * (x - Lprev), 0.0)

    eps_evt = osigns[order_of].astype(float)
    cash_evt = eps_evt * base[order_of] * vol + (swept(w) - swept(w_prev))
    inv_evt = -eps_evt * vol
    # completion cover at the reversion price
    comp = is_completion
    cover_price = base[order_of[comp]] + osigns[order_of[comp]] * p_inf[levels[order_of[comp]]]
    cash_evt[comp] -= eps_evt[comp] * cover_price * sizes[order_of[comp]]
    inv_evt[comp] += eps_evt[comp] * sizes[order_of[comp]]

    informed_pos = np.nonzero(informed_mask)[0]
    price_after = _forward_fill_prices(T, informed_pos, inf_price)
    price_before = np.concatenate([[0.0], price_after[:-1]])

    sign = np.empty(T, dtype=np.int8)
    sign[informed_mask] = osigns[order_of]
    sign[~informed_mask] = noise_sign
    owner = np.where(informed_mask, OWNER_INFORMED, OWNER_NOISE).astype(np.int8)
    volume = np.ones(T)
    volume[informed_mask] = vol

    cash = np.zeros(T)
    cash[informed_mask] = cash_evt
    inventory = np.zeros(T)
    inventory[informed_mask] = inv_evt

    pnl = fair[levels] - book.L[levels] * p_inf[levels]
    events = EventLog(sign=sign, owner=owner, price_before=price_before,
                      price_after=price_after, volume=volume)
    orders = OrderLog(level=levels, size=sizes, sign=osigns, pnl=pnl,
                      completed=completed_orders)
    return SimResult(config, events, orders, np.cumsum(cash),
                     np.cumsum(inventory), n_resampled)


def _run_passive(config: SimConfig, gen: np.random.Generator,
                 informed_mask: np.ndarray, noise_sign: np.ndarray) -> SimResult:
    T = config.horizon
    n_inf = int(informed_mask.sum())
    sizes = np.empty(0, dtype=np.int64)
    while sizes.sum() < n_inf:
        block = config.dist.sample(gen, max(1024, int(n_inf / max(config.dist.mean(), 1.0)) + 64))
        sizes = np.concatenate([sizes, block])
    cum = np.cumsum(sizes)
    k = int(np.searchsorted(cum, n_inf)) + 1
    sizes = sizes[:k]
    osigns = np.where(gen.random(k) < 0.5, -1, 1).astype(np.int8)
    inf_signs = np.repeat(osigns, sizes)[:n_inf]

    sign = np.empty(T, dtype=np.int8)
    sign[informed_mask] = inf_signs
    sign[~informed_mask] = noise_sign
    owner = np.where(informed_mask, OWNER_INFORMED, OWNER_NOISE).astype(np.int8)

    price_after = np.cumsum(sign.astype(float))
    price_before = np.concatenate([[0.0], price_after[:-1]])
    order_of = np.repeat(np.arange(k), sizes)[:n_inf]
    completed = np.zeros(k, dtype=bool)
    counts = np.bincount(order_of, minlength=k)
    completed[:k] = counts == sizes[:k]

    events = EventLog(sign=sign, owner=owner, price_before=price_before,
                      price_after=price_after, volume=np.ones(T))
    orders = OrderLog(level=np.full(k, -1, dtype=np.int64),
                      size=sizes.astype(float), sign=osigns,
                      pnl=np.zeros(k), completed=completed)
    # passive ledger: unit fills at the prevailing quote, never covered
    cash = np.cumsum(sign * price_after)
    inventory = np.cumsum(-sign.astype(float))
    return SimResult(config, events, orders, cash, inventory)


# ---------------------------------------------------------------------------
# diagnostics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SignaturePoint:
    lag: int
    sigma2: float        # Var(p_{s+t} - p_s) / t
    stderr: float
    skipped: bool = False


def volatility_signature(result: SimResult | np.ndarray,
                         lags: Sequence[int]) -> List[SignaturePoint]:
    """Per-lag variance of price differences over sliding windows, divided by
    the lag.  Flat in the lag means the price diffuses.  Lags with fewer than
    two non-overlapping windows are flagged and skipped."""
    path = result.price_path if isinstance(result, SimResult) else np.asarray(result)
    T = len(path)
    out: List[SignaturePoint] = []
    for lag in lags:
        lag = int(lag)
        if lag < 1 or lag > T // 10 or T - lag < 2 * lag:
            out.append(SignaturePoint(lag, math.nan, math.nan, skipped=True))
            continue
        d = path[lag:] - path[:-lag]
        var = float(d.var())
        n_eff = max((T - lag) // lag, 2)  # overlapping windows are correlated
        m2 = var
        m4 = float(np.mean((d - d.mean()) ** 4))
        se_var = math.sqrt(max(m4 - m2 * m2, 0.0) / n_eff)
        out.append(SignaturePoint(lag, var / lag, se_var / lag))
    return out


def variance_growth(result: SimResult | np.ndarray, lags: Sequence[int]) -> LogLogFit:
    """Log-log slope of Var(p_{s+t} - p_s) against the lag t.

    1 for a diffusive path; 2 - delta for passive refill before stagnation.
    """
    pts = [p for p in volatility_signature(result, lags) if not p.skipped]
    if len(pts) < 3:
        raise ParameterError("not enough usable lags")
    return fit_loglog_slope([p.lag for p in pts], [p.sigma2 * p.lag for p in pts])


@dataclass(frozen=True)
class PnlBucket:
    size: float
    mean: float
    stderr: float
    count: int


def mm_pnl_by_size(result: SimResult, min_count: int = 1) -> List[PnlBucket]:
    """Realized maker P&L per completed meta-order, bucketed by order size."""
    orders = result.orders
    done = orders.completed
    if not done.any():
        return []
    sizes = orders.size[done]
    pnl = orders.pnl[done]
    out = []
    for s in np.unique(sizes):
        m = sizes == s
        n = int(m.sum())
        if n < min_count:
            continue
        mean = float(pnl[m].mean())
        se = float(pnl[m].std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
        out.append(PnlBucket(size=float(s), mean=mean, stderr=se, count=n))
    return out


def sign_autocorrelation(result: SimResult, taus: Sequence[int]) -> List[Tuple[int, float]]:
    """Autocorrelation of the informed order signs at the given lags."""
    informed = result.events.owner == OWNER_INFORMED
    s = result.events.sign[informed].astype(float)
    out = []
    for tau in taus:
        tau = int(tau)
        if tau >= len(s) - 1:
            continue
        out.append((tau, float(np.mean(s[:-tau] * s[tau:]))))
    return out


def decision_increments(result: SimResult) -> np.ndarray:
    """Price increments at the maker's level-boundary decision points.

    Exhausting level k is followed by +1 (order continues) or a drop to the
    reversion level (order completes); under the fair book these have zero
    conditional mean.  Returns the flat sample over all completed orders.
    """
    orders = result.orders
    done = orders.completed & (orders.level >= 1)
    levels = orders.level[done]
    book = result.config.book
    cont = np.repeat(1.0, int(np.sum(levels - 1)))
    comp = -book.delta[levels]
    return np.concatenate([cont, comp])
