"""Meta-order size distributions and reproducible random sources.

Sizes are measured in unit volumes.  The tail function F(L) = P(l >= L) is
the single object everything else is built from: the latent book solver
consumes it directly and the Monte Carlo estimators sample from it.  The
impact exponent is always derived as ``gamma_tail - 1``; there is no
independent delta parameter anywhere in the package.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Tuple

import numpy as np

from .errors import DivergentMomentError, ParameterError

POWER_LAW = "power-law-truncated"
EMPIRICAL = "empirical-discrete"


@dataclass(frozen=True)
class RandomSource:
    """Seed plus stream id; one stream per Monte Carlo replica.

    Identical (seed, stream_id) pairs reproduce the same draw sequence;
    distinct stream ids give statistically independent streams.
    """

    seed: int
    stream_id: int = 0

    def __post_init__(self) -> None:
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ParameterError("seed must fit in 64 unsigned bits")
        if self.stream_id < 0:
            raise ParameterError("stream_id must be non-negative")

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=int(self.seed), spawn_key=(int(self.stream_id),))
        return np.random.Generator(np.random.PCG64(ss))

    def stream(self, stream_id: int) -> "RandomSource":
        """Same seed, different replica stream."""
        return RandomSource(self.seed, stream_id)


@dataclass(frozen=True)
class TailDistribution:
    """Meta-order size law given by its tail P(l >= L).

    Two kinds are supported: a truncated power law
    ``F(L) = (L / l_min)^-gamma`` on [l_min, l_max] (zero beyond l_max, so a
    finite l_max carries an atom at the cutoff), and an explicit discrete
    table of (integer size, tail probability) pairs.
    """

    kind: str
    gamma_tail: float = math.nan
    l_min: float = 1.0
    l_max: float = math.inf
    sizes: Tuple[int, ...] = field(default=())
    tail_probs: Tuple[float, ...] = field(default=())

    # -- constructors ------------------------------------------------------

    @staticmethod
    def power_law(gamma_tail: float, l_min: float = 1.0, l_max: float = math.inf) -> "TailDistribution":
        if not gamma_tail > 1.0:
            raise ParameterError("gamma_tail must exceed 1 (finite mean required)")
        if not l_min > 0.0:
            raise ParameterError("l_min must be positive")
        if not l_max >= l_min:
            raise ParameterError("l_max must be >= l_min")
        return TailDistribution(POWER_LAW, gamma_tail=float(gamma_tail), l_min=float(l_min), l_max=float(l_max))

    @staticmethod
    def empirical(table: Iterable[Tuple[int, float]]) -> "TailDistribution":
        rows = sorted((int(s), float(t)) for s, t in table)
        if not rows:
            raise ParameterError("empty table")
        sizes = tuple(s for s, _ in rows)
        tails = tuple(t for _, t in rows)
        if sizes[0] <= 0:
            raise ParameterError("sizes must be positive integers")
        if len(set(sizes)) != len(sizes):
            raise ParameterError("duplicate sizes in table")
        if abs(tails[0] - 1.0) > 1e-12:
            raise ParameterError("tail at the smallest size must be 1")
        for a, b in zip(tails, tails[1:]):
            if b > a + 1e-12:
                raise ParameterError("tail probabilities must be non-increasing")
        if any(not 0.0 <= t <= 1.0 for t in tails):
            raise ParameterError("tail probabilities must lie in [0, 1]")
        return TailDistribution(EMPIRICAL, l_min=float(sizes[0]), l_max=float(sizes[-1]),
                                sizes=sizes, tail_probs=tails)

    @staticmethod
    def degenerate(size: int = 1) -> "TailDistribution":
        """All meta-orders have the same size."""
        return TailDistribution.empirical([(size, 1.0)])

    # -- basic queries -----------------------------------------------------

    @property
    def impact_exponent(self) -> float:
        """delta = gamma_tail - 1 (power-law kind only)."""
        if self.kind != POWER_LAW:
            raise ParameterError("impact exponent is defined for the power-law kind")
        return self.gamma_tail - 1.0

    def _pmf(self) -> np.ndarray:
        t = np.asarray(self.tail_probs)
        return np.concatenate([t[:-1] - t[1:], [t[-1]]])

    def tail(self, L) -> float | np.ndarray:
        """F(L) = P(l >= L).  Exact; L must be positive."""
        arr = np.asarray(L, dtype=float)
        if np.any(arr <= 0.0):
            raise ParameterError("L must be positive")
        if self.kind == POWER_LAW:
            out = np.where(arr <= self.l_min, 1.0,
                           (np.maximum(arr, self.l_min) / self.l_min) ** (-self.gamma_tail))
            out = np.where(arr > self.l_max, 0.0, out)
        else:
            sizes = np.asarray(self.sizes)
            tails = np.asarray(self.tail_probs)
            j = np.searchsorted(sizes, arr, side="left")
            out = np.where(j >= len(sizes), 0.0, tails[np.minimum(j, len(sizes) - 1)])
            out = np.where(arr <= sizes[0], 1.0, out)
        return float(out) if np.isscalar(L) or arr.ndim == 0 else out

    # -- sampling ----------------------------------------------------------

    def sample_continuous(self, rng: np.random.Generator, n: int | None = None):
        """Inverse-transform draws of the raw (real-valued) size law."""
        m = 1 if n is None else int(n)
        u = 1.0 - rng.random(m)  # in (0, 1]; u == 1 maps to l_min exactly
        if self.kind == POWER_LAW:
            draws = np.minimum(self.l_min * u ** (-1.0 / self.gamma_tail), self.l_max)
        else:
            tails = np.asarray(self.tail_probs)
            sizes = np.asarray(self.sizes, dtype=float)
            # largest j with tail_j >= u (tails are non-increasing)
            j = len(tails) - 1 - np.searchsorted(tails[::-1], u, side="left")
            j = np.clip(j, 0, len(tails) - 1)
            draws = sizes[j]
        return float(draws[0]) if n is None else draws

    def sample(self, rng: np.random.Generator, n: int | None = None):
        """Integer unit-volume draws (continuous draws rounded up)."""
        draws = self.sample_continuous(rng, n if n is not None else 1)
        out = np.ceil(np.asarray(draws)).astype(np.int64)
        return int(out[0]) if n is None else out

    # -- moments -----------------------------------------------------------

    def moment(self, a: float) -> float:
        """E(l^a); closed form for the power law, exact sum for tables.

        Raises DivergentMomentError when a >= gamma with an infinite cutoff.
        """
        a = float(a)
        if self.kind == EMPIRICAL:
            sizes = np.asarray(self.sizes, dtype=float)
            return float(np.sum(sizes ** a * self._pmf()))
        g, lo, hi = self.gamma_tail, self.l_min, self.l_max
        if math.isinf(hi):
            if a >= g:
                raise DivergentMomentError(f"E(l^{a}) diverges for gamma={g} without cutoff")
            return g / (g - a) * lo ** a
        atom = (hi / lo) ** (-g) * hi ** a
        if abs(a - g) < 1e-12:
            cont = g * lo ** g * math.log(hi / lo)
        else:
            cont = g * lo ** g * (hi ** (a - g) - lo ** (a - g)) / (a - g)
        return cont + atom

    def mean(self) -> float:
        return self.moment(1.0)


def sign_autocorrelation_exponent(dist: TailDistribution) -> float:
    """Order-flow sign autocorrelations decay as tau^-(gamma-1) when
    meta-orders with this size law are executed back to back."""
    if dist.kind != POWER_LAW:
        raise ParameterError("defined for the power-law kind")
    return dist.gamma_tail - 1.0
