"""Shared Monte Carlo machinery: trend sequences and replica streams.

Trend-level estimators draw continuous sizes so their statistics match the
closed-form moments exactly; the event-level simulator is the only place
sizes are forced onto the unit-volume grid.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Sequence

import numpy as np

from .sizes import RandomSource, TailDistribution


def sample_trends_exact_total(rng: np.random.Generator, dist: TailDistribution,
                              total: float) -> np.ndarray:
    """Trend sizes drawn until their sum reaches ``total``; the last trend is
    truncated so the sum is exact."""
    mean_l = dist.mean()
    sizes = np.empty(0)
    acc = 0.0
    chunks: List[np.ndarray] = []
    while True:
        n = max(16, int((total - acc) / mean_l * 1.25) + 16)
        block = dist.sample_continuous(rng, n)
        c = acc + np.cumsum(block)
        if c[-1] >= total:
            k = int(np.searchsorted(c, total))
            prev = c[k - 1] if k > 0 else acc
            block = block[:k + 1].copy()
            block[k] = total - prev
            # guard against roundoff producing a zero-length trend
            if block[k] <= 0.0:
                block = block[:k]
            chunks.append(block)
            break
        chunks.append(block)
        acc = float(c[-1])
    return np.concatenate(chunks)


def random_signs(rng: np.random.Generator, n: int) -> np.ndarray:
    """Independent equiprobable +-1 signs."""
    return np.where(rng.random(n) < 0.5, -1.0, 1.0)


def map_replicas(fn: Callable[[np.random.Generator, int], float],
                 replicas: int, seed: RandomSource, threads: int = 1,
                 stream_offset: int = 0) -> np.ndarray:
    """Run ``fn(generator, replica_index)`` once per replica.

    Each replica owns stream ``stream_offset + index``; results are reduced
    in fixed stream order, so the output is identical for any thread count.
    """
    out = np.empty(replicas)

    def run_range(lo: int, hi: int) -> None:
        for i in range(lo, hi):
            gen = seed.stream(stream_offset + i).generator()
            out[i] = fn(gen, i)

    if threads <= 1:
        run_range(0, replicas)
    else:
        step = -(-replicas // threads)
        bounds = [(i, min(i + step, replicas)) for i in range(0, replicas, step)]
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(lambda ab: run_range(*ab), bounds))
    return out


def mean_stderr(values: Sequence[float]) -> tuple[float, float]:
    v = np.asarray(values, dtype=float)
    if len(v) <= 1:
        return float(v.mean()) if len(v) else 0.0, 0.0
    return float(v.mean()), float(v.std(ddof=1) / np.sqrt(len(v)))
