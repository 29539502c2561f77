"""Post-completion impact decay under imperfect completion detection.

Once the informed flow stops, the market maker no longer knows whether the
meta-order is finished.  He sets the price to minimise his expected loss
between two scenarios: the order resumes (loss from having let the price
decay) or it is over (loss from holding the price above the fair level).
With survival probability P1 after t quiet trades and transient impact
C L^delta the minimiser has the closed form

    p_t / p_max = max( 1/(delta+1),  P1^-delta - ((1-P1)/P1)^delta ),

so the whole curve depends only on (t/t_max, delta); prices here are
continuous, rounding to ticks is presentation-only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence, Tuple

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .errors import ParameterError, VolumeRangeError

__all__ = [
    "DecayParams", "DecayCurve", "geometric_survival", "decay_ratio",
    "decay_curve", "full_decay_lambda", "decay_losses", "minimize_decay_loss",
]

# survival estimators P(order still running | t quiet trades), keyed by name
def geometric_survival(t, t_max: float):
    """P(1|t) = (1 - 1/t_max)^t; exp(-t/t_max) in the large-t_max limit."""
    t = np.asarray(t, dtype=float)
    if math.isinf(t_max):
        out = np.exp(-t)  # t interpreted as t/t_max
    else:
        out = (1.0 - 1.0 / t_max) ** t
    return float(out) if out.ndim == 0 else out


ESTIMATORS: dict[str, Callable] = {"geometric": geometric_survival}


@dataclass(frozen=True)
class DecayParams:
    delta: float
    t_max: float
    L: float = 1.0
    estimator: str = "geometric"

    def __post_init__(self) -> None:
        if not 0.0 < self.delta < 1.0:
            raise ParameterError("delta must lie in (0, 1)")
        if self.t_max < 1:
            raise ParameterError("t_max must be at least 1")
        if self.estimator not in ESTIMATORS:
            raise ParameterError(f"unknown estimator {self.estimator!r}")

    def survival(self, t):
        return ESTIMATORS[self.estimator](t, self.t_max)


@dataclass
class DecayCurve:
    """Relative price path after the last informed trade."""

    t: np.ndarray           # trade time since the last informed trade
    ratio: np.ndarray       # p_t / p_max, in [1/(delta+1), 1]
    delta: float
    t_max: float

    @property
    def t_over_tmax(self) -> np.ndarray:
        return self.t / self.t_max


def decay_ratio(P1, delta: float):
    """Loss-minimising price over peak, as a function of survival P1.

    Clamped to [1/(delta+1), 1]; the P1 -> 0 limit is the fair price ratio
    1/(delta+1) by continuity.
    """
    if not 0.0 < delta < 1.0:
        raise ParameterError("delta must lie in (0, 1)")
    p1 = np.asarray(P1, dtype=float)
    if np.any((p1 < 0.0) | (p1 > 1.0)):
        raise ParameterError("P1 must lie in [0, 1]")
    floor = 1.0 / (delta + 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        raw = p1 ** (-delta) - ((1.0 - p1) / p1) ** delta
    raw = np.where(p1 <= 0.0, floor, raw)
    out = np.clip(raw, floor, 1.0)
    return float(out) if out.ndim == 0 else out


def decay_curve(params: DecayParams, t_grid: Sequence[float]) -> DecayCurve:
    """Evaluate the decay ratio along a grid of quiet-trade times."""
    t = np.asarray(t_grid, dtype=float)
    ratio = decay_ratio(params.survival(t), params.delta)
    return DecayCurve(t=t, ratio=np.asarray(ratio), delta=params.delta, t_max=params.t_max)


def full_decay_lambda(delta: float, estimator: str = "geometric",
                      t_max: float = math.inf) -> float:
    """Relative time lambda at which the price first reaches p_inf.

    Solves ratio(lambda * t_max) = 1/(delta+1); with the default asymptotic
    geometric estimator the answer depends on delta only.
    """
    if not 0.0 < delta < 1.0:
        raise ParameterError("delta must lie in (0, 1)")
    surv = ESTIMATORS[estimator]
    floor = 1.0 / (delta + 1.0)

    def g(u: float) -> float:
        t = u if math.isinf(t_max) else u * t_max
        p1 = surv(t, t_max)
        return p1 ** (-delta) - ((1.0 - p1) / p1) ** delta - floor

    hi = 1.0
    while g(hi) > 0.0:
        hi *= 2.0
        if hi > 1e6:
            raise ParameterError("decay never reaches the fair price")
    return float(brentq(g, 1e-12, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps))


def decay_losses(delta: float, C: float, L: float, p_t: float) -> Tuple[float, float, float]:
    """Closed-form losses (Delta1, Delta2) and the catch-up volume L_eq.

    Delta1 is the concession to a still-running order that resumes once the
    price has decayed to p_t; Delta2 the exposure if the order was in fact
    complete.  L_eq solves p_t + I(L_eq) = I(L + L_eq) with I(l) = C l^delta.
    """
    p_max = C * L ** delta
    p_fair = p_max / (delta + 1.0)
    if not p_fair - 1e-12 <= p_t <= p_max + 1e-12:
        raise VolumeRangeError("p_t must lie between the fair price and the peak")

    def h(x: float) -> float:
        return C * ((L + x) ** delta - x ** delta) - p_t

    if p_t >= p_max:
        l_eq = 0.0
    else:
        hi = L
        while h(hi) > 0.0:
            hi *= 2.0
        l_eq = brentq(h, 0.0, hi, xtol=1e-13, rtol=4 * np.finfo(float).eps)
    d1 = (C / (delta + 1.0)) * ((L + l_eq) ** (delta + 1) - L ** (delta + 1)
                                - l_eq ** (delta + 1)) - l_eq * p_t
    d2 = L * p_t - C * L ** (delta + 1) / (delta + 1.0)
    return float(d1), float(d2), float(l_eq)


def minimize_decay_loss(delta: float, C: float, L: float, P1: float) -> float:
    """Numerical minimiser of P1*Delta1(p) + P2*Delta2(p) over the price band.

    Independent check of decay_ratio: the returned price divided by p_max
    should reproduce the closed form.
    """
    p_max = C * L ** delta
    p_fair = p_max / (delta + 1.0)

    def objective(p: float) -> float:
        d1, d2, _ = decay_losses(delta, C, L, p)
        return P1 * d1 + (1.0 - P1) * d2

    res = minimize_scalar(objective, bounds=(p_fair, p_max), method="bounded",
                          options={"xatol": 1e-10 * p_max})
    return float(res.x)
