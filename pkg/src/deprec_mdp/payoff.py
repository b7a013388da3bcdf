"""
Payoff Arithmetic for deprec-mdp
Version: 1.0.0
Created: 2026-10-18

Pure functions over finite reward sequences:
- depreciated asset series (exponential recency-weighted totals)
- truncated discounted depreciating sums with a certified tail bound
- Cesaro terms of the average depreciating payoff
- the finite-path closed form of the Cesaro term and its vanishing tail

Sums longer than COMPENSATED_SUM_THRESHOLD terms use math.fsum.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.signal import lfilter

logger = logging.getLogger(__name__)

COMPENSATED_SUM_THRESHOLD = 10_000


@dataclass(frozen=True)
class DiscountSpec:
    """
    Future-discount and depreciation factors.

    Attributes:
        lam: discount factor lambda, in (0, 1)
        gamma: depreciation factor, in [0, 1); 0 recovers the plain
               discounted payoff
    """

    lam: float
    gamma: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.lam < 1.0:
            raise ValueError(f"lambda must lie in (0, 1), got {self.lam}")
        check_gamma(self.gamma)

    @property
    def scale(self) -> float:
        """1 / (1 - lambda*gamma), the immediate-reward scaling."""
        return 1.0 / (1.0 - self.lam * self.gamma)


@dataclass(frozen=True)
class AssetSeries:
    """values[n] = gamma * values[n-1] + rewards[n]."""

    values: Tuple[float, ...]
    gamma: float

    def __len__(self) -> int:
        return len(self.values)

    def __getitem__(self, index):
        return self.values[index]

    @property
    def last(self) -> float:
        return self.values[-1]


def check_gamma(gamma: float) -> None:
    if not 0.0 <= gamma < 1.0:
        raise ValueError(f"gamma must lie in [0, 1), got {gamma}")


def check_open_gamma(gamma: float) -> None:
    if not 0.0 < gamma < 1.0:
        raise ValueError(f"gamma must lie in (0, 1), got {gamma}")


def _as_rewards(rewards: Sequence[float]) -> np.ndarray:
    values = np.asarray(rewards, dtype=np.float64).reshape(-1)
    if values.size == 0:
        raise ValueError("reward sequence must not be empty")
    if not np.isfinite(values).all():
        raise ValueError("reward sequence must be finite")
    return values


def _sum(terms: np.ndarray) -> float:
    if terms.size > COMPENSATED_SUM_THRESHOLD:
        return math.fsum(terms.tolist())
    return float(np.sum(terms))


def _assets(rewards: np.ndarray, gamma: float) -> np.ndarray:
    # Direct-form filter: y[n] = x[n] + gamma * y[n-1], evaluated in order.
    return lfilter([1.0], [1.0, -gamma], rewards)


def asset_sequence(rewards: Sequence[float], gamma: float) -> AssetSeries:
    """
    Depreciated asset totals of a reward stream.

    Args:
        rewards: finite reward sequence
        gamma: depreciation factor in [0, 1)

    Returns:
        AssetSeries with values[n] = sum_{k<=n} r_k gamma^(n-k)

    Raises:
        ValueError: If gamma is out of range
    """
    check_gamma(gamma)
    values = np.asarray(rewards, dtype=np.float64).reshape(-1)
    if values.size == 0:
        return AssetSeries((), gamma)
    return AssetSeries(tuple(_assets(values, gamma).tolist()), gamma)


def tail_bound(reward_bound: float, n_terms: int, spec: DiscountSpec) -> float:
    """
    Bound on the discounted depreciating payoff omitted after n_terms steps.

    The omitted part holds the future rewards (weight lambda^N / (1-lambda))
    and the still-depreciating assets of the first N rewards (weight
    lambda^N * gamma / (1-gamma)), both scaled by 1 / (1 - lambda*gamma).
    """
    lam, gamma = spec.lam, spec.gamma
    weight = 1.0 / (1.0 - lam) + gamma / (1.0 - gamma)
    return abs(reward_bound) * lam ** n_terms * weight / (1.0 - lam * gamma)


def discounted_depreciating_truncated(
    rewards: Sequence[float],
    spec: DiscountSpec,
    reward_bound: Optional[float] = None,
) -> Tuple[float, float]:
    """
    Truncated discounted depreciating payoff.

    Args:
        rewards: the first N rewards of an infinite stream
        spec: discount and depreciation factors
        reward_bound: bound on |r| for the continuation; defaults to the
                      largest magnitude in `rewards` (pass the MDP's
                      reward_bound for trajectories)

    Returns:
        (partial_sum, tail_bound) with
        partial_sum = sum_{n<=N} lambda^(n-1) * asset_n

    Raises:
        ValueError: If the sequence is empty
    """
    values = _as_rewards(rewards)
    assets = _assets(values, spec.gamma)
    weights = np.power(spec.lam, np.arange(values.size, dtype=np.float64))
    partial = _sum(weights * assets)
    bound = float(np.max(np.abs(values))) if reward_bound is None else reward_bound
    return partial, tail_bound(bound, values.size, spec)


def terms_for_tolerance(reward_bound: float, spec: DiscountSpec, tol: float) -> int:
    """Smallest N whose tail_bound is at most tol."""
    if tol <= 0:
        raise ValueError(f"tolerance must be positive, got {tol}")
    if reward_bound == 0:
        return 1
    head = tail_bound(reward_bound, 0, spec)
    n = max(1, math.ceil(math.log(tol / head) / math.log(spec.lam)))
    while tail_bound(reward_bound, n, spec) > tol:
        n += 1
    return n


def average_depreciating_estimate(rewards: Sequence[float], gamma: float) -> float:
    """
    N-th Cesaro term of the average depreciating payoff.

    Returns:
        (1/N) * sum_{k<=N} asset_k
    """
    check_gamma(gamma)
    values = _as_rewards(rewards)
    return _sum(_assets(values, gamma)) / values.size


def lemma1_closed_form(rewards: Sequence[float], gamma: float) -> float:
    """
    Closed form of the Cesaro term on a finite path:
    sum_k r_k (1 - gamma^(n+1-k)) / (n (1 - gamma)).

    Raises:
        ValueError: If gamma is not in (0, 1) or the sequence is empty
    """
    check_open_gamma(gamma)
    values = _as_rewards(rewards)
    n = values.size
    exponents = np.arange(n, 0, -1, dtype=np.float64)
    terms = values * (1.0 - np.power(gamma, exponents))
    return _sum(terms) / (n * (1.0 - gamma))


def lemma2_tail(rewards: Sequence[float], gamma: float) -> float:
    """
    sum_k r_k gamma^(n+1-k) / (n (1 - gamma)), the part of the Cesaro term
    that vanishes as n grows. Bounded by
    max|r| * (1 - gamma^n) * gamma / (n (1 - gamma)^2).
    """
    check_open_gamma(gamma)
    values = _as_rewards(rewards)
    n = values.size
    # sum_k r_k gamma^(n+1-k) = gamma * asset_n
    return gamma * float(_assets(values, gamma)[-1]) / (n * (1.0 - gamma))


def lemma2_bound(reward_bound: float, n: int, gamma: float) -> float:
    check_open_gamma(gamma)
    return abs(reward_bound) * (1.0 - gamma ** n) * gamma / (n * (1.0 - gamma) ** 2)
