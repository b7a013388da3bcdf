"""
Q-Learning Module for deprec-mdp
Version: 1.0.0
Created: 2026-10-18

Tabular Q-learning for the discounted depreciating criterion.

The update scales the sampled reward by 1/(1-lambda*gamma):
    Q(s,a) <- Q(s,a) + alpha * (r/(1-lambda*gamma) + lambda * max_b Q(t,b) - Q(s,a))
With gamma = 0 it is the classical update, and run_q_learning with
rule="standard" applies the classical update directly.

Features:
- Robbins-Monro learning-rate schedules (harmonic, polynomial); constant
  rates only when explicitly marked non-convergent
- Epsilon-greedy exploration with a positive floor
- Continuing interaction with periodic uniform restarts
- Deterministic runs for a given (seed, schedules)
- Convergence trace with CSV export
"""

import csv
import io
import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from deprec_mdp.exact_solver import Criterion, ValueVector
from deprec_mdp.mdp_core import (
    Mdp,
    Policy,
    TransitionSampler,
    is_communicating,
    require_valid,
)
from deprec_mdp.payoff import DiscountSpec
from deprec_mdp.rng import RngState, UniformStream

logger = logging.getLogger(__name__)

DEFAULT_RESTART_INTERVAL = 10_000
DEFAULT_TRACE_INTERVAL = 100_000

RATE_KINDS = ("harmonic", "polynomial", "constant")
COUNTING_MODES = ("visit", "global")
UPDATE_RULES = ("depreciating", "standard")


@dataclass(frozen=True, eq=False)
class QTable:
    """
    Q estimates and visit counts per (state, action).

    Entries for actions a state does not offer stay at 0 and are ignored
    by every maximum.
    """

    values: np.ndarray
    visits: np.ndarray
    available: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        visits = np.array(self.visits, dtype=np.int64)
        available = np.array(self.available, dtype=bool)
        if values.shape != available.shape or visits.shape != available.shape:
            raise ValueError(
                f"QTable shapes disagree: values {values.shape}, visits {visits.shape}, "
                f"mask {available.shape}"
            )
        for array in (values, visits, available):
            array.flags.writeable = False
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "visits", visits)
        object.__setattr__(self, "available", available)

    @classmethod
    def zeros(cls, mdp: Mdp, initial: float = 0.0) -> "QTable":
        values = np.where(mdp.available, initial, 0.0)
        return cls(values, np.zeros(mdp.available.shape, dtype=np.int64), mdp.available)

    @property
    def n_states(self) -> int:
        return self.values.shape[0]

    def masked(self) -> np.ndarray:
        return np.where(self.available, self.values, -np.inf)

    def state_values(self) -> np.ndarray:
        """V^{gamma,n}_lambda(s) = max_a Q(s, a)."""
        return self.masked().max(axis=1)

    def sup_gap(self, other: "QTable") -> float:
        """Sup-norm distance over offered (state, action) pairs."""
        diff = np.abs(self.values - other.values)[self.available]
        return float(diff.max()) if diff.size else 0.0

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, QTable):
            return NotImplemented
        return (
            np.array_equal(self.values, other.values)
            and np.array_equal(self.visits, other.visits)
            and np.array_equal(self.available, other.available)
        )

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True)
class LearningRateSchedule:
    """
    alpha_n = min(1, c / (n + n0)^p) for n = 1, 2, ...

    kind "harmonic" fixes p = 1; "polynomial" takes p in (0.5, 1]; both
    satisfy sum alpha = inf and sum alpha^2 < inf. kind "constant" returns
    c every step and is only accepted with convergent=False.
    counting selects whether n is the global step or the visit count of
    the updated (state, action) pair.
    """

    kind: str = "harmonic"
    c: float = 1.0
    n0: float = 0.0
    power: float = 1.0
    counting: str = "visit"
    convergent: bool = True

    def __post_init__(self):
        if self.kind not in RATE_KINDS:
            raise ValueError(f"kind must be one of {RATE_KINDS}, got '{self.kind}'")
        if self.counting not in COUNTING_MODES:
            raise ValueError(f"counting must be one of {COUNTING_MODES}, got '{self.counting}'")
        if not self.c > 0:
            raise ValueError(f"c must be positive, got {self.c}")
        if self.n0 < 0:
            raise ValueError(f"n0 must be nonnegative, got {self.n0}")
        if self.kind == "harmonic" and self.power != 1.0:
            raise ValueError(f"harmonic rates use power 1, got {self.power}")
        if self.kind == "polynomial" and not 0.5 < self.power <= 1.0:
            raise ValueError(
                f"polynomial power must lie in (0.5, 1] for sum alpha^2 < inf, got {self.power}"
            )
        if self.kind == "constant":
            if self.convergent:
                raise ValueError(
                    "constant learning rates violate sum alpha^2 < inf; "
                    "pass convergent=False to use one anyway"
                )
            if self.c > 1.0:
                raise ValueError(f"constant rate must lie in (0, 1], got {self.c}")

    def rate(self, n: int) -> float:
        if self.kind == "constant":
            return self.c
        return min(1.0, self.c / (n + self.n0) ** self.power)


@dataclass(frozen=True)
class ExplorationSchedule:
    """epsilon_n = max(epsilon_min, epsilon0 * decay^n), with epsilon_min > 0."""

    epsilon0: float = 1.0
    decay: float = 0.99999
    epsilon_min: float = 0.05

    def __post_init__(self):
        if not 0.0 < self.epsilon_min <= 1.0:
            raise ValueError(f"epsilon_min must lie in (0, 1], got {self.epsilon_min}")
        if not self.epsilon_min <= self.epsilon0 <= 1.0:
            raise ValueError(
                f"epsilon0 must lie in [epsilon_min, 1], got {self.epsilon0}"
            )
        if not 0.0 < self.decay <= 1.0:
            raise ValueError(f"decay must lie in (0, 1], got {self.decay}")

    def epsilon(self, n: int) -> float:
        return max(self.epsilon_min, self.epsilon0 * self.decay ** n)


@dataclass(frozen=True)
class TraceRow:
    step: int
    sup_gap: Optional[float]
    epsilon: float
    alpha_example: float
    segment_reward: float


@dataclass
class QLearnReport:
    """
    Diagnostics of a learning run.

    The run is continuing; trace has one row per segment of trace_interval
    steps (the last segment may be shorter).
    """

    steps: int
    sup_gap: Optional[float]
    greedy_policy: Policy
    trace: Tuple[TraceRow, ...]
    communicating: bool = True
    warnings: List[str] = field(default_factory=list)

    @property
    def episodes(self) -> int:
        return len(self.trace)


def _check_pair(q: QTable, s: int, a: int, t: int) -> None:
    if not 0 <= s < q.n_states or not 0 <= t < q.n_states:
        raise IndexError(f"state index out of range [0, {q.n_states}): s={s}, t={t}")
    if not 0 <= a < q.values.shape[1] or not q.available[s, a]:
        raise IndexError(f"action index {a} not available at state {s}")


def _target(r: float, next_value: float, lam: float, scale: float) -> float:
    return scale * r + lam * next_value


def _blend(current: float, target: float, alpha: float) -> float:
    return current + alpha * (target - current)


def _apply(q: QTable, s: int, a: int, target: float, alpha: float) -> QTable:
    values = q.values.copy()
    visits = q.visits.copy()
    values[s, a] = _blend(float(values[s, a]), target, alpha)
    visits[s, a] += 1
    return QTable(values, visits, q.available)


def _check_alpha(alpha: float) -> None:
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")


def q_update(
    q: QTable,
    s: int,
    a: int,
    r: float,
    t: int,
    alpha: float,
    spec: DiscountSpec,
) -> QTable:
    """
    One depreciating Q-learning step on (s, a, r, t).

    Returns:
        A new QTable; only entry (s, a) and its visit count change

    Raises:
        ValueError: If alpha is not in (0, 1]
        IndexError: If an index is out of range
    """
    _check_alpha(alpha)
    _check_pair(q, s, a, t)
    target = _target(r, float(q.state_values()[t]), spec.lam, spec.scale)
    return _apply(q, s, a, target, alpha)


def standard_q_update(q: QTable, s: int, a: int, r: float, t: int, alpha: float, lam: float) -> QTable:
    """The classical discounted Q-learning step (no reward scaling)."""
    _check_alpha(alpha)
    _check_pair(q, s, a, t)
    target = _target(r, float(q.state_values()[t]), lam, 1.0)
    return _apply(q, s, a, target, alpha)


def expected_q_update(mdp: Mdp, q: QTable, alpha: float, spec: DiscountSpec) -> QTable:
    """
    Synchronous expected update of every offered pair, with the sampled
    next-state value replaced by its mean under T(.|s, a). Visit counts are
    left unchanged.
    """
    _check_alpha(alpha)
    target = spec.scale * mdp.reward + spec.lam * (mdp.transition @ q.state_values())
    values = np.where(q.available, q.values + alpha * (target - q.values), 0.0)
    return QTable(values, q.visits, q.available)


def exact_q_table(mdp: Mdp, spec: DiscountSpec, v: ValueVector) -> QTable:
    """
    Q(s,a) = R(s,a)/(1-lambda*gamma) + lambda * sum_t T(t|s,a) v(t).

    Raises:
        ValueError: If v is not a discounted depreciating solution for spec
    """
    if (
        v.criterion is not Criterion.DISCOUNTED_DEPRECIATING
        or v.lam != spec.lam
        or v.gamma != spec.gamma
        or len(v) != mdp.n_states
    ):
        raise ValueError(
            f"criterion mismatch: expected discounted_depreciating values for "
            f"lambda={spec.lam}, gamma={spec.gamma}, got {v.criterion.value} "
            f"(lambda={v.lam}, gamma={v.gamma})"
        )
    values = spec.scale * mdp.reward + spec.lam * (mdp.transition @ v.values)
    values = np.where(mdp.available, values, 0.0)
    return QTable(values, np.zeros(values.shape, dtype=np.int64), mdp.available)


def greedy_policy(q: QTable) -> Policy:
    """Per-state argmax over offered actions, ties to the lowest index."""
    return Policy(tuple(np.argmax(q.masked(), axis=1).tolist()))


def _to_table(values: List[List[float]], visits: List[List[int]], mdp: Mdp) -> QTable:
    shape = mdp.available.shape
    table = np.zeros(shape)
    counts = np.zeros(shape, dtype=np.int64)
    for s, row in enumerate(values):
        table[s, :len(row)] = row
        counts[s, :len(row)] = visits[s]
    return QTable(table, counts, mdp.available)


def run_q_learning(
    mdp: Mdp,
    spec: DiscountSpec,
    lr: LearningRateSchedule,
    explore: ExplorationSchedule,
    steps: int,
    rng: RngState,
    reference: Optional[QTable] = None,
    rule: str = "depreciating",
    optimistic: bool = False,
    restart_interval: int = DEFAULT_RESTART_INTERVAL,
    trace_interval: int = DEFAULT_TRACE_INTERVAL,
) -> Tuple[QTable, QLearnReport]:
    """
    Continuing epsilon-greedy Q-learning.

    Starts from a uniformly random state and jumps to a uniformly random
    state every restart_interval steps (0 disables restarts). Each step
    consumes one variate for the exploration test, one more when exploring,
    and one for the transition, all from a single stream seeded by rng.

    Args:
        mdp: a valid MDP
        spec: discount and depreciation factors
        lr: learning-rate schedule
        explore: exploration schedule
        steps: number of updates
        rng: stream position
        reference: table to measure sup-norm gaps against (e.g. exact_q_table)
        rule: "depreciating" or "standard" (classical update)
        optimistic: initialise Q to r_max / ((1-lambda)(1-lambda*gamma))

    Returns:
        (learned QTable, QLearnReport)
    """
    require_valid(mdp)
    if steps < 1:
        raise ValueError(f"steps must be at least 1, got {steps}")
    if rule not in UPDATE_RULES:
        raise ValueError(f"rule must be one of {UPDATE_RULES}, got '{rule}'")
    if restart_interval < 0 or trace_interval < 1:
        raise ValueError("restart_interval must be >= 0 and trace_interval >= 1")

    warnings = []
    communicating = is_communicating(mdp)
    if not communicating:
        message = "MDP is not communicating under uniform action choice; some pairs may never be visited"
        logger.warning(message)
        warnings.append(message)

    scale = spec.scale if rule == "depreciating" else 1.0
    lam = spec.lam
    initial = mdp.r_max * scale / (1.0 - lam) if optimistic else 0.0
    counts = [mdp.action_count(s) for s in range(mdp.n_states)]
    q = [[initial] * k for k in counts]
    visits = [[0] * k for k in counts]
    reward = mdp.reward.tolist()
    sampler = TransitionSampler(mdp)
    stream = UniformStream(rng)
    global_counting = lr.counting == "global"
    n_states = mdp.n_states

    logger.info(
        f"Q-learning: {steps} steps, rule={rule}, lambda={spec.lam}, gamma={spec.gamma}, "
        f"seed={rng.seed}"
    )
    trace = []
    segment_reward = 0.0
    alpha = 0.0
    epsilon = explore.epsilon(0)
    state = stream.draw_index(n_states)
    for n in range(1, steps + 1):
        if restart_interval and n > 1 and (n - 1) % restart_interval == 0:
            state = stream.draw_index(n_states)
        epsilon = explore.epsilon(n - 1)
        row = q[state]
        if stream.draw() < epsilon:
            action = stream.draw_index(counts[state])
        else:
            action = row.index(max(row))
        next_state = sampler.sample(state, action, stream.draw())
        r = reward[state][action]
        visits[state][action] += 1
        alpha = lr.rate(n if global_counting else visits[state][action])
        row[action] = _blend(row[action], _target(r, max(q[next_state]), lam, scale), alpha)
        segment_reward += r
        if n % trace_interval == 0 or n == steps:
            gap = _to_table(q, visits, mdp).sup_gap(reference) if reference is not None else None
            trace.append(TraceRow(n, gap, epsilon, alpha, segment_reward))
            segment_reward = 0.0
        state = next_state

    table = _to_table(q, visits, mdp)
    gap = table.sup_gap(reference) if reference is not None else None
    if gap is not None:
        logger.info(f"Q-learning finished: sup-norm gap {gap:.4g}")
    report = QLearnReport(steps, gap, greedy_policy(table), tuple(trace), communicating, warnings)
    return table, report


def write_trace_csv(report: QLearnReport) -> str:
    """CSV with columns step, sup_gap, epsilon, alpha_example."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["step", "sup_gap", "epsilon", "alpha_example"])
    for row in report.trace:
        gap = "" if row.sup_gap is None or math.isnan(row.sup_gap) else repr(row.sup_gap)
        writer.writerow([row.step, gap, repr(row.epsilon), repr(row.alpha_example)])
    return buffer.getvalue()
