"""
Exact Solver Module for deprec-mdp
Version: 1.0.0
Created: 2026-10-18

Planning for the discounted, discounted depreciating, average and average
depreciating criteria on a known MDP.

Features:
- Value iteration with a stopping rule that certifies the sup-norm error
- The depreciating Bellman operator (immediate reward scaled by 1/(1-lambda*gamma))
  solved directly, with a runtime self-check against V_lambda / (1-lambda*gamma)
- Policy evaluation by dense linear solve, Howard policy iteration
- Relative value iteration for the optimal gain of unichain MDPs
- Tauberian probe: (1-lambda) V_lambda^gamma against V^gamma along a lambda grid
- Brute-force optimisation over all stationary deterministic policies
- Gamma sweeps on a thread pool, Monte Carlo policy-value cross-checks
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from deprec_mdp.errors import SolverError, UnsupportedStructureError
from deprec_mdp.mdp_core import (
    DEFAULT_ENUMERATION_CAP,
    Mdp,
    Policy,
    check_policy,
    closed_classes,
    count_policies,
    enumerate_policies,
    policy_matrix,
    require_valid,
    sample_trajectory,
)
from deprec_mdp.payoff import (
    DiscountSpec,
    check_gamma,
    check_open_gamma,
    discounted_depreciating_truncated,
    terms_for_tolerance,
)
from deprec_mdp.rng import RngState

logger = logging.getLogger(__name__)

DEFAULT_TOLERANCE = 1e-10
DEFAULT_MAX_ITERATIONS = 10_000_000
DEFAULT_APERIODICITY = 0.5
DEFAULT_UNICHAIN_CHECK_CAP = 4096
DEFAULT_LAMBDA_GRID = (0.9, 0.99, 0.999, 0.9999)
MAX_PROBE_LAMBDA = 1.0 - 1e-6


class Criterion(str, Enum):
    """Payoff criterion a ValueVector solves."""

    DISCOUNTED = "discounted"
    DISCOUNTED_DEPRECIATING = "discounted_depreciating"
    AVERAGE = "average"
    AVERAGE_DEPRECIATING = "average_depreciating"

    @property
    def is_average(self) -> bool:
        return self in (Criterion.AVERAGE, Criterion.AVERAGE_DEPRECIATING)


@dataclass(frozen=True, eq=False)
class ValueVector:
    """
    Per-state values tagged with the criterion that produced them.

    Attributes:
        values: array of shape (|S|,)
        criterion: payoff criterion
        lam: discount factor (None for average criteria)
        gamma: depreciation factor (None for plain criteria)
    """

    values: np.ndarray
    criterion: Criterion
    lam: Optional[float] = None
    gamma: Optional[float] = None

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        if not np.isfinite(values).all():
            raise SolverError(f"non-finite values for criterion {self.criterion.value}")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    def __getitem__(self, state: int) -> float:
        return float(self.values[state])

    def __len__(self) -> int:
        return len(self.values)


@dataclass
class SolveReport:
    """
    Solver diagnostics.

    Attributes:
        iterations: sweeps (or improvement steps) performed
        final_residual: sup-norm Bellman residual (span seminorm for average)
        greedy_policy: argmax of the final lookahead, ties to the lowest index
        scaling_discrepancy: max |V_lambda^gamma - V_lambda/(1-lambda*gamma)|, when checked
        details: extra per-solver diagnostics
    """

    iterations: int
    final_residual: float
    greedy_policy: Policy
    scaling_discrepancy: Optional[float] = None
    details: Dict[str, Any] = field(default_factory=dict)


def _lookahead(mdp: Mdp, values: np.ndarray, lam: float, scale: float) -> np.ndarray:
    q = scale * mdp.reward + lam * (mdp.transition @ values)
    return np.where(mdp.available, q, -np.inf)


def _greedy(q: np.ndarray) -> Policy:
    return Policy(tuple(np.argmax(q, axis=1).tolist()))


def _check_tolerance(tol: float) -> None:
    if not tol > 0:
        raise ValueError(f"tolerance must be positive, got {tol}")


def _iterate(
    mdp: Mdp,
    lam: float,
    scale: float,
    tol: float,
    max_iterations: int,
) -> Tuple[np.ndarray, SolveReport]:
    """
    Iterate v <- max_a scale*R + lam*T v from v = 0.

    Stops when ||v_{k+1} - v_k|| <= tol*(1-lam)/(2*lam), which bounds the
    distance of v_{k+1} from the fixed point by tol/2.
    """
    threshold = tol * (1.0 - lam) / (2.0 * lam)
    values = np.zeros(mdp.n_states)
    residual = math.inf
    for iteration in range(1, max_iterations + 1):
        q = _lookahead(mdp, values, lam, scale)
        updated = q.max(axis=1)
        residual = float(np.max(np.abs(updated - values)))
        values = updated
        if residual <= threshold:
            logger.debug(f"Value iteration converged: {iteration} sweeps, residual {residual:.3e}")
            greedy = _greedy(_lookahead(mdp, values, lam, scale))
            return values, SolveReport(iteration, residual, greedy)
    raise SolverError(
        f"value iteration did not reach residual {threshold:.3e} within "
        f"{max_iterations} sweeps (last residual {residual:.3e})"
    )


def value_iteration_discounted(
    mdp: Mdp,
    lam: float,
    tol: float = DEFAULT_TOLERANCE,
    max_iterations: int = DEFAULT_MAX_ITERATIONS,
) -> Tuple[ValueVector, SolveReport]:
    """
    Optimal discounted values V_lambda by value iteration.

    Args:
        mdp: a valid MDP
        lam: discount factor in (0, 1)
        tol: sup-norm error guaranteed on the returned values

    Returns:
        (ValueVector, SolveReport)

    Raises:
        ValidationError: If the MDP is invalid
        SolverError: If max_iterations is reached
    """
    require_valid(mdp)
    spec = DiscountSpec(lam)
    _check_tolerance(tol)
    values, report = _iterate(mdp, spec.lam, 1.0, tol, max_iterations)
    return ValueVector(values, Criterion.DISCOUNTED, lam=spec.lam), report


def solve_discounted_depreciating(
    mdp: Mdp,
    spec: DiscountSpec,
    tol: float = DEFAULT_TOLERANCE,
    max_iterations: int = DEFAULT_MAX_ITERATIONS,
    self_check: bool = True,
) -> Tuple[ValueVector, SolveReport]:
    """
    Optimal discounted depreciating values V_lambda^gamma.

    Iterates V(s) = max_a R(s,a)/(1-lambda*gamma) + lambda*E_T[V] directly.
    With self_check, also solves the plain discounted problem to tolerance
    tol*(1-lambda*gamma) and records max |V_lambda^gamma - V_lambda/(1-lambda*gamma)|
    in the report; both sides are then within tol/2 of the truth.
    """
    require_valid(mdp)
    _check_tolerance(tol)
    values, report = _iterate(mdp, spec.lam, spec.scale, tol, max_iterations)
    if self_check:
        plain, _ = value_iteration_discounted(mdp, spec.lam, tol / spec.scale, max_iterations)
        discrepancy = float(np.max(np.abs(values - plain.values * spec.scale)))
        report.scaling_discrepancy = discrepancy
        if discrepancy > 2 * tol:
            logger.warning(
                f"Scaling identity off by {discrepancy:.3e} "
                f"(lambda={spec.lam}, gamma={spec.gamma}, tol={tol})"
            )
    result = ValueVector(values, Criterion.DISCOUNTED_DEPRECIATING, spec.lam, spec.gamma)
    return result, report


def policy_evaluation(
    mdp: Mdp,
    policy: Policy,
    spec: DiscountSpec,
    criterion: Criterion = Criterion.DISCOUNTED_DEPRECIATING,
) -> ValueVector:
    """
    Value of a stationary policy: solves (I - lambda*T_pi) v = r_pi, with r_pi
    scaled by 1/(1-lambda*gamma) for the depreciating criterion.

    Raises:
        ValueError: If the criterion is an average criterion or the policy is invalid
        SolverError: If the linear system is singular
    """
    criterion = Criterion(criterion)
    if criterion.is_average:
        raise ValueError(f"policy_evaluation handles discounted criteria, got {criterion.value}")
    require_valid(mdp)
    check_policy(mdp, policy)
    matrix, rewards = policy_matrix(mdp, policy)
    scale = spec.scale if criterion is Criterion.DISCOUNTED_DEPRECIATING else 1.0
    system = np.eye(mdp.n_states) - spec.lam * matrix
    try:
        # LAPACK gesv: LU with partial pivoting
        values = np.linalg.solve(system, scale * rewards)
    except np.linalg.LinAlgError as e:
        raise SolverError(f"singular policy-evaluation system: {e}") from e
    gamma = spec.gamma if criterion is Criterion.DISCOUNTED_DEPRECIATING else None
    return ValueVector(values, criterion, spec.lam, gamma)


def policy_iteration(
    mdp: Mdp,
    spec: DiscountSpec,
    criterion: Criterion = Criterion.DISCOUNTED_DEPRECIATING,
    max_iterations: int = 10_000,
) -> Tuple[ValueVector, SolveReport]:
    """
    Howard policy iteration; exact up to the linear solves.

    An action replaces the current one only when it improves the lookahead
    by more than a relative 1e-12, so the iteration cannot cycle on ties.
    """
    criterion = Criterion(criterion)
    require_valid(mdp)
    scale = spec.scale if criterion is Criterion.DISCOUNTED_DEPRECIATING else 1.0
    policy = _greedy(np.where(mdp.available, mdp.reward, -np.inf))
    rows = np.arange(mdp.n_states)
    for iteration in range(1, max_iterations + 1):
        values = policy_evaluation(mdp, policy, spec, criterion).values
        q = _lookahead(mdp, values, spec.lam, scale)
        current = q[rows, np.asarray(policy.action_of)]
        best = q.max(axis=1)
        improve = best > current + 1e-12 * (1.0 + np.abs(current))
        if not improve.any():
            residual = float(np.max(np.abs(best - values)))
            logger.debug(f"Policy iteration stable after {iteration} evaluations")
            gamma = spec.gamma if criterion is Criterion.DISCOUNTED_DEPRECIATING else None
            result = ValueVector(values, criterion, spec.lam, gamma)
            return result, SolveReport(iteration, residual, _greedy(q))
        actions = np.where(improve, np.argmax(q, axis=1), policy.action_of)
        policy = Policy(tuple(actions.tolist()))
    raise SolverError(f"policy iteration did not stabilise within {max_iterations} steps")


def check_unichain(mdp: Mdp, cap: int = DEFAULT_UNICHAIN_CHECK_CAP) -> None:
    """
    Reject MDPs where some stationary deterministic policy induces two or
    more closed recurrent classes.

    Raises:
        UnsupportedStructureError: naming a witness policy
    """
    total = count_policies(mdp)
    if total > cap:
        logger.warning(
            f"Unichain check skipped: {total} policies exceed the check cap {cap}"
        )
        return
    for policy in enumerate_policies(mdp, cap):
        classes = closed_classes(mdp, policy)
        if len(classes) >= 2:
            names = [[mdp.state_names[s] for s in members] for members in classes]
            raise UnsupportedStructureError(
                f"multichain MDP: policy {policy.describe(mdp)} has closed classes {names}",
                witness=policy,
            )


def solve_average(
    mdp: Mdp,
    tol: float = DEFAULT_TOLERANCE,
    max_iterations: int = DEFAULT_MAX_ITERATIONS,
    aperiodicity: float = DEFAULT_APERIODICITY,
    check_cap: int = DEFAULT_UNICHAIN_CHECK_CAP,
) -> Tuple[float, SolveReport]:
    """
    Optimal gain by relative value iteration.

    Runs on the transformed kernel tau*I + (1-tau)*T (tau = aperiodicity),
    which keeps the gain and greedy actions and removes periodicity. The
    reference state is the first state. Stops when the span of h' - h is at
    most tol; the gain is then bracketed by min and max of h' - h.

    Raises:
        UnsupportedStructureError: If the MDP is multichain
        SolverError: If max_iterations is reached
    """
    require_valid(mdp)
    _check_tolerance(tol)
    if not 0.0 < aperiodicity < 1.0:
        raise ValueError(f"aperiodicity must lie in (0, 1), got {aperiodicity}")
    check_unichain(mdp, check_cap)

    stay = aperiodicity
    bias = np.zeros(mdp.n_states)
    span = math.inf
    for iteration in range(1, max_iterations + 1):
        q = mdp.reward + (1.0 - stay) * (mdp.transition @ bias) + stay * bias[:, None]
        q = np.where(mdp.available, q, -np.inf)
        updated = q.max(axis=1)
        diff = updated - bias
        low, high = float(diff.min()), float(diff.max())
        span = high - low
        bias = updated - updated[0]
        if span <= tol:
            gain = 0.5 * (low + high)
            logger.debug(f"RVI converged: {iteration} sweeps, gain {gain!r}, span {span:.3e}")
            report = SolveReport(
                iteration,
                span,
                _greedy(q),
                details={"gain_lower": low, "gain_upper": high, "bias": bias.copy()},
            )
            return gain, report
    raise SolverError(
        f"relative value iteration did not reach span {tol:.3e} within "
        f"{max_iterations} sweeps (last span {span:.3e})"
    )


def solve_average_depreciating(
    mdp: Mdp,
    gamma: float,
    tol: float = DEFAULT_TOLERANCE,
    max_iterations: int = DEFAULT_MAX_ITERATIONS,
    aperiodicity: float = DEFAULT_APERIODICITY,
    check_cap: int = DEFAULT_UNICHAIN_CHECK_CAP,
) -> Tuple[ValueVector, SolveReport]:
    """V^gamma = V / (1 - gamma), constant across states for unichain MDPs."""
    check_open_gamma(gamma)
    gain, report = solve_average(mdp, tol, max_iterations, aperiodicity, check_cap)
    values = np.full(mdp.n_states, gain / (1.0 - gamma))
    return ValueVector(values, Criterion.AVERAGE_DEPRECIATING, gamma=gamma), report


def policy_gain(mdp: Mdp, policy: Policy) -> float:
    """
    Long-run average reward of a stationary policy on a unichain MDP, from
    the stationary distribution of T_pi.

    Raises:
        UnsupportedStructureError: If the policy's chain has several closed classes
    """
    check_policy(mdp, policy)
    classes = closed_classes(mdp, policy)
    if len(classes) != 1:
        raise UnsupportedStructureError(
            f"policy {policy.describe(mdp)} has {len(classes)} closed classes", witness=policy
        )
    matrix, rewards = policy_matrix(mdp, policy)
    system = (np.eye(mdp.n_states) - matrix).T
    system[-1, :] = 1.0
    rhs = np.zeros(mdp.n_states)
    rhs[-1] = 1.0
    try:
        stationary = np.linalg.solve(system, rhs)
    except np.linalg.LinAlgError as e:
        raise SolverError(f"singular stationary-distribution system: {e}") from e
    return float(stationary @ rewards)


@dataclass(frozen=True, eq=False)
class TauberianRow:
    lam: float
    scaled_values: np.ndarray
    gap: float
    greedy_policy: Policy


@dataclass(frozen=True, eq=False)
class TauberianTable:
    """
    (1-lambda) V_lambda^gamma along a lambda grid against V^gamma.

    gap is the sup-norm distance of each row to the average depreciating
    values in `reference`.
    """

    gamma: float
    rows: Tuple[TauberianRow, ...]
    reference: ValueVector

    @property
    def final_gap(self) -> float:
        return self.rows[-1].gap

    @property
    def stable_policy(self) -> Optional[Policy]:
        """Greedy policy of the last two rows when they agree."""
        if len(self.rows) < 2 or self.rows[-1].greedy_policy != self.rows[-2].greedy_policy:
            return None
        return self.rows[-1].greedy_policy


def _check_lambda_grid(lambda_grid: Sequence[float]) -> List[float]:
    grid = [float(lam) for lam in lambda_grid]
    if not grid:
        raise ValueError("lambda grid must not be empty")
    for lam in grid:
        if not 0.0 < lam < 1.0:
            raise ValueError(f"lambda grid values must lie in (0, 1), got {lam}")
        if lam >= MAX_PROBE_LAMBDA:
            raise ValueError(f"lambda {lam} too close to 1 (limit {MAX_PROBE_LAMBDA})")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError(f"lambda grid must be strictly increasing, got {grid}")
    return grid


def tauberian_probe(
    mdp: Mdp,
    gamma: float,
    lambda_grid: Sequence[float] = DEFAULT_LAMBDA_GRID,
    tol: float = DEFAULT_TOLERANCE,
    aperiodicity: float = DEFAULT_APERIODICITY,
    check_cap: int = DEFAULT_UNICHAIN_CHECK_CAP,
) -> TauberianTable:
    """
    Tabulate (1-lambda) V_lambda^gamma for each lambda in the grid.

    Discounted values come from policy iteration, which stays exact as
    lambda approaches 1; the reference V^gamma comes from
    solve_average_depreciating.
    """
    grid = _check_lambda_grid(lambda_grid)
    reference, _ = solve_average_depreciating(
        mdp, gamma, tol, aperiodicity=aperiodicity, check_cap=check_cap
    )
    rows = []
    for lam in grid:
        values, report = policy_iteration(mdp, DiscountSpec(lam, gamma))
        scaled = (1.0 - lam) * values.values
        gap = float(np.max(np.abs(scaled - reference.values)))
        logger.debug(f"Tauberian probe lambda={lam}: gap {gap:.3e}")
        rows.append(TauberianRow(lam, scaled, gap, report.greedy_policy))
    return TauberianTable(gamma, tuple(rows), reference)


def _criterion_values(
    mdp: Mdp,
    policy: Policy,
    spec: Optional[DiscountSpec],
    criterion: Criterion,
    gamma: Optional[float],
) -> np.ndarray:
    if criterion is Criterion.AVERAGE:
        return np.full(mdp.n_states, policy_gain(mdp, policy))
    if criterion is Criterion.AVERAGE_DEPRECIATING:
        return np.full(mdp.n_states, policy_gain(mdp, policy) / (1.0 - gamma))
    return policy_evaluation(mdp, policy, spec, criterion).values


def brute_force_optimal(
    mdp: Mdp,
    spec: Optional[DiscountSpec],
    criterion: Criterion = Criterion.DISCOUNTED_DEPRECIATING,
    cap: int = DEFAULT_ENUMERATION_CAP,
    tie_tol: float = 1e-9,
    gamma: Optional[float] = None,
) -> Tuple[ValueVector, Policy]:
    """
    Maximise over every stationary deterministic policy.

    Discounted criteria evaluate each policy with policy_evaluation and need
    spec. Average criteria use the stationary-distribution gain; spec may be
    None there, and the average depreciating criterion takes its factor from
    `gamma` (falling back to spec.gamma). Returns the per-state maximum and
    the lexicographically first policy attaining it at every state within
    tie_tol (relative).

    Raises:
        EnumerationCapError: If the policy class exceeds cap
    """
    criterion = Criterion(criterion)
    require_valid(mdp)
    if criterion.is_average:
        if gamma is None:
            gamma = spec.gamma if spec is not None else 0.0
        if criterion is Criterion.AVERAGE_DEPRECIATING:
            check_open_gamma(gamma)
    elif spec is None:
        raise ValueError(f"criterion {criterion.value} needs a DiscountSpec")
    policies = enumerate_policies(mdp, cap)
    table = np.array([_criterion_values(mdp, p, spec, criterion, gamma) for p in policies])
    best = table.max(axis=0)
    slack = tie_tol * (1.0 + np.abs(best))
    attaining = np.flatnonzero((table >= best - slack).all(axis=1))
    if attaining.size:
        choice = int(attaining[0])
    else:
        choice = int(np.argmax(table.sum(axis=1)))
        logger.warning("No single policy attains the per-state maximum; using the best total")
    lam = None if criterion.is_average else spec.lam
    if criterion is Criterion.DISCOUNTED_DEPRECIATING:
        gamma = spec.gamma
    elif criterion is not Criterion.AVERAGE_DEPRECIATING:
        gamma = None
    return ValueVector(best, criterion, lam, gamma), policies[choice]


def gamma_sweep(
    mdp: Mdp,
    lam: float,
    gammas: Sequence[float],
    tol: float = DEFAULT_TOLERANCE,
    workers: int = 1,
) -> List[Tuple[float, np.ndarray]]:
    """
    V_lambda^gamma for each gamma, as (gamma, values) rows in input order.

    Grid points are solved on a thread pool of `workers` threads.
    """
    if not gammas:
        raise ValueError("gamma grid must not be empty")
    for gamma in gammas:
        check_gamma(gamma)
    require_valid(mdp)

    def solve(gamma: float) -> np.ndarray:
        values, _ = solve_discounted_depreciating(mdp, DiscountSpec(lam, gamma), tol, self_check=False)
        return values.values

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        results = list(pool.map(solve, gammas))
    logger.info(f"Gamma sweep: {len(results)} points at lambda={lam}")
    return [(float(gamma), values) for gamma, values in zip(gammas, results)]


def monte_carlo_policy_value(
    mdp: Mdp,
    policy: Policy,
    spec: DiscountSpec,
    start: int,
    episodes: int,
    rng: RngState,
    truncation_tol: float = 1e-6,
) -> Tuple[float, float, RngState]:
    """
    Monte Carlo estimate of a policy's discounted depreciating payoff.

    Each episode is truncated where the certified tail bound (with the MDP's
    reward bound) drops below truncation_tol.

    Returns:
        (mean, standard error, advanced rng)
    """
    if episodes < 2:
        raise ValueError(f"episodes must be at least 2, got {episodes}")
    horizon = terms_for_tolerance(mdp.reward_bound, spec, truncation_tol)
    payoffs = []
    for _ in range(episodes):
        trajectory, rng = sample_trajectory(mdp, policy, start, horizon, rng)
        partial, _ = discounted_depreciating_truncated(
            trajectory.rewards, spec, reward_bound=mdp.reward_bound
        )
        payoffs.append(partial)
    samples = np.asarray(payoffs)
    return float(samples.mean()), float(samples.std(ddof=1) / math.sqrt(episodes)), rng
