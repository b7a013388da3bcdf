"""
MDP Core Module for deprec-mdp
Version: 1.0.0
Created: 2026-10-18

Finite Markov decision processes, stationary deterministic policies,
trajectories and seeded sampling.

Features:
- Immutable Mdp with per-state action sets (unavailable actions are zero rows)
- Validation as data: validate_mdp returns violations instead of raising
- Inverse-CDF sampling in declared state order over a counter-addressed stream
- Policy enumeration in lexicographic order with a configurable cap
- Chain-structure helpers (closed recurrent classes, communication)
"""

import bisect
import itertools
import logging
import math
import re
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from deprec_mdp.errors import EnumerationCapError, ValidationError
from deprec_mdp.rng import RngState, UniformStream, uniform_at

logger = logging.getLogger(__name__)

ROW_SUM_TOL = 1e-9
DEFAULT_ENUMERATION_CAP = 10 ** 6

# state and action names: nonempty, no whitespace, no '#'
_NAME = re.compile(r"[^\s#]+")


@dataclass(frozen=True)
class Violation:
    """
    One broken MDP invariant.

    kind is one of: "row-sum", "negative-probability", "probability-above-one",
    "non-finite-probability", "non-finite-reward", "empty-action-set".
    """

    kind: str
    state: str
    action: Optional[str] = None
    target: Optional[str] = None
    message: str = ""

    def __str__(self) -> str:
        where = self.state
        if self.action is not None:
            where += f", {self.action}"
        if self.target is not None:
            where += f", {self.target}"
        return f"{self.kind} at ({where}): {self.message}"


@dataclass(frozen=True, eq=False)
class Mdp:
    """
    A finite MDP (S, A, T, R) with per-state action sets.

    Attributes:
        state_names: ordered state names
        action_names: per state, the ordered names of its available actions
        transition: array of shape (|S|, |A|, |S|), T(t | s, a) at [s, a, t]
        reward: array of shape (|S|, |A|), R(s, a)
        title: optional document title
        provenance: optional free-text provenance

    |A| is the largest per-state action count; entries for actions a state
    does not offer are zeroed on construction.
    """

    state_names: Tuple[str, ...]
    action_names: Tuple[Tuple[str, ...], ...]
    transition: np.ndarray
    reward: np.ndarray
    title: Optional[str] = None
    provenance: Optional[str] = None

    def __post_init__(self):
        states = tuple(str(name) for name in self.state_names)
        actions = tuple(tuple(str(a) for a in names) for names in self.action_names)
        if not states:
            raise ValidationError("an MDP needs at least one state")
        if len(set(states)) != len(states):
            raise ValidationError(f"duplicate state names in {states}")
        if len(actions) != len(states):
            raise ValidationError(
                f"expected action names for {len(states)} states, got {len(actions)}"
            )
        for name, names in zip(states, actions):
            if len(set(names)) != len(names):
                raise ValidationError(f"duplicate action names at state {name}: {names}")
            for label in (name, *names):
                if not _NAME.fullmatch(label):
                    raise ValidationError(
                        f"name {label!r} must be nonempty without whitespace or '#'"
                    )

        n_states = len(states)
        n_actions = max(len(names) for names in actions)
        transition = np.array(self.transition, dtype=np.float64)
        reward = np.array(self.reward, dtype=np.float64)
        if transition.shape != (n_states, n_actions, n_states):
            raise ValidationError(
                f"transition must have shape {(n_states, n_actions, n_states)}, "
                f"got {transition.shape}"
            )
        if reward.shape != (n_states, n_actions):
            raise ValidationError(
                f"reward must have shape {(n_states, n_actions)}, got {reward.shape}"
            )

        available = np.zeros((n_states, n_actions), dtype=bool)
        for s, names in enumerate(actions):
            available[s, :len(names)] = True
        transition[~available] = 0.0
        reward[~available] = 0.0
        for array in (transition, reward, available):
            array.flags.writeable = False

        object.__setattr__(self, "state_names", states)
        object.__setattr__(self, "action_names", actions)
        object.__setattr__(self, "transition", transition)
        object.__setattr__(self, "reward", reward)
        object.__setattr__(self, "_available", available)

    @classmethod
    def from_entries(
        cls,
        states: Sequence[str],
        actions: Mapping[str, Sequence[str]],
        transitions: Mapping[Tuple[str, str], Mapping[str, float]],
        rewards: Optional[Mapping[Tuple[str, str], float]] = None,
        title: Optional[str] = None,
        provenance: Optional[str] = None,
    ) -> "Mdp":
        """
        Build an Mdp from name-keyed entries.

        Args:
            states: ordered state names
            actions: state name -> ordered action names
            transitions: (state, action) -> {next_state: probability}
            rewards: (state, action) -> reward; omitted entries are 0

        Raises:
            ValidationError: If an entry names an unknown state or action
        """
        state_index = {name: i for i, name in enumerate(states)}
        action_names = [tuple(actions.get(name, ())) for name in states]
        n_actions = max((len(names) for names in action_names), default=0)
        transition = np.zeros((len(states), n_actions, len(states)))
        reward = np.zeros((len(states), n_actions))

        def locate(state: str, action: str) -> Tuple[int, int]:
            if state not in state_index:
                raise ValidationError(f"unknown state '{state}'")
            s = state_index[state]
            if action not in action_names[s]:
                raise ValidationError(f"unknown action '{action}' at state '{state}'")
            return s, action_names[s].index(action)

        for (state, action), row in transitions.items():
            s, a = locate(state, action)
            for target, probability in row.items():
                if target not in state_index:
                    raise ValidationError(f"unknown target state '{target}'")
                transition[s, a, state_index[target]] = probability
        for (state, action), value in (rewards or {}).items():
            s, a = locate(state, action)
            reward[s, a] = value

        return cls(tuple(states), tuple(action_names), transition, reward, title, provenance)

    @property
    def n_states(self) -> int:
        return len(self.state_names)

    @property
    def n_actions(self) -> int:
        return self.reward.shape[1]

    @property
    def available(self) -> np.ndarray:
        """Boolean mask of shape (|S|, |A|), True where the action is offered."""
        return self._available

    def action_count(self, state: int) -> int:
        return len(self.action_names[state])

    def state_action_pairs(self) -> List[Tuple[int, int]]:
        """Available (s, a) pairs in state-major order."""
        return [(s, a) for s in range(self.n_states) for a in range(self.action_count(s))]

    def state_index(self, name: str) -> int:
        try:
            return self.state_names.index(name)
        except ValueError:
            raise KeyError(f"unknown state '{name}'") from None

    def action_index(self, state: int, name: str) -> int:
        try:
            return self.action_names[state].index(name)
        except ValueError:
            raise KeyError(
                f"unknown action '{name}' at state '{self.state_names[state]}'"
            ) from None

    @property
    def r_min(self) -> float:
        """r_↓, the smallest reward over available pairs."""
        values = self.reward[self.available]
        return float(values.min()) if values.size else 0.0

    @property
    def r_max(self) -> float:
        """r_↑, the largest reward over available pairs."""
        values = self.reward[self.available]
        return float(values.max()) if values.size else 0.0

    @property
    def reward_bound(self) -> float:
        """max |R(s, a)| over available pairs."""
        return max(abs(self.r_min), abs(self.r_max))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Mdp):
            return NotImplemented
        return (
            self.state_names == other.state_names
            and self.action_names == other.action_names
            and np.array_equal(self.transition, other.transition)
            and np.array_equal(self.reward, other.reward)
            and self.title == other.title
            and self.provenance == other.provenance
        )

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        return (
            f"Mdp(states={len(self.state_names)}, actions={self.n_actions}, "
            f"title={self.title!r})"
        )


def validate_mdp(mdp: Mdp) -> List[Violation]:
    """
    Check the Mdp invariants.

    Returns:
        List of violations, empty when the MDP is valid. Each violation
        names the offending (s, a) or (s, a, t).
    """
    violations: List[Violation] = []
    for s, state in enumerate(mdp.state_names):
        if mdp.action_count(s) == 0:
            violations.append(Violation("empty-action-set", state, message="no available actions"))
            continue
        for a, action in enumerate(mdp.action_names[s]):
            row = mdp.transition[s, a]
            for t, p in enumerate(row):
                target = mdp.state_names[t]
                if not math.isfinite(p):
                    violations.append(Violation(
                        "non-finite-probability", state, action, target, f"probability {p}"
                    ))
                elif p < 0.0:
                    violations.append(Violation(
                        "negative-probability", state, action, target, f"probability {p!r} < 0"
                    ))
                elif p > 1.0:
                    violations.append(Violation(
                        "probability-above-one", state, action, target, f"probability {p!r} > 1"
                    ))
            total = math.fsum(row)
            if math.isfinite(total) and abs(total - 1.0) > ROW_SUM_TOL:
                violations.append(Violation(
                    "row-sum", state, action, message=f"row sums to {total!r}, expected 1"
                ))
            if not math.isfinite(mdp.reward[s, a]):
                violations.append(Violation(
                    "non-finite-reward", state, action, message=f"reward {mdp.reward[s, a]}"
                ))
    return violations


def require_valid(mdp: Mdp) -> None:
    """
    Raise if the MDP violates its definition.

    Raises:
        ValidationError: carrying the full violation list
    """
    violations = validate_mdp(mdp)
    if violations:
        summary = "; ".join(str(v) for v in violations[:5])
        more = f" (+{len(violations) - 5} more)" if len(violations) > 5 else ""
        raise ValidationError(f"invalid MDP: {summary}{more}", violations)


@dataclass(frozen=True)
class Policy:
    """Stationary deterministic policy: action_of[s] indexes state s's actions."""

    action_of: Tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "action_of", tuple(int(a) for a in self.action_of))

    def describe(self, mdp: Mdp) -> str:
        """Render as 'state:action,...' using the MDP's names."""
        return ",".join(
            f"{mdp.state_names[s]}:{mdp.action_names[s][a]}" for s, a in enumerate(self.action_of)
        )


def check_policy(mdp: Mdp, policy: Policy) -> None:
    """
    Raises:
        ValueError: If the policy does not map every state to a valid action
    """
    if len(policy.action_of) != mdp.n_states:
        raise ValueError(
            f"policy covers {len(policy.action_of)} states, MDP has {mdp.n_states}"
        )
    for s, a in enumerate(policy.action_of):
        if not 0 <= a < mdp.action_count(s):
            raise ValueError(
                f"action index {a} out of range at state '{mdp.state_names[s]}'"
            )


def parse_policy(mdp: Mdp, text: str) -> Policy:
    """
    Parse 'state:action,state:action,...'.

    States with a single action may be omitted; every state offering a
    choice must be listed.
    """
    chosen: Dict[int, int] = {}
    for item in filter(None, (part.strip() for part in text.split(","))):
        if ":" not in item:
            raise ValueError(f"policy entry '{item}' is not of the form state:action")
        state_name, action_name = (part.strip() for part in item.split(":", 1))
        s = mdp.state_index(state_name)
        chosen[s] = mdp.action_index(s, action_name)
    actions = []
    for s in range(mdp.n_states):
        if s in chosen:
            actions.append(chosen[s])
        elif mdp.action_count(s) == 1:
            actions.append(0)
        else:
            raise ValueError(f"policy does not choose an action at state '{mdp.state_names[s]}'")
    return Policy(tuple(actions))


@dataclass(frozen=True)
class Trajectory:
    """
    A sampled finite path.

    Attributes:
        steps: (state, action, reward) triples
        rng_seed: seed of the stream that generated it
        final_state: state reached after the last step
    """

    steps: Tuple[Tuple[int, int, float], ...]
    rng_seed: int
    final_state: int

    @property
    def rewards(self) -> List[float]:
        return [r for _, _, r in self.steps]

    def __len__(self) -> int:
        return len(self.steps)


class TransitionSampler:
    """
    Precomputed inverse-CDF tables for every available (s, a) row.

    Cumulative sums run over the positive entries of T(.|s, a) in declared
    state order; a variate u selects the first target whose cumulative
    weight exceeds u. Variates beyond the final cumulative value (row sums
    a hair below 1) fall to the last positive target.
    """

    def __init__(self, mdp: Mdp):
        self._targets: Dict[Tuple[int, int], List[int]] = {}
        self._cumulative: Dict[Tuple[int, int], List[float]] = {}
        for s, a in mdp.state_action_pairs():
            targets, cumulative = _cdf_row(mdp.transition[s, a])
            self._targets[(s, a)] = targets
            self._cumulative[(s, a)] = cumulative

    def sample(self, state: int, action: int, u: float) -> int:
        cumulative = self._cumulative[(state, action)]
        targets = self._targets[(state, action)]
        index = bisect.bisect_right(cumulative, u)
        return targets[min(index, len(targets) - 1)]


def _cdf_row(row: np.ndarray) -> Tuple[List[int], List[float]]:
    targets: List[int] = []
    cumulative: List[float] = []
    acc = 0.0
    for t, p in enumerate(row.tolist()):
        if p > 0.0:
            acc += p
            targets.append(t)
            cumulative.append(acc)
    return targets, cumulative


def _check_indices(mdp: Mdp, state: int, action: int) -> None:
    if not 0 <= state < mdp.n_states:
        raise IndexError(f"state index {state} out of range [0, {mdp.n_states})")
    if not 0 <= action < mdp.action_count(state):
        raise IndexError(
            f"action index {action} out of range at state '{mdp.state_names[state]}'"
        )


def sample_step(mdp: Mdp, state: int, action: int, rng: RngState) -> Tuple[int, float, RngState]:
    """
    Sample one transition.

    Args:
        mdp: a valid MDP
        state: current state index
        action: action index at that state
        rng: stream position; one variate is consumed

    Returns:
        (next_state, R(state, action), advanced rng)

    Raises:
        IndexError: If state or action is out of range
    """
    _check_indices(mdp, state, action)
    targets, cumulative = _cdf_row(mdp.transition[state, action])
    u = uniform_at(rng)
    index = bisect.bisect_right(cumulative, u)
    next_state = targets[min(index, len(targets) - 1)]
    return next_state, float(mdp.reward[state, action]), rng.advanced()


def sample_trajectory(
    mdp: Mdp,
    policy: Policy,
    start: int,
    length: int,
    rng: RngState,
) -> Tuple[Trajectory, RngState]:
    """
    Roll out a stationary policy for `length` steps from `start`.

    Consumes exactly `length` variates, so the result matches repeated
    sample_step calls from the same stream position.
    """
    check_policy(mdp, policy)
    if not 0 <= start < mdp.n_states:
        raise IndexError(f"start state {start} out of range [0, {mdp.n_states})")
    sampler = TransitionSampler(mdp)
    stream = UniformStream(rng)
    reward = mdp.reward.tolist()
    steps = []
    state = start
    for _ in range(length):
        action = policy.action_of[state]
        steps.append((state, action, reward[state][action]))
        state = sampler.sample(state, action, stream.draw())
    return Trajectory(tuple(steps), rng.seed, state), stream.state


def count_policies(mdp: Mdp) -> int:
    return math.prod(mdp.action_count(s) for s in range(mdp.n_states))


def enumerate_policies(mdp: Mdp, cap: int = DEFAULT_ENUMERATION_CAP) -> List[Policy]:
    """
    List every stationary deterministic policy in lexicographic order.

    Raises:
        EnumerationCapError: If the policy count exceeds cap
    """
    total = count_policies(mdp)
    if total > cap:
        raise EnumerationCapError(
            f"{total} stationary deterministic policies exceed the enumeration cap {cap}"
        )
    ranges = [range(mdp.action_count(s)) for s in range(mdp.n_states)]
    return [Policy(choice) for choice in itertools.product(*ranges)]


def policy_matrix(mdp: Mdp, policy: Policy) -> Tuple[np.ndarray, np.ndarray]:
    """Return (T_pi, r_pi): the policy's transition matrix and reward vector."""
    rows = np.arange(mdp.n_states)
    actions = np.asarray(policy.action_of)
    return mdp.transition[rows, actions, :], mdp.reward[rows, actions]


def _components(adjacency: np.ndarray) -> Tuple[int, np.ndarray]:
    return connected_components(csr_matrix(adjacency), directed=True, connection="strong")


def closed_classes(mdp: Mdp, policy: Policy) -> List[List[int]]:
    """
    Closed recurrent classes of the chain induced by a policy.

    These are the strongly connected components with no edge leaving them.
    """
    matrix, _ = policy_matrix(mdp, policy)
    adjacency = matrix > 0.0
    count, labels = _components(adjacency)
    classes = []
    for label in range(count):
        members = np.flatnonzero(labels == label)
        outside = np.flatnonzero(labels != label)
        if not adjacency[np.ix_(members, outside)].any():
            classes.append(members.tolist())
    return classes


def is_communicating(mdp: Mdp) -> bool:
    """True when every state reaches every other under some action sequence."""
    adjacency = (mdp.transition > 0.0).any(axis=1)
    count, _ = _components(adjacency)
    return count == 1
