"""
Built-in Scenarios for deprec-mdp
Version: 1.0.0
Created: 2026-10-18

Concrete environments used throughout the toolkit:
- the car-dealership MDP (a dealer choosing between two car models with
  different purchase success rates and resale values)
- deterministic periodic reward chains (e.g. 3, 4, 5, 3, 4, 5, ...)

States that offer a single action name it "a"; omitted rewards are 0.
"""

import logging
import math
from dataclasses import dataclass
from typing import Sequence

from deprec_mdp.mdp_core import Mdp

logger = logging.getLogger(__name__)

SINGLE_ACTION = "a"
CAR_STATES = ("s_d", "s_1", "t_1", "s_2", "t_2")


@dataclass(frozen=True)
class CarDealershipParams:
    """
    Attributes:
        rho1, rho2: per-step success probability of acquiring car i, in (0, 1]
        r1, r2: resale value of car i, finite and nonnegative
    """

    rho1: float = 0.5
    rho2: float = 0.25
    r1: float = 5.0
    r2: float = 7.0

    def __post_init__(self):
        for name in ("rho1", "rho2"):
            value = getattr(self, name)
            if not 0.0 < value <= 1.0:
                raise ValueError(f"{name} must lie in (0, 1], got {value}")
        for name in ("r1", "r2"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise ValueError(f"{name} must be finite and nonnegative, got {value}")


def build_car_dealership(params: CarDealershipParams) -> Mdp:
    """
    Build the car-dealership MDP.

    At s_d the dealer picks a_1 (go for car 1) or a_2 (go for car 2).
    At s_i the purchase succeeds with probability rho_i (move to t_i),
    otherwise the dealer retries. From t_i the car is sold for r_i and the
    dealer returns to s_d.

    Args:
        params: success rates and car values

    Returns:
        Mdp with states (s_d, s_1, t_1, s_2, t_2)
    """
    actions = {name: (SINGLE_ACTION,) for name in CAR_STATES}
    actions["s_d"] = ("a_1", "a_2")
    transitions = {
        ("s_d", "a_1"): {"s_1": 1.0},
        ("s_d", "a_2"): {"s_2": 1.0},
    }
    rewards = {}
    for i, rho, value in ((1, params.rho1, params.r1), (2, params.rho2, params.r2)):
        row = {f"t_{i}": rho}
        if rho < 1.0:
            row[f"s_{i}"] = 1.0 - rho
        transitions[(f"s_{i}", SINGLE_ACTION)] = row
        transitions[(f"t_{i}", SINGLE_ACTION)] = {"s_d": 1.0}
        rewards[(f"t_{i}", SINGLE_ACTION)] = value

    logger.debug(f"Built car-dealership MDP with {params}")
    return Mdp.from_entries(
        CAR_STATES,
        actions,
        transitions,
        rewards,
        title="car dealership",
        provenance=(
            f"car:{params.rho1!r},{params.rho2!r},{params.r1!r},{params.r2!r}"
        ),
    )


def build_periodic_chain(rewards: Sequence[float]) -> Mdp:
    """
    Deterministic cycle c1 -> c2 -> ... -> cn -> c1 with one action per
    state; state ck pays rewards[k-1].

    Raises:
        ValueError: If rewards is empty or contains a non-finite value
    """
    values = [float(r) for r in rewards]
    if not values:
        raise ValueError("periodic chain needs at least one reward")
    if not all(math.isfinite(r) for r in values):
        raise ValueError(f"rewards must be finite, got {values}")

    names = tuple(f"c{k + 1}" for k in range(len(values)))
    actions = {name: (SINGLE_ACTION,) for name in names}
    transitions = {
        (name, SINGLE_ACTION): {names[(k + 1) % len(names)]: 1.0}
        for k, name in enumerate(names)
    }
    reward_entries = {(name, SINGLE_ACTION): r for name, r in zip(names, values)}
    return Mdp.from_entries(
        names,
        actions,
        transitions,
        reward_entries,
        title="periodic chain",
        provenance="cycle:" + ",".join(repr(r) for r in values),
    )


def _numbers(text: str, selector: str) -> list:
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise ValueError(f"scenario '{selector}' has a non-numeric parameter") from None


def build_scenario(selector: str) -> Mdp:
    """
    Build a scenario from a selector string.

    Accepted forms:
        car                      the default instance (1/2, 1/4, 5, 7)
        car:rho1,rho2,r1,r2
        cycle:r1,r2,...

    Raises:
        ValueError: If the selector is unknown or its parameters are invalid
    """
    name, _, arguments = selector.partition(":")
    name = name.strip().lower()
    if name == "car":
        if not arguments.strip():
            return build_car_dealership(CarDealershipParams())
        values = _numbers(arguments, selector)
        if len(values) != 4:
            raise ValueError(
                f"scenario 'car' takes 4 parameters rho1,rho2,r1,r2, got {len(values)}"
            )
        return build_car_dealership(CarDealershipParams(*values))
    if name == "cycle":
        return build_periodic_chain(_numbers(arguments, selector))
    raise ValueError(f"unknown scenario '{selector}' (expected car:... or cycle:...)")
