"""Shared fixtures for the deprec-mdp test suite."""

from fractions import Fraction

import hypothesis
import numpy as np
import pytest

from deprec_mdp.mdp_core import Mdp
from deprec_mdp.scenarios import CarDealershipParams, build_car_dealership, build_periodic_chain

np.seterr(all="warn")

hypothesis.settings.register_profile("default", max_examples=50, deadline=None)
hypothesis.settings.register_profile("fast", max_examples=5, deadline=None)
hypothesis.settings.register_profile("thorough", max_examples=200, deadline=None)
hypothesis.settings.load_profile("default")

# Car-dealership instance (rho1=1/2, rho2=1/4, r1=5, r2=7) at lambda=1/2
CAR_V_LAMBDA = {"s_d": 10 / 11, "s_1": 20 / 11, "t_1": 60 / 11}
CAR_A2_VALUE = 14 / 19
CAR_DEPRECIATING_SD = 40 / 33
CAR_GAIN = 1.25
CHAIN_345_DEPRECIATING = 200 / 21


def random_mdp(seed: int, n_states: int = 3, n_actions: int = 2, reward_scale: float = 10.0) -> Mdp:
    """Dense random MDP: Dirichlet rows, uniform rewards in [-scale, scale]."""
    rng = np.random.default_rng(seed)
    transition = rng.dirichlet(np.ones(n_states), size=(n_states, n_actions))
    reward = rng.uniform(-reward_scale, reward_scale, size=(n_states, n_actions))
    states = tuple(f"x{i}" for i in range(n_states))
    actions = tuple(tuple(f"b{j}" for j in range(n_actions)) for _ in range(n_states))
    return Mdp(states, actions, transition, reward, title=f"random {seed}")


@pytest.fixture
def car() -> Mdp:
    return build_car_dealership(CarDealershipParams(0.5, 0.25, 5.0, 7.0))


@pytest.fixture
def chain345() -> Mdp:
    return build_periodic_chain([3, 4, 5])


@pytest.fixture
def make_random_mdp():
    return random_mdp


@pytest.fixture
def zero_reward_mdp() -> Mdp:
    return build_car_dealership(CarDealershipParams(0.5, 0.25, 0.0, 0.0))


@pytest.fixture
def car_document() -> str:
    rho2 = Fraction(1, 4)
    return "\n".join([
        "format deprec-mdp/1",
        "title car dealership",
        "state s_d a_1 a_2",
        "state s_1 a",
        "state t_1 a",
        "state s_2 a",
        "state t_2 a",
        "transition s_d a_1 s_1 1",
        "transition s_d a_2 s_2 1",
        "transition s_1 a s_1 1/2",
        "transition s_1 a t_1 1/2",
        "transition t_1 a s_d 1",
        f"transition s_2 a s_2 {1 - rho2}",
        f"transition s_2 a t_2 {rho2}",
        "transition t_2 a s_d 1",
        "reward t_1 a 5",
        "reward t_2 a 7",
        "",
    ])
