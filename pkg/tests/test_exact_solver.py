"""Tests for value iteration, policy iteration, the average solvers and the probes."""

import numpy as np
import pytest
from hypothesis import given, settings
import hypothesis.strategies as st

from conftest import (
    CAR_A2_VALUE,
    CAR_DEPRECIATING_SD,
    CAR_GAIN,
    CAR_V_LAMBDA,
    CHAIN_345_DEPRECIATING,
    random_mdp,
)
from deprec_mdp.errors import SolverError, UnsupportedStructureError
from deprec_mdp.exact_solver import (
    Criterion,
    brute_force_optimal,
    check_unichain,
    gamma_sweep,
    monte_carlo_policy_value,
    policy_evaluation,
    policy_gain,
    policy_iteration,
    solve_average,
    solve_average_depreciating,
    solve_discounted_depreciating,
    tauberian_probe,
    value_iteration_discounted,
)
from deprec_mdp.mdp_core import Mdp, Policy
from deprec_mdp.payoff import DiscountSpec
from deprec_mdp.rng import RngState
from deprec_mdp.scenarios import CarDealershipParams, build_car_dealership

A1 = Policy((0, 0, 0, 0, 0))
A2 = Policy((1, 0, 0, 0, 0))

# (states, actions) with at most 256 stationary deterministic policies
SMALL_SHAPES = [(s, a) for s in range(1, 9) for a in range(1, 5) if a ** s <= 256]


def _action_gap(q_row: np.ndarray) -> float:
    """Distance between the best and second-best action value."""
    if q_row.size < 2:
        return np.inf
    top = np.sort(q_row)[-2:]
    return float(top[1] - top[0])


def _has_near_tie(mdp: Mdp, values: np.ndarray, lam: float, margin: float) -> bool:
    q = mdp.reward + lam * (mdp.transition @ values)
    return any(_action_gap(q[s]) <= margin for s in range(mdp.n_states))


def two_traps() -> Mdp:
    return Mdp.from_entries(
        ["p", "q", "r"],
        {"p": ["left", "right"], "q": ["stay"], "r": ["stay"]},
        {
            ("p", "left"): {"q": 1.0},
            ("p", "right"): {"r": 1.0},
            ("q", "stay"): {"q": 1.0},
            ("r", "stay"): {"r": 1.0},
        },
        {("q", "stay"): 1.0},
    )


class TestDiscounted:
    def test_car_values(self, car):
        values, report = value_iteration_discounted(car, 0.5)
        for name, expected in CAR_V_LAMBDA.items():
            assert values[car.state_index(name)] == pytest.approx(expected, abs=1e-9)
        assert report.greedy_policy.action_of[0] == 0
        assert values.criterion is Criterion.DISCOUNTED

    def test_second_action_is_worse(self, car):
        values = policy_evaluation(car, A2, DiscountSpec(0.5), Criterion.DISCOUNTED)
        assert values[0] == pytest.approx(CAR_A2_VALUE, abs=1e-12)

    def test_depreciating_car(self, car):
        values, report = solve_discounted_depreciating(car, DiscountSpec(0.5, 0.5))
        assert values[car.state_index("s_d")] == pytest.approx(CAR_DEPRECIATING_SD, abs=1e-9)
        assert values[car.state_index("t_1")] == pytest.approx(80 / 11, abs=1e-9)
        assert report.scaling_discrepancy <= 2e-10
        assert (values.lam, values.gamma) == (0.5, 0.5)

    def test_periodic_chain(self, chain345):
        values, _ = solve_discounted_depreciating(chain345, DiscountSpec(0.5, 0.5))
        assert values[0] == pytest.approx(CHAIN_345_DEPRECIATING, abs=1e-9)

    def test_certain_purchase(self):
        mdp = build_car_dealership(CarDealershipParams(1.0, 1.0, 5.0, 3.0))
        values, report = value_iteration_discounted(mdp, 0.5)
        assert values[0] == pytest.approx(10 / 7, abs=1e-9)
        assert report.greedy_policy.action_of[0] == 0

    def test_zero_gamma_is_plain_discounting(self, car):
        plain, _ = value_iteration_discounted(car, 0.7)
        depreciating, _ = solve_discounted_depreciating(car, DiscountSpec(0.7, 0.0))
        np.testing.assert_allclose(plain.values, depreciating.values, atol=1e-9)

    def test_depreciation_near_one_scales_by_horizon(self, car):
        plain, _ = value_iteration_discounted(car, 0.5)
        values, _ = solve_discounted_depreciating(car, DiscountSpec(0.5, 0.999999))
        np.testing.assert_allclose(values.values, plain.values / (1 - 0.5), rtol=1e-5)

    def test_zero_rewards(self, zero_reward_mdp):
        values, _ = solve_discounted_depreciating(zero_reward_mdp, DiscountSpec(0.9, 0.5))
        assert not values.values.any()

    def test_iteration_cap(self, car):
        with pytest.raises(SolverError):
            value_iteration_discounted(car, 0.99, max_iterations=3)

    def test_policy_iteration_matches_value_iteration(self, car):
        spec = DiscountSpec(0.9, 0.3)
        exact, report = policy_iteration(car, spec)
        iterated, _ = solve_discounted_depreciating(car, spec, tol=1e-10)
        np.testing.assert_allclose(exact.values, iterated.values, atol=1e-9)
        assert report.greedy_policy == A1

    @settings(max_examples=200)
    @given(
        seed=st.integers(0, 10_000),
        n_states=st.integers(1, 6),
        n_actions=st.integers(1, 3),
        lam=st.floats(min_value=0.05, max_value=0.95),
        gamma=st.floats(min_value=0.0, max_value=0.95),
    )
    def test_scaling_identity(self, seed, n_states, n_actions, lam, gamma):
        tol = 1e-9
        mdp = random_mdp(seed, n_states, n_actions)
        spec = DiscountSpec(lam, gamma)
        depreciating, report = solve_discounted_depreciating(mdp, spec, tol=tol)
        assert report.scaling_discrepancy <= 2 * tol
        plain, plain_report = value_iteration_discounted(mdp, lam, tol=tol / spec.scale)
        assert np.max(np.abs(depreciating.values - plain.values * spec.scale)) <= 2 * tol
        # scaling every reward by a positive constant leaves the argmax alone
        assert report.greedy_policy == plain_report.greedy_policy or _has_near_tie(
            mdp, plain.values, lam, 1e-6
        )

    @settings(max_examples=100)
    @given(
        seed=st.integers(0, 10_000),
        shape=st.sampled_from(SMALL_SHAPES),
        lam=st.floats(min_value=0.1, max_value=0.9),
        gamma=st.floats(min_value=0.0, max_value=0.9),
    )
    def test_brute_force_agrees(self, seed, shape, lam, gamma):
        tol = 1e-9
        mdp = random_mdp(seed, *shape)
        spec = DiscountSpec(lam, gamma)
        best, policy = brute_force_optimal(mdp, spec)
        iterated, report = solve_discounted_depreciating(mdp, spec, tol=tol, self_check=False)
        np.testing.assert_allclose(best.values, iterated.values, atol=tol)
        np.testing.assert_allclose(
            policy_evaluation(mdp, policy, spec).values, best.values, atol=1e-7
        )
        q = spec.scale * mdp.reward + lam * (mdp.transition @ best.values)
        for s in range(mdp.n_states):
            gap, best_action = _action_gap(q[s]), int(np.argmax(q[s]))
            if gap > 10 * tol:
                assert report.greedy_policy.action_of[s] == best_action
            if gap > 2e-9 * (1 + abs(best.values[s])):
                assert policy.action_of[s] == best_action

    def test_monte_carlo_matches_exact(self, car):
        spec = DiscountSpec(0.5, 0.5)
        mean, stderr, rng = monte_carlo_policy_value(car, A1, spec, 0, 4000, RngState(42))
        assert abs(mean - CAR_DEPRECIATING_SD) <= 4 * stderr + 1e-6
        assert rng.counter > 0


class TestAverage:
    def test_car_gain(self, car):
        gain, report = solve_average(car)
        assert gain == pytest.approx(CAR_GAIN, abs=1e-8)
        assert report.greedy_policy.action_of[0] == 0
        assert report.details["gain_lower"] <= gain <= report.details["gain_upper"]

    def test_policy_gains(self, car):
        assert policy_gain(car, A1) == pytest.approx(1.25)
        assert policy_gain(car, A2) == pytest.approx(7 / 6)

    def test_average_depreciating_car(self, car):
        values, _ = solve_average_depreciating(car, 0.5)
        np.testing.assert_allclose(values.values, 2.5, atol=1e-8)

    def test_periodic_chain(self, chain345):
        gain, _ = solve_average(chain345)
        assert gain == pytest.approx(4.0, abs=1e-8)
        values, _ = solve_average_depreciating(chain345, 0.5)
        np.testing.assert_allclose(values.values, 8.0, atol=1e-8)

    def test_average_depreciating_rejects_zero_gamma(self, car):
        with pytest.raises(ValueError):
            solve_average_depreciating(car, 0.0)

    def test_multichain_rejected_with_witness(self):
        mdp = two_traps()
        with pytest.raises(UnsupportedStructureError) as excinfo:
            solve_average(mdp)
        assert excinfo.value.witness is not None

    def test_unichain_check_skipped_above_cap(self, caplog):
        check_unichain(two_traps(), cap=1)
        assert "skipped" in caplog.text

    def test_brute_force_average(self, car):
        best, policy = brute_force_optimal(car, None, Criterion.AVERAGE)
        np.testing.assert_allclose(best.values, CAR_GAIN)
        assert policy == A1
        best, _ = brute_force_optimal(car, None, Criterion.AVERAGE_DEPRECIATING, gamma=0.5)
        np.testing.assert_allclose(best.values, 2.5)


class TestTauberianProbe:
    def test_car_rows_approach_limit(self, car):
        table = tauberian_probe(car, 0.5)
        gaps = [row.gap for row in table.rows]
        assert all(later < earlier for earlier, later in zip(gaps, gaps[1:]))
        assert table.final_gap < 0.01
        np.testing.assert_allclose(table.rows[-1].scaled_values, 2.5, atol=0.01)
        assert table.stable_policy == A1

    def test_periodic_chain_near_one(self, chain345):
        table = tauberian_probe(chain345, 0.5, [0.99, 0.9999])
        np.testing.assert_allclose(table.reference.values, 8.0, atol=1e-8)
        assert table.rows[-1].lam == 0.9999
        np.testing.assert_allclose(table.rows[-1].scaled_values, 8.0, atol=0.01)
        assert table.final_gap <= 10 * table.rows[0].gap

    @pytest.mark.parametrize("grid", [[], [0.9, 0.5], [0.5, 1.0], [0.9999999]])
    def test_bad_grid(self, car, grid):
        with pytest.raises(ValueError):
            tauberian_probe(car, 0.5, grid)


class TestGammaSweep:
    def test_rows_in_grid_order(self, car):
        gammas = [k / 10 for k in range(10)]
        rows = gamma_sweep(car, 0.5, gammas, workers=3)
        assert [gamma for gamma, _ in rows] == gammas
        for gamma, values in rows:
            expected = CAR_V_LAMBDA["s_d"] / (1 - 0.5 * gamma)
            assert values[0] == pytest.approx(expected, abs=1e-9)

    def test_full_sweep_is_monotone(self, car):
        gammas = [0.001] + [k / 100 for k in range(1, 100)] + [0.999]
        rows = gamma_sweep(car, 0.5, gammas, workers=4)
        s_d = [values[0] for _, values in rows]
        assert all(later > earlier for earlier, later in zip(s_d, s_d[1:]))
        assert s_d[0] == pytest.approx(10 / 11, abs=1e-3)
        # V(s_d) = (10/11) / (1 - gamma/2) falls 1.8e-3 short of 20/11 at 0.999
        assert s_d[-1] == pytest.approx(20 / 11, abs=2e-3)
        assert s_d[-1] == pytest.approx((10 / 11) / (1 - 0.5 * 0.999), abs=1e-9)

    @pytest.mark.parametrize("gamma", [0.001, 0.25, 0.5, 0.75, 0.999])
    def test_greedy_action_independent_of_gamma(self, car, gamma):
        _, report = solve_discounted_depreciating(car, DiscountSpec(0.5, gamma))
        assert report.greedy_policy == A1

    def test_empty_grid(self, car):
        with pytest.raises(ValueError):
            gamma_sweep(car, 0.5, [])
