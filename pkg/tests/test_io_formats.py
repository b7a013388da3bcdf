"""Tests for MDP documents and sweep tables."""

import numpy as np
import pytest
from hypothesis import given, settings
import hypothesis.strategies as st

from conftest import random_mdp
from deprec_mdp.errors import ParseError
from deprec_mdp.exact_solver import gamma_sweep
from deprec_mdp.io_formats import FORMAT_VERSION, parse_mdp, serialize_mdp, write_sweep_csv
from deprec_mdp.scenarios import build_periodic_chain

TWO_STATES = """\
format deprec-mdp/1
# a comment and a blank line

state x a
state y a
transition x a x 1/3
transition x a y 2/3
transition y a x 1
reward y a -2.5
"""


class TestParse:
    def test_car_document(self, car, car_document):
        mdp = parse_mdp(car_document)
        assert mdp.title == "car dealership"
        assert mdp.provenance is None
        assert mdp.state_names == car.state_names
        assert mdp.action_names == car.action_names
        np.testing.assert_array_equal(mdp.transition, car.transition)
        np.testing.assert_array_equal(mdp.reward, car.reward)

    def test_fractions_and_comments(self):
        mdp = parse_mdp(TWO_STATES)
        assert mdp.transition[0, 0, 0] == 1 / 3
        assert mdp.transition[0, 0, 1] == 2 / 3
        assert mdp.reward[1, 0] == -2.5
        assert mdp.title is None

    def test_row_sum_is_located(self, car_document):
        text = car_document.replace("transition s_1 a s_1 1/2", "transition s_1 a s_1 0.4")
        with pytest.raises(ParseError) as excinfo:
            parse_mdp(text)
        error = excinfo.value
        assert error.violations[0].kind == "row-sum"
        assert error.line == text.splitlines().index("transition s_1 a s_1 0.4") + 1
        assert error.column == len("transition ") + 1

    def test_probability_out_of_range_is_located(self):
        text = TWO_STATES.replace("x a y 2/3", "x a y -2/3").replace("x a x 1/3", "x a x 5/3")
        with pytest.raises(ParseError) as excinfo:
            parse_mdp(text)
        assert excinfo.value.line == 6
        assert excinfo.value.column == len("transition x a x ") + 1

    def test_row_within_tolerance_is_renormalized(self):
        text = TWO_STATES.replace("x a y 2/3", "x a y 0.6666666672")
        mdp = parse_mdp(text)
        row = mdp.transition[0, 0]
        assert abs(row.sum() - 1.0) <= 1e-15
        assert row[1] < 0.6666666672
        assert row[0] < 1 / 3
        assert parse_mdp(serialize_mdp(mdp)) == mdp

    def test_row_outside_tolerance_is_rejected(self):
        text = TWO_STATES.replace("x a y 2/3", "x a y 0.666666669")
        with pytest.raises(ParseError) as excinfo:
            parse_mdp(text)
        assert excinfo.value.violations[0].kind == "row-sum"

    @pytest.mark.parametrize("name_line, column", [("state x#1 a", 7), ("state x a#", 9)])
    def test_hash_in_names_is_located(self, name_line, column):
        text = TWO_STATES.replace("state x a", name_line)
        with pytest.raises(ParseError) as excinfo:
            parse_mdp(text)
        assert (excinfo.value.line, excinfo.value.column) == (4, column)

    @pytest.mark.parametrize(
        "replace, expected_line",
        [
            (("format deprec-mdp/1", "format deprec-mdp/2"), 1),
            (("state y a", "state x a"), 5),
            (("reward y a -2.5", "reward y b -2.5"), 9),
            (("reward y a -2.5", "reward y a 1/0"), 9),
            (("reward y a -2.5", "reward y a"), 9),
            (("reward y a -2.5", "cost y a 1"), 9),
            (("transition y a x 1", "transition y a z 1"), 8),
            (("transition y a x 1\n", ""), 5),
            (("transition x a y 2/3", "transition x a x 2/3"), 7),
        ],
    )
    def test_rejections(self, replace, expected_line):
        with pytest.raises(ParseError) as excinfo:
            parse_mdp(TWO_STATES.replace(*replace))
        assert excinfo.value.line == expected_line
        assert excinfo.value.column >= 1

    def test_missing_header(self):
        with pytest.raises(ParseError) as excinfo:
            parse_mdp("state x a\n")
        assert (excinfo.value.line, excinfo.value.column) == (1, 1)
        with pytest.raises(ParseError):
            parse_mdp("")

    def test_duplicate_title(self):
        text = TWO_STATES.replace("state x a", "title one\ntitle two\nstate x a")
        with pytest.raises(ParseError):
            parse_mdp(text)

    @settings(max_examples=1000)
    @given(data=st.data())
    def test_mutations_only_raise_parse_errors(self, data):
        lines = TWO_STATES.splitlines()
        kind = data.draw(st.sampled_from(["delete-char", "insert-char", "drop-line", "swap-lines"]))
        if kind == "drop-line":
            del lines[data.draw(st.integers(0, len(lines) - 1))]
            text = "\n".join(lines)
        elif kind == "swap-lines":
            i = data.draw(st.integers(0, len(lines) - 1))
            j = data.draw(st.integers(0, len(lines) - 1))
            lines[i], lines[j] = lines[j], lines[i]
            text = "\n".join(lines)
        else:
            position = data.draw(st.integers(0, len(TWO_STATES) - 1))
            if kind == "delete-char":
                text = TWO_STATES[:position] + TWO_STATES[position + 1:]
            else:
                char = data.draw(st.sampled_from(list("0123456789/.-e xyab#\n")))
                text = TWO_STATES[:position] + char + TWO_STATES[position:]
        try:
            parse_mdp(text)
        except ParseError as e:
            assert e.line >= 1 and e.column >= 1


class TestSerialize:
    def test_round_trip(self, car):
        text = serialize_mdp(car)
        assert parse_mdp(text) == car
        assert serialize_mdp(parse_mdp(text)) == text

    def test_layout(self, car):
        lines = serialize_mdp(car).splitlines()
        assert lines[0] == f"format {FORMAT_VERSION}"
        assert lines[1] == "title car dealership"
        assert lines[2].startswith("provenance car:")
        assert lines[3] == "state s_d a_1 a_2"
        assert "transition s_1 a s_1 0.5" in lines
        assert lines[-2:] == ["reward t_1 a 5", "reward t_2 a 7"]

    def test_zero_entries_omitted(self, zero_reward_mdp):
        text = serialize_mdp(zero_reward_mdp)
        assert "reward" not in text
        assert " 0\n" not in text

    def test_thirds_survive(self):
        mdp = parse_mdp(TWO_STATES)
        assert parse_mdp(serialize_mdp(mdp)) == mdp

    def test_multiline_title_is_folded(self):
        mdp = build_periodic_chain([1, 2])
        mdp = type(mdp)(
            mdp.state_names, mdp.action_names, mdp.transition, mdp.reward,
            title="two\nlines", provenance=mdp.provenance,
        )
        text = serialize_mdp(mdp)
        assert "title two lines\n" in text
        assert serialize_mdp(parse_mdp(text)) == text

    @settings(max_examples=30)
    @given(seed=st.integers(0, 10_000), n_states=st.integers(1, 5), n_actions=st.integers(1, 3))
    def test_random_documents_are_stable(self, seed, n_states, n_actions):
        mdp = random_mdp(seed, n_states, n_actions)
        text = serialize_mdp(mdp)
        parsed = parse_mdp(text)
        assert parsed == mdp
        assert serialize_mdp(parsed) == text


class TestSweepCsv:
    def test_default_grid(self, car):
        gammas = [k / 100 for k in range(1, 100)]
        rows = gamma_sweep(car, 0.5, gammas, workers=4)
        lines = write_sweep_csv(rows, car.state_names).splitlines()
        assert len(lines) == 100
        assert lines[0] == "gamma,s_d,s_1,t_1,s_2,t_2"
        gamma, first = lines[50].split(",")[:2]
        assert float(gamma) == 0.5
        assert float(first) == pytest.approx(40 / 33, rel=1e-9)

    def test_width_checked(self):
        with pytest.raises(ValueError):
            write_sweep_csv([(0.5, [1.0, 2.0])], ["only"])
        with pytest.raises(ValueError):
            write_sweep_csv([], ["only"])

    def test_digits(self):
        text = write_sweep_csv([(0.25, [2 / 3])], ["x"], digits=4)
        assert text == "gamma,x\n0.25,0.6667\n"
