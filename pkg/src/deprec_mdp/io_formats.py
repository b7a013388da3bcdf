"""
Text Formats for deprec-mdp
Version: 1.0.0
Created: 2026-10-18

Line-oriented MDP documents ("deprec-mdp/1") and sweep result tables.

Document layout (see docs/FORMATS.md):

    format deprec-mdp/1
    title car dealership
    state s_d a_1 a_2
    state s_1 a
    transition s_d a_1 s_1 1
    transition s_1 a t_1 1/2
    reward t_1 a 5

Features:
- Exact fractions "p/q" for probabilities and rewards
- Every rejection is a ParseError carrying line and column
- Canonical serialization with shortest round-trip decimals
"""

import csv
import io
import logging
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from deprec_mdp.errors import ParseError, ValidationError
from deprec_mdp.mdp_core import ROW_SUM_TOL, Mdp, validate_mdp

logger = logging.getLogger(__name__)

FORMAT_VERSION = "deprec-mdp/1"
SWEEP_DIGITS = 12

_TOKEN = re.compile(r"\S+")


@dataclass
class _Line:
    number: int
    tokens: List[Tuple[str, int]]
    text: str

    def column(self, index: int) -> int:
        return self.tokens[index][1] if index < len(self.tokens) else len(self.text) + 1

    def rest(self, index: int) -> str:
        """Raw text from token `index` to the end of the line."""
        return self.text[self.column(index) - 1:].strip() if index < len(self.tokens) else ""


@dataclass
class _Document:
    title: Optional[str] = None
    provenance: Optional[str] = None
    states: List[str] = field(default_factory=list)
    actions: Dict[str, Tuple[str, ...]] = field(default_factory=dict)
    state_lines: Dict[str, _Line] = field(default_factory=dict)
    transitions: Dict[Tuple[str, str], Dict[str, float]] = field(default_factory=dict)
    transition_lines: Dict[Tuple[str, str, str], _Line] = field(default_factory=dict)
    rewards: Dict[Tuple[str, str], float] = field(default_factory=dict)
    reward_lines: Dict[Tuple[str, str], _Line] = field(default_factory=dict)


def _lines(text: str) -> List[_Line]:
    lines = []
    for number, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        tokens = [(m.group(), m.start() + 1) for m in _TOKEN.finditer(raw)]
        lines.append(_Line(number, tokens, raw))
    return lines


def _number(line: _Line, index: int, what: str) -> float:
    token = line.tokens[index][0]
    try:
        if "/" in token:
            return float(Fraction(token))
        return float(token)
    except (ValueError, ZeroDivisionError, OverflowError):
        raise ParseError(f"invalid {what} '{token}'", line.number, line.column(index)) from None


def _expect(line: _Line, count: int, usage: str) -> None:
    if len(line.tokens) != count:
        index = min(len(line.tokens), count)
        raise ParseError(
            f"expected '{usage}', got {len(line.tokens)} fields",
            line.number,
            line.column(index),
        )


def _locate(doc: _Document, line: _Line, state_at: int, action_at: int) -> Tuple[str, str]:
    state = line.tokens[state_at][0]
    if state not in doc.actions:
        raise ParseError(f"unknown state '{state}'", line.number, line.column(state_at))
    action = line.tokens[action_at][0]
    if action not in doc.actions[state]:
        raise ParseError(
            f"unknown action '{action}' at state '{state}'", line.number, line.column(action_at)
        )
    return state, action


def _read_state(doc: _Document, line: _Line) -> None:
    if len(line.tokens) < 3:
        raise ParseError(
            "expected 'state <name> <action> [<action> ...]'", line.number, line.column(len(line.tokens))
        )
    for index, (token, _) in enumerate(line.tokens[1:], start=1):
        if "#" in token:
            raise ParseError(f"'#' is not allowed in name '{token}'", line.number, line.column(index))
    name = line.tokens[1][0]
    if name in doc.actions:
        raise ParseError(f"duplicate state '{name}'", line.number, line.column(1))
    actions = [token for token, _ in line.tokens[2:]]
    seen = set()
    for index, action in enumerate(actions, start=2):
        if action in seen:
            raise ParseError(
                f"duplicate action '{action}' at state '{name}'", line.number, line.column(index)
            )
        seen.add(action)
    doc.states.append(name)
    doc.actions[name] = tuple(actions)
    doc.state_lines[name] = line


def _read_transition(doc: _Document, line: _Line) -> None:
    _expect(line, 5, "transition <state> <action> <next-state> <probability>")
    state, action = _locate(doc, line, 1, 2)
    target = line.tokens[3][0]
    if target not in doc.actions:
        raise ParseError(f"unknown target state '{target}'", line.number, line.column(3))
    if (state, action, target) in doc.transition_lines:
        raise ParseError(
            f"duplicate transition {state} {action} {target}", line.number, line.column(3)
        )
    doc.transitions.setdefault((state, action), {})[target] = _number(line, 4, "probability")
    doc.transition_lines[(state, action, target)] = line


def _read_reward(doc: _Document, line: _Line) -> None:
    _expect(line, 4, "reward <state> <action> <value>")
    state, action = _locate(doc, line, 1, 2)
    if (state, action) in doc.rewards:
        raise ParseError(f"duplicate reward {state} {action}", line.number, line.column(2))
    doc.rewards[(state, action)] = _number(line, 3, "reward")
    doc.reward_lines[(state, action)] = line


def _read_header(lines: List[_Line]) -> None:
    if not lines:
        raise ParseError(f"empty document, expected 'format {FORMAT_VERSION}'", 1, 1)
    first = lines[0]
    if first.tokens[0][0] != "format":
        raise ParseError(f"expected 'format {FORMAT_VERSION}' first", first.number, first.column(0))
    _expect(first, 2, f"format {FORMAT_VERSION}")
    if first.tokens[1][0] != FORMAT_VERSION:
        raise ParseError(
            f"unsupported format version '{first.tokens[1][0]}', expected {FORMAT_VERSION}",
            first.number,
            first.column(1),
        )


def _violation_site(doc: _Document, violation) -> Tuple[int, int]:
    if violation.action is None:
        line = doc.state_lines[violation.state]
        return line.number, line.column(1)
    if violation.kind == "non-finite-reward":
        line = doc.reward_lines[(violation.state, violation.action)]
        return line.number, line.column(3)
    if violation.target is not None and (violation.state, violation.action, violation.target) in doc.transition_lines:
        line = doc.transition_lines[(violation.state, violation.action, violation.target)]
        return line.number, line.column(4)
    first = min(
        (l for (s, a, _), l in doc.transition_lines.items() if (s, a) == (violation.state, violation.action)),
        key=lambda l: l.number,
    )
    return first.number, first.column(1)


def _renormalize(doc: _Document) -> None:
    """
    Rescale rows whose sum is off by more than rounding noise but within
    ROW_SUM_TOL. Rows outside the tolerance, or with entries outside [0, 1],
    are left for validation to reject.
    """
    for (state, action), row in doc.transitions.items():
        values = list(row.values())
        if not all(0.0 <= p <= 1.0 for p in values):
            continue
        total = math.fsum(values)
        # a rescaled row lands within this band, so parse(serialize(m)) == m
        noise = len(values) * np.finfo(np.float64).eps
        if noise < abs(total - 1.0) <= ROW_SUM_TOL:
            logger.debug(f"Renormalizing row ({state}, {action}): sum {total!r}")
            for target in row:
                row[target] /= total


def parse_mdp(text: str) -> Mdp:
    """
    Parse an MdpDocument.

    Returns:
        A validated Mdp

    Raises:
        ParseError: On any syntax error, version mismatch, missing
                    transition row, or validation failure (located at the
                    line that declared the offending entry)
    """
    lines = _lines(text)
    _read_header(lines)
    doc = _Document()
    for line in lines[1:]:
        keyword = line.tokens[0][0]
        if keyword == "title" or keyword == "provenance":
            if getattr(doc, keyword) is not None:
                raise ParseError(f"duplicate '{keyword}'", line.number, line.column(0))
            setattr(doc, keyword, line.rest(1))
        elif keyword == "state":
            _read_state(doc, line)
        elif keyword == "transition":
            _read_transition(doc, line)
        elif keyword == "reward":
            _read_reward(doc, line)
        elif keyword == "format":
            raise ParseError("duplicate 'format' line", line.number, line.column(0))
        else:
            raise ParseError(f"unknown field '{keyword}'", line.number, line.column(0))

    if not doc.states:
        raise ParseError("document declares no states", lines[0].number, 1)
    for state in doc.states:
        for index, action in enumerate(doc.actions[state], start=2):
            if (state, action) not in doc.transitions:
                line = doc.state_lines[state]
                raise ParseError(
                    f"missing transition row for ({state}, {action})", line.number, line.column(index)
                )

    _renormalize(doc)
    try:
        mdp = Mdp.from_entries(
            doc.states, doc.actions, doc.transitions, doc.rewards, doc.title, doc.provenance
        )
    except ValidationError as e:
        raise ParseError(str(e), lines[0].number, 1) from e
    violations = validate_mdp(mdp)
    if violations:
        line, column = _violation_site(doc, violations[0])
        raise ParseError(str(violations[0]), line, column, violations)
    logger.debug(f"Parsed MDP document: {mdp.n_states} states")
    return mdp


def _format_number(value: float) -> str:
    # repr is the shortest decimal that round-trips
    value = float(value)
    if value.is_integer() and abs(value) < 1e16:
        return str(int(value))
    return repr(value)


def _one_line(text: str) -> str:
    return " ".join(text.splitlines()).strip()


def serialize_mdp(mdp: Mdp) -> str:
    """
    Canonical MdpDocument text.

    Order: format, title, provenance, states, transitions (state-major,
    targets in declared order, zero probabilities omitted), nonzero rewards.
    """
    out = [f"format {FORMAT_VERSION}"]
    if mdp.title is not None:
        out.append(f"title {_one_line(mdp.title)}")
    if mdp.provenance is not None:
        out.append(f"provenance {_one_line(mdp.provenance)}")
    for s, state in enumerate(mdp.state_names):
        out.append(f"state {state} {' '.join(mdp.action_names[s])}")
    for s, a in mdp.state_action_pairs():
        state, action = mdp.state_names[s], mdp.action_names[s][a]
        for t, p in enumerate(mdp.transition[s, a]):
            if p != 0.0:
                out.append(f"transition {state} {action} {mdp.state_names[t]} {_format_number(p)}")
    for s, a in mdp.state_action_pairs():
        value = mdp.reward[s, a]
        if value != 0.0:
            out.append(
                f"reward {mdp.state_names[s]} {mdp.action_names[s][a]} {_format_number(value)}"
            )
    return "\n".join(out) + "\n"


def write_sweep_csv(
    rows: Sequence[Tuple[float, Sequence[float]]],
    state_names: Sequence[str],
    digits: int = SWEEP_DIGITS,
) -> str:
    """
    Sweep table with header "gamma,<state names...>" and one row per gamma.

    Raises:
        ValueError: If rows is empty or a row has the wrong width
    """
    if not rows:
        raise ValueError("sweep needs at least one row")
    names = list(state_names)
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["gamma", *names])
    for gamma, values in rows:
        values = np.asarray(values, dtype=np.float64).reshape(-1)
        if values.size != len(names):
            raise ValueError(
                f"row for gamma={gamma} has {values.size} values, expected {len(names)}"
            )
        writer.writerow([f"{gamma:.{digits}g}", *(f"{v:.{digits}g}" for v in values)])
    return buffer.getvalue()
