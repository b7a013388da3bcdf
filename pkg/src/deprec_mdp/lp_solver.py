"""
LP Solver Module for deprec-mdp
Version: 1.0.0
Created: 2026-10-18

Dense-tableau simplex and the linear programs of the discounted depreciating
criterion.

Features:
- Two-phase primal simplex with Bland's rule (no cycling)
- Free and lower-bounded variables, <=, = and >= rows
- Primal value LP: minimise sum_s x_s v_s subject to one row per (s, a)
- Dual occupancy-measure LP over y_{s,a} >= 0
- Policy extraction from an optimal dual point
- Line-oriented text export for cross-checking with external solvers

The primal row for (s, a) reads
    sum_t v_t (delta_{s,t} - lambda*T(t|s,a)) >= R(s,a)/(1-lambda*gamma)
With variant="scaled" the transition term is divided by (1-lambda*gamma)
as well; that variant does not reproduce the value-iteration fixed point
and is kept only to show the disagreement.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numpy as np

from deprec_mdp.errors import PolicyExtractionError, SolverError
from deprec_mdp.mdp_core import Mdp, Policy, require_valid
from deprec_mdp.payoff import DiscountSpec

logger = logging.getLogger(__name__)

DEFAULT_ITERATION_CAP = 50_000
FEASIBILITY_TOL = 1e-7
PIVOT_TOL = 1e-10
OPTIMALITY_TOL = 1e-9
DUAL_POSITIVITY_TOL = 1e-9

LP_VARIANTS = ("corrected", "scaled")
# accepted on the command line for the scaled form
VARIANT_ALIASES = {"paper": "scaled"}


def canonical_variant(variant: str) -> str:
    """Resolve an alias to its LP_VARIANTS name; unknown names pass through."""
    return VARIANT_ALIASES.get(variant, variant)


class Relation(str, Enum):
    LE = "<="
    EQ = "="
    GE = ">="


class Sense(str, Enum):
    MINIMIZE = "minimize"
    MAXIMIZE = "maximize"


class LpStatus(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    ITERATION_LIMIT = "iteration_limit"


@dataclass(frozen=True, eq=False)
class LpInstance:
    """
    A dense linear program.

    Attributes:
        objective: coefficients c, shape (n,)
        matrix: constraint matrix A, shape (m, n)
        rhs: right-hand sides b, shape (m,)
        relations: one Relation per row
        lower_bounds: per variable, a finite lower bound or None (free)
        sense: minimise or maximise c.x
        variable_names: labels for export and basis descriptions
        constraint_names: labels for export
    """

    objective: np.ndarray
    matrix: np.ndarray
    rhs: np.ndarray
    relations: Tuple[Relation, ...]
    lower_bounds: Tuple[Optional[float], ...]
    sense: Sense = Sense.MINIMIZE
    variable_names: Tuple[str, ...] = ()
    constraint_names: Tuple[str, ...] = ()

    def __post_init__(self):
        objective = np.asarray(self.objective, dtype=np.float64).reshape(-1)
        n = objective.size
        matrix = np.asarray(self.matrix, dtype=np.float64).reshape(-1, n) if n else np.zeros((0, 0))
        rhs = np.asarray(self.rhs, dtype=np.float64).reshape(-1)
        m = matrix.shape[0]
        if rhs.size != m:
            raise ValueError(f"rhs has {rhs.size} entries for {m} constraint rows")
        if len(self.relations) != m:
            raise ValueError(f"{len(self.relations)} relations for {m} constraint rows")
        if len(self.lower_bounds) != n:
            raise ValueError(f"{len(self.lower_bounds)} lower bounds for {n} variables")
        for array, name in ((objective, "objective"), (matrix, "matrix"), (rhs, "rhs")):
            if not np.isfinite(array).all():
                raise ValueError(f"LP {name} has non-finite coefficients")
        variable_names = tuple(self.variable_names) or tuple(f"x{j}" for j in range(n))
        constraint_names = tuple(self.constraint_names) or tuple(f"c{i}" for i in range(m))
        if len(variable_names) != n or len(constraint_names) != m:
            raise ValueError("name lists do not match the LP dimensions")
        object.__setattr__(self, "objective", objective)
        object.__setattr__(self, "matrix", matrix)
        object.__setattr__(self, "rhs", rhs)
        object.__setattr__(self, "relations", tuple(Relation(r) for r in self.relations))
        object.__setattr__(self, "sense", Sense(self.sense))
        object.__setattr__(self, "variable_names", variable_names)
        object.__setattr__(self, "constraint_names", constraint_names)

    @property
    def n_variables(self) -> int:
        return self.objective.size

    @property
    def n_constraints(self) -> int:
        return self.rhs.size

    def max_violation(self, point: np.ndarray) -> float:
        """Largest constraint or bound violation of a point (0 when feasible)."""
        lhs = self.matrix @ point
        worst = 0.0
        for i, relation in enumerate(self.relations):
            if relation is Relation.LE:
                worst = max(worst, lhs[i] - self.rhs[i])
            elif relation is Relation.GE:
                worst = max(worst, self.rhs[i] - lhs[i])
            else:
                worst = max(worst, abs(lhs[i] - self.rhs[i]))
        for j, bound in enumerate(self.lower_bounds):
            if bound is not None:
                worst = max(worst, bound - point[j])
        return float(worst)


@dataclass(frozen=True, eq=False)
class LpSolution:
    """
    Result of simplex_solve.

    Attributes:
        status: optimal, infeasible, unbounded or iteration_limit
        x: primal point in the instance's variables (None unless optimal)
        objective: c.x at the point (None unless optimal)
        basis: labels of the basic columns of the final tableau
        iterations: pivots performed over both phases
        max_violation: largest constraint violation of x
    """

    status: LpStatus
    x: Optional[np.ndarray] = None
    objective: Optional[float] = None
    basis: Tuple[str, ...] = ()
    iterations: int = 0
    max_violation: float = 0.0

    @property
    def is_optimal(self) -> bool:
        return self.status is LpStatus.OPTIMAL


@dataclass
class _StandardForm:
    """min c.z s.t. A z = b, z >= 0, b >= 0, plus the map back to x."""

    cost: np.ndarray
    matrix: np.ndarray
    rhs: np.ndarray
    labels: List[str]
    basis: List[int]
    artificial: List[int]
    columns: List[Tuple[int, float]] = field(default_factory=list)
    offset: np.ndarray = None  # type: ignore[assignment]


def _standard_form(lp: LpInstance) -> _StandardForm:
    n = lp.n_variables
    m = lp.n_constraints
    sign = 1.0 if lp.sense is Sense.MINIMIZE else -1.0

    offset = np.array([bound if bound is not None else 0.0 for bound in lp.lower_bounds])
    rhs = lp.rhs - lp.matrix @ offset

    # Each original variable becomes one column (shifted) or two (free split).
    columns: List[Tuple[int, float]] = []
    labels: List[str] = []
    for j in range(n):
        if lp.lower_bounds[j] is None:
            columns.extend([(j, 1.0), (j, -1.0)])
            labels.extend([f"{lp.variable_names[j]}+", f"{lp.variable_names[j]}-"])
        else:
            columns.append((j, 1.0))
            labels.append(lp.variable_names[j])
    structural = np.column_stack(
        [lp.matrix[:, j] * s for j, s in columns]
    ) if columns else np.zeros((m, 0))
    cost = [sign * lp.objective[j] * s for j, s in columns]

    relations = list(lp.relations)
    rows = structural.copy()
    for i in range(m):
        if rhs[i] < 0:
            rows[i] *= -1.0
            rhs[i] = -rhs[i]
            if relations[i] is Relation.LE:
                relations[i] = Relation.GE
            elif relations[i] is Relation.GE:
                relations[i] = Relation.LE

    extra: List[np.ndarray] = []
    basis = [-1] * m
    width = rows.shape[1]
    for i, relation in enumerate(relations):
        if relation is Relation.EQ:
            continue
        column = np.zeros(m)
        column[i] = 1.0 if relation is Relation.LE else -1.0
        extra.append(column)
        labels.append(f"slack[{lp.constraint_names[i]}]")
        cost.append(0.0)
        if relation is Relation.LE:
            basis[i] = width + len(extra) - 1
    artificial: List[int] = []
    for i in range(m):
        if basis[i] >= 0:
            continue
        column = np.zeros(m)
        column[i] = 1.0
        extra.append(column)
        labels.append(f"artificial[{lp.constraint_names[i]}]")
        cost.append(0.0)
        basis[i] = width + len(extra) - 1
        artificial.append(basis[i])

    matrix = np.column_stack([rows] + extra) if extra else rows
    return _StandardForm(
        cost=np.asarray(cost, dtype=np.float64),
        matrix=matrix,
        rhs=rhs,
        labels=labels,
        basis=basis,
        artificial=artificial,
        columns=columns,
        offset=offset,
    )


class _Tableau:
    """
    Dense simplex tableau: rows 0..m-1 hold [B^-1 A | B^-1 b], the last row
    holds reduced costs and minus the objective value.
    """

    def __init__(self, matrix: np.ndarray, rhs: np.ndarray, basis: List[int], pivot_tol: float = PIVOT_TOL):
        self.pivot_tol = pivot_tol
        m, n = matrix.shape
        self.table = np.zeros((m + 1, n + 1))
        self.table[:m, :n] = matrix
        self.table[:m, n] = rhs
        self.basis = list(basis)

    @property
    def m(self) -> int:
        return self.table.shape[0] - 1

    def set_cost(self, cost: np.ndarray) -> None:
        n = cost.size
        self.table[-1, :] = 0.0
        self.table[-1, :n] = cost
        for i, j in enumerate(self.basis):
            if self.table[-1, j] != 0.0:
                self.table[-1, :] -= self.table[-1, j] * self.table[i, :]

    def pivot(self, row: int, column: int) -> None:
        table = self.table
        table[row, :] /= table[row, column]
        for i in range(table.shape[0]):
            if i != row and table[i, column] != 0.0:
                table[i, :] -= table[i, column] * table[row, :]
        self.basis[row] = column

    def run(self, allowed: int, budget: int) -> Tuple[str, int]:
        """
        Bland's rule pivots over the first `allowed` columns.

        Returns:
            ("optimal" | "unbounded" | "iteration_limit", pivots used)
        """
        table = self.table
        pivots = 0
        while True:
            reduced = table[-1, :allowed]
            candidates = np.flatnonzero(reduced < -OPTIMALITY_TOL)
            if candidates.size == 0:
                return "optimal", pivots
            if pivots >= budget:
                return "iteration_limit", pivots
            entering = int(candidates[0])
            column = table[:-1, entering]
            rows = np.flatnonzero(column > self.pivot_tol)
            if rows.size == 0:
                return "unbounded", pivots
            ratios = table[rows, -1] / column[rows]
            best = ratios.min()
            ties = rows[ratios <= best + self.pivot_tol * max(1.0, abs(best))]
            leaving = int(min(ties, key=lambda i: self.basis[i]))
            self.pivot(leaving, entering)
            pivots += 1

    def drop_row(self, row: int) -> None:
        self.table = np.delete(self.table, row, axis=0)
        del self.basis[row]


def simplex_solve(
    lp: LpInstance,
    iteration_cap: int = DEFAULT_ITERATION_CAP,
    feasibility_tol: float = FEASIBILITY_TOL,
    pivot_tol: float = PIVOT_TOL,
) -> LpSolution:
    """
    Solve an LP by the two-phase primal simplex method with Bland's rule.

    Phase 1 minimises the sum of artificial variables; a positive optimum
    (beyond feasibility_tol, scaled by the rhs magnitude) means infeasible.
    Artificials left in the basis at zero level are pivoted out or their
    redundant rows dropped before phase 2.

    Returns:
        LpSolution; iteration_cap exhaustion yields status iteration_limit
    """
    form = _standard_form(lp)
    tableau = _Tableau(form.matrix, form.rhs, form.basis, pivot_tol)
    width = form.matrix.shape[1]
    used = 0

    if form.artificial:
        phase_one = np.zeros(width)
        phase_one[form.artificial] = 1.0
        tableau.set_cost(phase_one)
        outcome, pivots = tableau.run(width, iteration_cap)
        used += pivots
        if outcome == "iteration_limit":
            return LpSolution(LpStatus.ITERATION_LIMIT, iterations=used)
        infeasibility = -tableau.table[-1, -1]
        if infeasibility > feasibility_tol * (1.0 + float(np.max(np.abs(form.rhs), initial=0.0))):
            logger.debug(f"Phase 1 ended with infeasibility {infeasibility:.3e}")
            return LpSolution(LpStatus.INFEASIBLE, iterations=used)

        artificial = set(form.artificial)
        row = 0
        while row < tableau.m:
            if tableau.basis[row] in artificial:
                entries = tableau.table[row, :width]
                choices = [j for j in range(width) if j not in artificial and abs(entries[j]) > pivot_tol]
                if choices:
                    tableau.pivot(row, choices[0])
                else:
                    tableau.drop_row(row)
                    continue
            row += 1
        keep = [j for j in range(width) if j not in artificial]
        tableau.table = np.hstack([tableau.table[:, keep], tableau.table[:, -1:]])
        remap = {old: new for new, old in enumerate(keep)}
        tableau.basis = [remap[j] for j in tableau.basis]
        labels = [form.labels[j] for j in keep]
        cost = form.cost[keep]
    else:
        labels = form.labels
        cost = form.cost

    tableau.set_cost(cost)
    outcome, pivots = tableau.run(cost.size, iteration_cap - used)
    used += pivots
    if outcome == "iteration_limit":
        return LpSolution(LpStatus.ITERATION_LIMIT, iterations=used)
    if outcome == "unbounded":
        return LpSolution(LpStatus.UNBOUNDED, iterations=used)

    z = np.zeros(cost.size)
    for i, j in enumerate(tableau.basis):
        z[j] = tableau.table[i, -1]
    x = form.offset.copy()
    for k, (j, s) in enumerate(form.columns):
        x[j] += s * z[k]
    violation = lp.max_violation(x)
    if violation > feasibility_tol:
        logger.warning(f"Simplex point violates constraints by {violation:.3e}")
    return LpSolution(
        LpStatus.OPTIMAL,
        x=x,
        objective=float(lp.objective @ x),
        basis=tuple(labels[j] for j in tableau.basis),
        iterations=used,
        max_violation=violation,
    )


def _check_weights(mdp: Mdp, weights: Optional[Sequence[float]]) -> np.ndarray:
    if weights is None:
        return np.ones(mdp.n_states)
    values = np.asarray(weights, dtype=np.float64).reshape(-1)
    if values.size != mdp.n_states:
        raise ValueError(f"expected {mdp.n_states} state weights, got {values.size}")
    if not (values > 0).all():
        raise ValueError(f"state weights must be strictly positive, got {values.tolist()}")
    return values


def _pair_name(mdp: Mdp, s: int, a: int) -> str:
    return f"{mdp.state_names[s]}/{mdp.action_names[s][a]}"


def build_primal_lp(
    mdp: Mdp,
    spec: DiscountSpec,
    weights: Optional[Sequence[float]] = None,
    variant: str = "corrected",
) -> LpInstance:
    """
    Primal value LP: minimise sum_s x_s v_s with one >= row per available (s, a).

    Args:
        mdp: a valid MDP
        spec: discount and depreciation factors
        weights: strictly positive state weights x_s (default all ones)
        variant: "corrected" (transition term lambda*T) or "scaled"
                 (transition term lambda*T/(1-lambda*gamma))

    Raises:
        ValueError: If a weight is not positive or the variant is unknown
    """
    variant = canonical_variant(variant)
    if variant not in LP_VARIANTS:
        raise ValueError(f"variant must be one of {LP_VARIANTS}, got '{variant}'")
    require_valid(mdp)
    x = _check_weights(mdp, weights)
    transition_factor = spec.lam * (spec.scale if variant == "scaled" else 1.0)
    pairs = mdp.state_action_pairs()
    matrix = np.zeros((len(pairs), mdp.n_states))
    rhs = np.zeros(len(pairs))
    for row, (s, a) in enumerate(pairs):
        matrix[row] = -transition_factor * mdp.transition[s, a]
        matrix[row, s] += 1.0
        rhs[row] = mdp.reward[s, a] * spec.scale
    return LpInstance(
        objective=x,
        matrix=matrix,
        rhs=rhs,
        relations=tuple(Relation.GE for _ in pairs),
        lower_bounds=tuple(None for _ in range(mdp.n_states)),
        sense=Sense.MINIMIZE,
        variable_names=tuple(f"v[{name}]" for name in mdp.state_names),
        constraint_names=tuple(_pair_name(mdp, s, a) for s, a in pairs),
    )


def build_dual_lp(
    mdp: Mdp,
    spec: DiscountSpec,
    weights: Optional[Sequence[float]] = None,
) -> LpInstance:
    """
    Dual occupancy-measure LP over y_{s,a} >= 0 (available pairs, state-major):

        maximise  sum_{(s,a)} y_{s,a} R(s,a)/(1-lambda*gamma)
        s.t.      sum_{(t,a)} y_{t,a} (delta_{s,t} - lambda*T(s|t,a)) = x_s  for every s
    """
    require_valid(mdp)
    x = _check_weights(mdp, weights)
    pairs = mdp.state_action_pairs()
    matrix = np.zeros((mdp.n_states, len(pairs)))
    objective = np.zeros(len(pairs))
    for column, (t, a) in enumerate(pairs):
        matrix[:, column] = -spec.lam * mdp.transition[t, a]
        matrix[t, column] += 1.0
        objective[column] = mdp.reward[t, a] * spec.scale
    return LpInstance(
        objective=objective,
        matrix=matrix,
        rhs=x,
        relations=tuple(Relation.EQ for _ in range(mdp.n_states)),
        lower_bounds=tuple(0.0 for _ in pairs),
        sense=Sense.MAXIMIZE,
        variable_names=tuple(f"y[{_pair_name(mdp, s, a)}]" for s, a in pairs),
        constraint_names=tuple(f"flow[{name}]" for name in mdp.state_names),
    )


def policy_from_dual(mdp: Mdp, dual: LpSolution) -> Policy:
    """
    Pick, at every state, the action with the largest positive y*_{s,a}
    (ties to the lowest index).

    Raises:
        SolverError: If the dual solution is not optimal
        PolicyExtractionError: If every y*_{s,.} at some state is <= 1e-9
    """
    if not dual.is_optimal or dual.x is None:
        raise SolverError(f"dual LP status is {dual.status.value}, expected optimal")
    pairs = mdp.state_action_pairs()
    if dual.x.size != len(pairs):
        raise ValueError(f"dual point has {dual.x.size} entries, MDP has {len(pairs)} pairs")
    actions = []
    offset = 0
    for s in range(mdp.n_states):
        count = mdp.action_count(s)
        weights = dual.x[offset:offset + count]
        offset += count
        best = int(np.argmax(weights))
        if weights[best] <= DUAL_POSITIVITY_TOL:
            raise PolicyExtractionError(
                f"no action at state '{mdp.state_names[s]}' has positive dual weight",
                state=mdp.state_names[s],
            )
        actions.append(best)
    return Policy(tuple(actions))


def solve_lp_values(
    mdp: Mdp,
    spec: DiscountSpec,
    weights: Optional[Sequence[float]] = None,
    variant: str = "corrected",
    iteration_cap: int = DEFAULT_ITERATION_CAP,
    feasibility_tol: float = FEASIBILITY_TOL,
    pivot_tol: float = PIVOT_TOL,
) -> Tuple[np.ndarray, Policy, LpSolution, LpSolution]:
    """
    Solve primal and dual LPs and extract values and a policy.

    Returns:
        (primal values v*, policy from the dual, primal solution, dual solution)

    Raises:
        SolverError: If either LP is not solved to optimality
    """
    primal = simplex_solve(
        build_primal_lp(mdp, spec, weights, variant), iteration_cap, feasibility_tol, pivot_tol
    )
    if not primal.is_optimal:
        raise SolverError(f"primal LP ({variant}) ended with status {primal.status.value}")
    dual = simplex_solve(
        build_dual_lp(mdp, spec, weights), iteration_cap, feasibility_tol, pivot_tol
    )
    if not dual.is_optimal:
        raise SolverError(f"dual LP ended with status {dual.status.value}")
    logger.info(
        f"LP solved: primal {primal.objective!r} ({primal.iterations} pivots), "
        f"dual {dual.objective!r} ({dual.iterations} pivots)"
    )
    return primal.x, policy_from_dual(mdp, dual), primal, dual


def _number(value: float) -> str:
    # + 0.0 folds -0.0 into 0.0
    return repr(float(value) + 0.0)


def export_lp(lp: LpInstance) -> str:
    """
    Line-oriented LP text.

    Layout (one item per line):
        <sense> <c_1> ... <c_n>
        bounds <lb_1> ... <lb_n>          ("free" for unbounded variables)
        <name> <a_1> ... <a_n> <rel> <b>  (one line per constraint)
    preceded by a "vars <name_1> ... <name_n>" header.
    """
    lines = ["vars " + " ".join(lp.variable_names)]
    lines.append(lp.sense.value + " " + " ".join(_number(c) for c in lp.objective))
    lines.append("bounds " + " ".join(
        "free" if bound is None else _number(bound) for bound in lp.lower_bounds
    ))
    for i, name in enumerate(lp.constraint_names):
        coefficients = " ".join(_number(a) for a in lp.matrix[i])
        lines.append(f"{name} {coefficients} {lp.relations[i].value} {_number(lp.rhs[i])}")
    return "\n".join(lines) + "\n"
