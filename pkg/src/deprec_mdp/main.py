"""
deprec-mdp Command Line
Version: 1.0.0
Created: 2026-10-18

Main entry point wiring the toolkit: MDP documents and built-in scenarios
in, value tables, policies, learning traces and sweep charts out.

Features:
- Subcommands: validate, solve, evaluate, qlearn, sweep, tauberian, export
- Configuration management (file + CLI override)
- Structured logging to stderr or file; stdout carries results only
- Exit codes: 0 success, 1 usage error, 2 validation error, 3 solver error
"""

import argparse
import csv
import io
import logging
import sys
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from deprec_mdp import __version__
from deprec_mdp.charts import write_sweep_svg
from deprec_mdp.config import Config
from deprec_mdp.errors import SolverError, ValidationError
from deprec_mdp.exact_solver import (
    DEFAULT_LAMBDA_GRID,
    Criterion,
    ValueVector,
    brute_force_optimal,
    gamma_sweep,
    policy_evaluation,
    policy_gain,
    solve_average,
    solve_average_depreciating,
    solve_discounted_depreciating,
    tauberian_probe,
    value_iteration_discounted,
)
from deprec_mdp.io_formats import parse_mdp, serialize_mdp, write_sweep_csv
from deprec_mdp.lp_solver import (
    LP_VARIANTS,
    VARIANT_ALIASES,
    build_primal_lp,
    canonical_variant,
    export_lp,
    solve_lp_values,
)
from deprec_mdp.mdp_core import Mdp, Policy, parse_policy, require_valid
from deprec_mdp.payoff import DiscountSpec, check_open_gamma
from deprec_mdp.qlearning import (
    ExplorationSchedule,
    LearningRateSchedule,
    exact_q_table,
    run_q_learning,
    write_trace_csv,
)
from deprec_mdp.rng import RngState
from deprec_mdp.scenarios import build_scenario

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VALIDATION = 2
EXIT_SOLVER = 3

CRITERIA: Dict[str, Criterion] = {
    "discounted": Criterion.DISCOUNTED,
    "depreciating": Criterion.DISCOUNTED_DEPRECIATING,
    "average": Criterion.AVERAGE,
    "average-depreciating": Criterion.AVERAGE_DEPRECIATING,
}


class UsageError(Exception):
    """Flags that parse but cannot be combined or are out of range."""


class _Parser(argparse.ArgumentParser):
    """ArgumentParser that exits with EXIT_USAGE instead of 2."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def setup_logging(config: Config) -> None:
    """
    Configure logging based on configuration settings.

    Args:
        config: Configuration object with log_level and log_file settings
    """
    numeric_level = getattr(logging, config.log_level.upper(), logging.WARNING)

    log_format = "%(asctime)s [%(levelname)s] %(name)s: %(message)s"
    date_format = "%Y-%m-%d %H:%M:%S"

    handlers = []

    if config.log_file:
        file_handler = logging.FileHandler(config.log_file)
        file_handler.setFormatter(logging.Formatter(log_format, date_format))
        handlers.append(file_handler)
    else:
        # Console logging (stderr); stdout is reserved for results
        console_handler = logging.StreamHandler(sys.stderr)
        console_handler.setFormatter(logging.Formatter(log_format, date_format))
        handlers.append(console_handler)

    logging.basicConfig(
        level=numeric_level,
        handlers=handlers,
        force=True
    )

    logger.info(f"Logging configured: level={config.log_level}, file={config.log_file or 'stderr'}")


def _common_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)

    source = common.add_mutually_exclusive_group(required=True)
    source.add_argument(
        "--scenario",
        type=str,
        metavar="SELECTOR",
        help="Built-in scenario: car[:rho1,rho2,r1,r2] or cycle:r1,r2,..."
    )
    source.add_argument(
        "--input",
        type=str,
        metavar="PATH",
        help="MDP document (format deprec-mdp/1)"
    )

    common.add_argument("--lambda", dest="lam", type=float, metavar="L", help="Discount factor in (0, 1)")
    common.add_argument("--gamma", type=float, metavar="G", help="Depreciation factor in [0, 1)")
    common.add_argument(
        "--criterion",
        choices=sorted(CRITERIA),
        default="depreciating",
        help="Payoff criterion (default: depreciating)"
    )
    common.add_argument("--tol", type=float, metavar="EPS", help="Solver tolerance (default: 1e-10)")
    common.add_argument("--max-iterations", type=int, metavar="N", help="Solver iteration cap")
    common.add_argument("--seed", type=int, default=42, help="Random seed (default: 42)")
    common.add_argument("--output", type=str, metavar="PATH", help="Write results here instead of stdout")
    common.add_argument("--digits", type=int, metavar="N", help="Significant digits of printed values (default: 10)")

    # Configuration
    common.add_argument(
        "--config",
        type=str,
        metavar="PATH",
        help="Path to configuration file (TOML or JSON)"
    )
    common.add_argument(
        "--save-config",
        type=str,
        metavar="PATH",
        help="Write the effective configuration (file + flags) as JSON"
    )

    # Logging settings
    common.add_argument(
        "--log-level",
        type=str,
        choices=["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"],
        default=None,
        help="Logging level (default: WARNING)"
    )
    common.add_argument(
        "--log-file",
        type=str,
        metavar="PATH",
        help="Log to file instead of stderr"
    )
    return common


def build_parser() -> argparse.ArgumentParser:
    """
    Build the command-line parser.

    Returns:
        Parser whose namespaces carry a `handler` attribute
    """
    parser = _Parser(
        prog="deprec-mdp",
        description="Discounted and average depreciating payoffs for finite MDPs",
        epilog="Example: deprec-mdp solve --scenario car:0.5,0.25,5,7 --lambda 0.5 --gamma 0.5"
    )
    parser.add_argument(
        "--version",
        action="version",
        version=f"%(prog)s {__version__}"
    )
    common = _common_parser()
    commands = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    validate = commands.add_parser("validate", parents=[common], help="Check an MDP and report violations")
    validate.set_defaults(handler=cmd_validate)

    solve = commands.add_parser("solve", parents=[common], help="Optimal values and a greedy policy")
    solve.add_argument("--method", choices=["vi", "lp", "brute"], default="vi", help="Solver (default: vi)")
    solve.add_argument(
        "--lp-variant",
        choices=[*LP_VARIANTS, *VARIANT_ALIASES],
        default="corrected",
        help="Primal LP form (paper is an alias of scaled)"
    )
    solve.add_argument("--export-lp", type=str, metavar="PATH", help="Also write the primal LP in text form")
    solve.set_defaults(handler=cmd_solve)

    evaluate = commands.add_parser("evaluate", parents=[common], help="Value of a fixed policy")
    evaluate.add_argument("--policy", required=True, metavar="S:A,...", help="Policy as state:action pairs")
    evaluate.set_defaults(handler=cmd_evaluate)

    qlearn = commands.add_parser("qlearn", parents=[common], help="Depreciating Q-learning run")
    qlearn.add_argument("--steps", type=int, default=2_000_000, help="Number of updates (default: 2000000)")
    qlearn.add_argument("--rate", choices=["harmonic", "polynomial", "constant"], default="harmonic")
    qlearn.add_argument("--rate-c", type=float, default=1.0, help="Rate numerator c")
    qlearn.add_argument("--rate-n0", type=float, default=0.0, help="Rate offset n0")
    qlearn.add_argument("--rate-power", type=float, default=None, help="Rate exponent p in (0.5, 1]")
    qlearn.add_argument("--counting", choices=["visit", "global"], default="visit")
    qlearn.add_argument("--nonconvergent", action="store_true", help="Allow a constant learning rate")
    qlearn.add_argument("--epsilon0", type=float, default=1.0)
    qlearn.add_argument("--epsilon-decay", type=float, default=0.99999)
    qlearn.add_argument("--epsilon-min", type=float, default=0.05)
    qlearn.add_argument("--rule", choices=["depreciating", "standard"], default="depreciating")
    qlearn.add_argument("--optimistic", action="store_true", help="Optimistic initial Q values")
    qlearn.set_defaults(handler=cmd_qlearn)

    sweep = commands.add_parser("sweep", parents=[common], help="Values across a gamma grid")
    sweep.add_argument("--points", type=int, default=99, help="Grid gamma = k/(N+1), k = 1..N (default: 99)")
    sweep.add_argument("--gammas", type=str, metavar="G,G,...", help="Explicit gamma grid")
    sweep.add_argument("--svg", type=str, metavar="PATH", help="Also write an SVG line chart")
    sweep.add_argument("--workers", type=int, default=None, help="Worker threads (default: 4)")
    sweep.set_defaults(handler=cmd_sweep)

    tauberian = commands.add_parser("tauberian", parents=[common], help="(1-lambda) V_lambda^gamma against V^gamma")
    tauberian.add_argument("--lambdas", type=str, metavar="L,L,...", help="Lambda grid (default: 0.9,0.99,0.999,0.9999)")
    tauberian.set_defaults(handler=cmd_tauberian)

    export = commands.add_parser("export", parents=[common], help="Write the MDP as a document")
    export.set_defaults(handler=cmd_export)
    return parser


def _floats(text: str, flag: str) -> List[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise UsageError(f"{flag} expects comma-separated numbers, got '{text}'") from None


def load_mdp(args: argparse.Namespace) -> Mdp:
    """
    Load the MDP named by --scenario or --input.

    Raises:
        UsageError: If the scenario selector is invalid or the file is unreadable
        ParseError: If the document is malformed
    """
    if args.scenario:
        try:
            return build_scenario(args.scenario)
        except ValueError as e:
            raise UsageError(str(e)) from e
    try:
        text = Path(args.input).read_text(encoding="utf-8")
    except OSError as e:
        raise UsageError(f"cannot read {args.input}: {e}") from e
    return parse_mdp(text)


def _emit(text: str, path: Optional[str]) -> None:
    if path:
        Path(path).write_text(text, encoding="utf-8")
        logger.info(f"Output written to {path}")
    else:
        sys.stdout.write(text)


def _fmt(value: float, digits: int) -> str:
    return f"{value:.{digits}g}"


def _csv(rows: Sequence[Sequence[str]]) -> str:
    buffer = io.StringIO()
    csv.writer(buffer, lineterminator="\n").writerows(rows)
    return buffer.getvalue()


def _discount_spec(args: argparse.Namespace, criterion: Criterion) -> DiscountSpec:
    if args.lam is None:
        raise UsageError(f"--lambda is required for criterion {criterion.value}")
    if criterion is Criterion.DISCOUNTED_DEPRECIATING and args.gamma is None:
        raise UsageError(
            "--gamma is required for criterion depreciating (use --criterion discounted for gamma = 0)"
        )
    gamma = args.gamma if criterion is Criterion.DISCOUNTED_DEPRECIATING else 0.0
    if criterion is Criterion.DISCOUNTED and args.gamma:
        logger.warning("--gamma is ignored by the discounted criterion")
    try:
        return DiscountSpec(args.lam, gamma)
    except ValueError as e:
        raise UsageError(str(e)) from e


def _average_gamma(args: argparse.Namespace) -> float:
    if args.gamma is None:
        raise UsageError("--gamma is required for criterion average-depreciating")
    try:
        check_open_gamma(args.gamma)
    except ValueError as e:
        raise UsageError(str(e)) from e
    return args.gamma


def _value_table(mdp: Mdp, values: ValueVector, policy: Optional[Policy], digits: int) -> str:
    header = ["state", "value"] + (["action"] if policy is not None else [])
    rows = [header]
    for s, name in enumerate(mdp.state_names):
        row = [name, _fmt(values[s], digits)]
        if policy is not None:
            row.append(mdp.action_names[s][policy.action_of[s]])
        rows.append(row)
    return _csv(rows)


def cmd_validate(args: argparse.Namespace, config: Config) -> int:
    """Report whether the MDP is valid; parse failures propagate as exit 2."""
    mdp = load_mdp(args)
    require_valid(mdp)
    pairs = len(mdp.state_action_pairs())
    title = f" ({mdp.title})" if mdp.title else ""
    _emit(f"valid{title}: {mdp.n_states} states, {pairs} state-action pairs\n", args.output)
    return EXIT_OK


def _solve_discounted(args, config, mdp, criterion, spec):
    if args.method == "vi":
        if criterion is Criterion.DISCOUNTED:
            values, report = value_iteration_discounted(mdp, spec.lam, config.tolerance, config.max_iterations)
        else:
            values, report = solve_discounted_depreciating(mdp, spec, config.tolerance, config.max_iterations)
            logger.info(f"Scaling identity discrepancy: {report.scaling_discrepancy}")
        return values, report.greedy_policy
    if args.method == "lp":
        if canonical_variant(args.lp_variant) == "scaled":
            logger.warning("The 'scaled' LP variant does not reduce to the Bellman equation; values will differ from VI")
        v, policy, primal, dual = solve_lp_values(
            mdp, spec, None, args.lp_variant, config.lp_iteration_cap,
            config.feasibility_tol, config.pivot_tol,
        )
        logger.info(f"LP objectives: primal {primal.objective!r}, dual {dual.objective!r}")
        gamma = spec.gamma if criterion is Criterion.DISCOUNTED_DEPRECIATING else None
        return ValueVector(v, criterion, spec.lam, gamma), policy
    return brute_force_optimal(mdp, spec, criterion, config.enumeration_cap)


def _solve_average(args, config, mdp, criterion):
    if args.method == "lp":
        raise UsageError("--method lp supports the discounted criteria only")
    gamma = _average_gamma(args) if criterion is Criterion.AVERAGE_DEPRECIATING else None
    if args.method == "brute":
        return brute_force_optimal(mdp, None, criterion, config.enumeration_cap, gamma=gamma)
    if criterion is Criterion.AVERAGE:
        gain, report = solve_average(
            mdp, config.tolerance, config.max_iterations, config.aperiodicity, config.unichain_check_cap
        )
        return ValueVector(np.full(mdp.n_states, gain), Criterion.AVERAGE), report.greedy_policy
    values, report = solve_average_depreciating(
        mdp, gamma, config.tolerance, config.max_iterations, config.aperiodicity, config.unichain_check_cap
    )
    return values, report.greedy_policy


def cmd_solve(args: argparse.Namespace, config: Config) -> int:
    """Per-state optimal values and a greedy policy for the chosen criterion and method."""
    mdp = load_mdp(args)
    criterion = CRITERIA[args.criterion]
    if criterion.is_average:
        values, policy = _solve_average(args, config, mdp, criterion)
    else:
        spec = _discount_spec(args, criterion)
        if args.export_lp:
            Path(args.export_lp).write_text(export_lp(build_primal_lp(mdp, spec, None, args.lp_variant)))
            logger.info(f"Primal LP written to {args.export_lp}")
        values, policy = _solve_discounted(args, config, mdp, criterion, spec)
    _emit(_value_table(mdp, values, policy, config.output_digits), args.output)
    return EXIT_OK


def cmd_evaluate(args: argparse.Namespace, config: Config) -> int:
    """Value of the policy given by --policy."""
    mdp = load_mdp(args)
    criterion = CRITERIA[args.criterion]
    try:
        policy = parse_policy(mdp, args.policy)
    except (ValueError, KeyError) as e:
        raise UsageError(e.args[0] if e.args else str(e)) from e
    if criterion is Criterion.AVERAGE:
        values = ValueVector(np.full(mdp.n_states, policy_gain(mdp, policy)), criterion)
    elif criterion is Criterion.AVERAGE_DEPRECIATING:
        gamma = _average_gamma(args)
        gain = policy_gain(mdp, policy) / (1.0 - gamma)
        values = ValueVector(np.full(mdp.n_states, gain), criterion, gamma=gamma)
    else:
        values = policy_evaluation(mdp, policy, _discount_spec(args, criterion), criterion)
    _emit(_value_table(mdp, values, policy, config.output_digits), args.output)
    return EXIT_OK


def cmd_qlearn(args: argparse.Namespace, config: Config) -> int:
    """Run Q-learning; the trace CSV goes to --output (or stdout)."""
    mdp = load_mdp(args)
    if args.lam is None:
        raise UsageError("--lambda is required for qlearn")
    try:
        spec = DiscountSpec(args.lam, args.gamma or 0.0)
        power = args.rate_power if args.rate_power is not None else 1.0
        lr = LearningRateSchedule(
            args.rate, args.rate_c, args.rate_n0, power, args.counting, not args.nonconvergent
        )
        explore = ExplorationSchedule(args.epsilon0, args.epsilon_decay, args.epsilon_min)
    except ValueError as e:
        raise UsageError(str(e)) from e

    # the standard rule learns the plain discounted Q-values
    target_spec = spec if args.rule == "depreciating" else DiscountSpec(spec.lam, 0.0)
    exact, _ = solve_discounted_depreciating(mdp, target_spec, config.tolerance, config.max_iterations)
    reference = exact_q_table(mdp, target_spec, exact)
    table, report = run_q_learning(
        mdp, spec, lr, explore, args.steps, RngState(args.seed), reference,
        rule=args.rule,
        optimistic=args.optimistic,
        restart_interval=config.restart_interval,
        trace_interval=config.trace_interval,
    )
    trace = write_trace_csv(report)
    if not args.output:
        sys.stdout.write(trace)
        return EXIT_OK

    _emit(trace, args.output)
    digits = config.output_digits
    rows = [["state", "action", "q", "exact", "visits"]]
    for s, a in mdp.state_action_pairs():
        rows.append([
            mdp.state_names[s],
            mdp.action_names[s][a],
            _fmt(table.values[s, a], digits),
            _fmt(reference.values[s, a], digits),
            str(int(table.visits[s, a])),
        ])
    summary = _csv(rows)
    summary += f"sup_gap,{_fmt(report.sup_gap, digits)}\n"
    summary += f"greedy_policy,{report.greedy_policy.describe(mdp)}\n"
    sys.stdout.write(summary)
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace, config: Config) -> int:
    """V_lambda^gamma over a gamma grid as CSV, optionally with an SVG chart."""
    mdp = load_mdp(args)
    if args.lam is None:
        raise UsageError("--lambda is required for sweep")
    if args.gammas:
        gammas = _floats(args.gammas, "--gammas")
    else:
        if args.points < 1:
            raise UsageError(f"--points must be at least 1, got {args.points}")
        gammas = [k / (args.points + 1) for k in range(1, args.points + 1)]
    try:
        DiscountSpec(args.lam)
    except ValueError as e:
        raise UsageError(str(e)) from e
    rows = gamma_sweep(mdp, args.lam, gammas, config.tolerance, config.sweep_workers)
    _emit(write_sweep_csv(rows, mdp.state_names), args.output)
    if args.svg:
        title = f"{mdp.title or 'MDP'}, lambda = {args.lam:g}"
        write_sweep_svg(rows, mdp.state_names, args.svg, title=title)
    return EXIT_OK


def cmd_tauberian(args: argparse.Namespace, config: Config) -> int:
    """Tabulate (1-lambda) V_lambda^gamma along a lambda grid against V^gamma."""
    mdp = load_mdp(args)
    gamma = _average_gamma(args)
    grid = _floats(args.lambdas, "--lambdas") if args.lambdas else list(DEFAULT_LAMBDA_GRID)
    table = tauberian_probe(
        mdp, gamma, grid, config.tolerance, config.aperiodicity, config.unichain_check_cap
    )
    digits = config.output_digits
    rows = [["lambda", "gap", *mdp.state_names, "policy"]]
    for row in table.rows:
        rows.append([
            repr(row.lam),
            _fmt(row.gap, digits),
            *(_fmt(v, digits) for v in row.scaled_values),
            row.greedy_policy.describe(mdp),
        ])
    stable = table.stable_policy
    rows.append([
        "limit",
        "",
        *(_fmt(v, digits) for v in table.reference.values),
        stable.describe(mdp) if stable is not None else "",
    ])
    _emit(_csv(rows), args.output)
    return EXIT_OK


def cmd_export(args: argparse.Namespace, config: Config) -> int:
    """Serialize the MDP as a deprec-mdp/1 document."""
    _emit(serialize_mdp(load_mdp(args)), args.output)
    return EXIT_OK


def _fail(code: int, message: str) -> int:
    print(f"deprec-mdp: error: {message}", file=sys.stderr)
    return code


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Main entry point.

    Args:
        argv: arguments without the program name (default: sys.argv[1:])

    Returns:
        Process exit code
    """
    parser = build_parser()
    args = parser.parse_args(argv)

    try:
        config = Config.from_args_and_file(args)
    except (ValueError, FileNotFoundError) as e:
        return _fail(EXIT_USAGE, f"configuration: {e}")

    setup_logging(config)
    logger.debug(str(config))

    handler: Callable[[argparse.Namespace, Config], int] = args.handler
    try:
        if args.save_config:
            config.save(args.save_config)
        return handler(args, config)
    except UsageError as e:
        return _fail(EXIT_USAGE, str(e))
    except ValidationError as e:
        return _fail(EXIT_VALIDATION, str(e))
    except SolverError as e:
        return _fail(EXIT_SOLVER, str(e))
    except ValueError as e:
        # out-of-range flag values caught by the library's own checks
        return _fail(EXIT_USAGE, str(e))
    except OSError as e:
        return _fail(EXIT_USAGE, str(e))


if __name__ == "__main__":
    sys.exit(main())
