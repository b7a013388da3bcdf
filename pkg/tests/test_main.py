"""End-to-end tests of the deprec-mdp command line."""

import json
import logging

import pytest

from deprec_mdp.config import Config
from deprec_mdp.io_formats import parse_mdp
from deprec_mdp.main import EXIT_OK, EXIT_SOLVER, EXIT_USAGE, EXIT_VALIDATION, main
from deprec_mdp.scenarios import build_scenario

CAR = "car:0.5,0.25,5,7"


@pytest.fixture(autouse=True)
def reset_logging():
    yield
    # main() points the root logger at the captured stderr of the finished test
    logging.basicConfig(handlers=[logging.NullHandler()], level=logging.WARNING, force=True)


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_solve_car(capsys):
    code, out, _ = run(
        capsys, "solve", "--scenario", CAR, "--lambda", "0.5", "--gamma", "0.5",
        "--criterion", "depreciating", "--method", "vi",
    )
    assert code == EXIT_OK
    lines = out.splitlines()
    assert lines[0] == "state,value,action"
    assert lines[1] == "s_d,1.212121212,a_1"


def value_rows(out):
    rows = [line.split(",") for line in out.splitlines()[1:]]
    return [(state, float(value), action) for state, value, action in rows]


@pytest.mark.parametrize("method", ["lp", "brute"])
def test_methods_agree(capsys, method):
    common = ("solve", "--scenario", CAR, "--lambda", "0.8", "--gamma", "0.3", "--digits", "8")
    _, reference, _ = run(capsys, *common)
    code, out, _ = run(capsys, *common, "--method", method)
    assert code == EXIT_OK
    assert out == reference


@pytest.mark.parametrize("scenario", [CAR, "car:1,1,5,3", "cycle:3,4,5", "cycle:-2,0.5"])
@pytest.mark.parametrize("criterion", ["discounted", "depreciating"])
def test_methods_agree_on_every_scenario(capsys, scenario, criterion):
    common = ("solve", "--scenario", scenario, "--criterion", criterion, "--lambda", "0.6")
    if criterion == "depreciating":
        common += ("--gamma", "0.4")
    tables = {}
    for method in ("vi", "lp", "brute"):
        code, out, _ = run(capsys, *common, "--method", method)
        assert code == EXIT_OK
        tables[method] = value_rows(out)
    for method in ("lp", "brute"):
        for (state, value, action), (ref_state, ref_value, ref_action) in zip(
            tables[method], tables["vi"]
        ):
            assert (state, action) == (ref_state, ref_action)
            assert value == pytest.approx(ref_value, abs=1e-5)


def test_lp_variant_alias(capsys):
    common = (
        "solve", "--scenario", CAR, "--lambda", "0.5", "--gamma", "0.5", "--method", "lp",
    )
    code, alias, _ = run(capsys, *common, "--lp-variant", "paper")
    assert code == EXIT_OK
    _, scaled, _ = run(capsys, *common, "--lp-variant", "scaled")
    _, corrected, _ = run(capsys, *common, "--lp-variant", "corrected")
    assert alias == scaled
    assert alias != corrected


def test_save_config(capsys, tmp_path):
    path = tmp_path / "effective.json"
    code, _, _ = run(
        capsys, "validate", "--scenario", CAR, "--digits", "6", "--tol", "1e-8",
        "--save-config", str(path),
    )
    assert code == EXIT_OK
    saved = Config.from_file(str(path))
    assert saved.output_digits == 6
    assert saved.tolerance == 1e-8
    assert saved.to_dict() == json.loads(path.read_text())


def test_solve_average(capsys):
    code, out, _ = run(
        capsys, "solve", "--scenario", CAR, "--criterion", "average-depreciating", "--gamma", "0.5"
    )
    assert code == EXIT_OK
    assert out.splitlines()[1] == "s_d,2.5,a_1"


def test_export_lp(capsys, tmp_path):
    path = tmp_path / "primal.lp"
    code, _, _ = run(
        capsys, "solve", "--scenario", CAR, "--lambda", "0.5", "--gamma", "0.5",
        "--method", "lp", "--export-lp", str(path),
    )
    assert code == EXIT_OK
    assert path.read_text().startswith("vars v[s_d]")


def test_evaluate(capsys):
    code, out, _ = run(
        capsys, "evaluate", "--scenario", CAR, "--lambda", "0.5",
        "--criterion", "discounted", "--policy", "s_d:a_2",
    )
    assert code == EXIT_OK
    assert out.splitlines()[1] == "s_d,0.7368421053,a_2"


def test_validate(capsys, tmp_path, car_document):
    path = tmp_path / "car.mdp"
    path.write_text(car_document)
    code, out, _ = run(capsys, "validate", "--input", str(path))
    assert code == EXIT_OK
    assert out == "valid (car dealership): 5 states, 6 state-action pairs\n"


def test_validate_rejects_bad_row(capsys, tmp_path, car_document):
    path = tmp_path / "bad.mdp"
    path.write_text(car_document.replace("transition s_1 a s_1 1/2", "transition s_1 a s_1 0.4"))
    code, out, err = run(capsys, "validate", "--input", str(path))
    assert code == EXIT_VALIDATION
    assert out == ""
    assert "line" in err and "row" in err


@pytest.mark.parametrize(
    "argv",
    [
        ("validate", "--scenario", "boat"),
        ("validate", "--input", "/nonexistent/file.mdp"),
        ("solve", "--scenario", CAR),
        ("solve", "--scenario", CAR, "--lambda", "0.5"),
        ("solve", "--scenario", CAR, "--lambda", "1.5"),
        ("solve", "--scenario", CAR, "--criterion", "average", "--method", "lp"),
        ("solve", "--scenario", CAR, "--criterion", "average-depreciating"),
        ("evaluate", "--scenario", CAR, "--lambda", "0.5", "--policy", "s_1:a"),
        ("sweep", "--scenario", CAR, "--lambda", "0.5", "--gammas", "0.5,x"),
        ("qlearn", "--scenario", CAR, "--lambda", "0.5", "--rate", "constant"),
    ],
)
def test_usage_errors(capsys, argv):
    code, out, err = run(capsys, *argv)
    assert code == EXIT_USAGE
    assert out == ""
    assert "error" in err


def test_argparse_errors_exit_with_usage_code(capsys):
    with pytest.raises(SystemExit) as excinfo:
        main(["solve", "--scenario", CAR, "--input", "x.mdp"])
    assert excinfo.value.code == EXIT_USAGE


def test_multichain_is_a_solver_error(capsys, tmp_path):
    path = tmp_path / "traps.mdp"
    path.write_text(
        "format deprec-mdp/1\n"
        "state p left right\n"
        "state q stay\n"
        "state r stay\n"
        "transition p left q 1\n"
        "transition p right r 1\n"
        "transition q stay q 1\n"
        "transition r stay r 1\n"
        "reward q stay 1\n"
    )
    code, _, err = run(capsys, "solve", "--input", str(path), "--criterion", "average")
    assert code == EXIT_SOLVER
    assert "multichain" in err


def test_qlearn_is_deterministic(capsys):
    argv = (
        "qlearn", "--scenario", CAR, "--lambda", "0.5", "--gamma", "0.5",
        "--steps", "3000", "--seed", "7",
    )
    first = run(capsys, *argv)
    second = run(capsys, *argv)
    assert first == second
    assert first[1].splitlines()[0] == "step,sup_gap,epsilon,alpha_example"


def test_qlearn_summary(capsys, tmp_path):
    trace = tmp_path / "trace.csv"
    code, out, _ = run(
        capsys, "qlearn", "--scenario", CAR, "--lambda", "0.5", "--gamma", "0.5",
        "--steps", "2000", "--output", str(trace),
    )
    assert code == EXIT_OK
    assert trace.read_text().startswith("step,sup_gap")
    lines = out.splitlines()
    assert lines[0] == "state,action,q,exact,visits"
    assert lines[-2].startswith("sup_gap,")
    assert lines[-1].startswith("greedy_policy,s_d:")


def test_sweep(capsys, tmp_path):
    svg = tmp_path / "sweep.svg"
    code, out, _ = run(capsys, "sweep", "--scenario", CAR, "--lambda", "0.5", "--svg", str(svg))
    assert code == EXIT_OK
    lines = out.splitlines()
    assert len(lines) == 100
    assert lines[1].startswith("0.01,")
    assert "<svg" in svg.read_text()
    _, again, _ = run(capsys, "sweep", "--scenario", CAR, "--lambda", "0.5", "--workers", "1")
    assert again == out


def test_tauberian(capsys):
    code, out, _ = run(
        capsys, "tauberian", "--scenario", CAR, "--gamma", "0.5", "--lambdas", "0.9,0.99,0.999"
    )
    assert code == EXIT_OK
    lines = out.splitlines()
    assert lines[0] == "lambda,gap,s_d,s_1,t_1,s_2,t_2,policy"
    assert len(lines) == 5
    limit = lines[-1].split(",")
    assert limit[0] == "limit"
    assert float(limit[2]) == pytest.approx(2.5, abs=1e-8)


def test_export_round_trip(capsys, tmp_path):
    path = tmp_path / "car.mdp"
    code, _, _ = run(capsys, "export", "--scenario", CAR, "--output", str(path))
    assert code == EXIT_OK
    assert parse_mdp(path.read_text()) == build_scenario(CAR)


def test_config_file(capsys, tmp_path):
    config = tmp_path / "config.json"
    config.write_text(json.dumps({"output": {"digits": 4}}))
    code, out, _ = run(
        capsys, "solve", "--scenario", CAR, "--lambda", "0.5", "--gamma", "0.5",
        "--config", str(config),
    )
    assert code == EXIT_OK
    assert out.splitlines()[1] == "s_d,1.212,a_1"

    config.write_text(json.dumps({"solver": {"tolerance": -1}}))
    code, _, err = run(capsys, "validate", "--scenario", CAR, "--config", str(config))
    assert code == EXIT_USAGE
    assert "configuration" in err
