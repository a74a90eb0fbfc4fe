"""End-to-end tests of the command line."""

import sys

import pytest

from slantnewton.cli import main
from slantnewton.report.writer import read_records_csv, read_report_json


def run_cli(*args):
    sys.argv = ["slantnewton", *args]
    with pytest.raises(SystemExit) as excinfo:
        main()
    return excinfo.value.code


def test_no_subcommand_shows_help(mock_argv, capsys):
    assert run_cli() == 1
    assert "run" in capsys.readouterr().out


def test_missing_problem_source_is_usage_error(mock_argv, capsys):
    assert run_cli("run", "--n", "8") == 1
    assert "usage:" in capsys.readouterr().err


def test_unknown_variant_is_usage_error(mock_argv):
    assert run_cli("run", "--example", "example1", "--variant", "x") == 1


def test_run_example(mock_argv, tmp_path):
    csv_path = tmp_path / "history.csv"
    json_path = tmp_path / "report.json"
    code = run_cli(
        "run",
        "--example",
        "example1",
        "--n",
        "10",
        "--csv",
        str(csv_path),
        "--json",
        str(json_path),
    )
    assert code == 0
    report = read_report_json(json_path)
    assert report.converged
    assert read_records_csv(csv_path) == report.iterations


def test_solver_override_from_command_line(mock_argv, tmp_path):
    json_path = tmp_path / "report.json"
    code = run_cli(
        "--config.solver.max_newton",
        "1",
        "run",
        "--example",
        "example1",
        "--n",
        "8",
        "--json",
        str(json_path),
    )
    assert code == 2
    assert read_report_json(json_path).config.max_newton == 1


def test_sweep(mock_argv, tmp_path):
    output = tmp_path / "sweep.csv"
    code = run_cli(
        "sweep",
        "--grids",
        "[8,10]",
        "--c1",
        "[0.5]",
        "--output",
        str(output),
    )
    assert code == 0
    assert len(output.read_text().strip().splitlines()) == 3
