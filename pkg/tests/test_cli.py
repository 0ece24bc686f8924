import csv
import json

import numpy as np
import pytest
from click.testing import CliRunner

from lewisw.cli import cli
from lewisw.errors import DimensionError, ParseError, ZeroRowError
from lewisw.matrix_io import TRACE_COLUMNS, infer_format, lint_report, load_matrix

TRIANGLE_MM = """%%MatrixMarket matrix array real general
% the triangle instance, column-major
3 2
1
0
1
0
1
1
"""


@pytest.fixture
def write(tmp_path):
    def make(name, text):
        path = tmp_path / name
        path.write_text(text)
        return path

    return make


def write_matrix(path, A):
    np.savetxt(path, A, delimiter=",")
    return path


def test_load_csv(write, triangle):
    A = load_matrix(write("a.csv", "1,0\n0,1\n1,1\n"))
    assert A.shape == (3, 2)
    assert np.array_equal(A, triangle)


def test_load_csv_skips_comments_and_blanks(write, triangle):
    A = load_matrix(write("a.csv", "# triangle\n1,0\n\n0,1\n1, 1\n"))
    assert np.array_equal(A, triangle)


def test_load_csv_zero_row(write):
    with pytest.raises(ZeroRowError) as e:
        load_matrix(write("a.csv", "1,0\n0,0\n1,1\n"))
    assert e.value.row == 2


def test_load_csv_bad_token(write):
    with pytest.raises(ParseError) as e:
        load_matrix(write("a.csv", "1,0\n0,x\n"))
    assert (e.value.line, e.value.column) == (2, 2)


def test_load_csv_ragged(write):
    with pytest.raises(ParseError) as e:
        load_matrix(write("a.csv", "1,0\n0,1,2\n"))
    assert e.value.line == 2


def test_load_csv_wide(write):
    with pytest.raises(DimensionError):
        load_matrix(write("a.csv", "1,0,0\n0,1,0\n"))


def test_load_empty(write):
    with pytest.raises(ParseError):
        load_matrix(write("a.csv", "# nothing\n"))


def test_matrix_market_matches_csv(write):
    mm = load_matrix(write("a.mtx", TRIANGLE_MM))
    assert np.array_equal(mm, load_matrix(write("a.csv", "1,0\n0,1\n1,1\n")))
    assert np.array_equal(load_matrix(write("b.txt", TRIANGLE_MM), "mm"), mm)
    assert np.array_equal(load_matrix(write("c.txt", TRIANGLE_MM), "matrix-market"), mm)


def test_matrix_market_garbage(write):
    with pytest.raises(ParseError):
        load_matrix(write("a.mtx", "not a matrix market file\n"))


@pytest.mark.parametrize("name, fmt", [("a.mtx", "mm"), ("a.MM", "mm"), ("a.csv", "csv"), ("a", "csv")])
def test_infer_format(name, fmt, tmp_path):
    assert infer_format(tmp_path / name) == fmt


def test_solve_matrix_market_format(write, tmp_path):
    source = write("triangle.txt", TRIANGLE_MM)
    out = tmp_path / "report.json"
    result = CliRunner().invoke(
        cli, ["solve", "--input", str(source), "--format", "matrix-market", "-p", "4", "--out", str(out)]
    )
    assert result.exit_code == 0, result.output
    assert np.allclose(json.loads(out.read_text())["weights_definition"], 2 / 3, rtol=1e-6)


def test_solve_identity(tmp_path):
    source = write_matrix(tmp_path / "eye.csv", np.eye(5))
    out, trace = tmp_path / "report.json", tmp_path / "trace.csv"
    result = CliRunner().invoke(
        cli, ["solve", "--input", str(source), "-p", "4", "--eps", "1e-9", "--out", str(out), "--trace", str(trace)]
    )
    assert result.exit_code == 0, result.output
    report = json.loads(out.read_text())
    assert np.allclose(report["weights_definition"], 1.0, atol=1e-8)
    assert report["residuals"]["max_relative_fixed_point_residual"] <= 1e-9
    assert report["trace_path"] == str(trace)
    assert report["config"]["variant"] == "parallel"
    assert report["ellipsoid_containment"] is True
    assert report["wall_ms"] >= 0
    with trace.open(newline="") as f:
        rows = list(csv.reader(f))
    assert tuple(rows[0]) == TRACE_COLUMNS
    assert rows[1][1] == "init"


def test_solve_is_the_default_command(tmp_path):
    source = write_matrix(tmp_path / "eye.csv", np.eye(3))
    out = tmp_path / "report.json"
    result = CliRunner().invoke(cli, ["--input", str(source), "-p", "3", "--out", str(out)])
    assert result.exit_code == 0, result.output
    assert out.exists()


@pytest.mark.parametrize("variant", ["sequential", "one-step", "cohen-peng"])
def test_solve_variants(variant, tmp_path):
    source = write_matrix(tmp_path / "col.csv", np.ones((2, 1)))
    out = tmp_path / "report.json"
    result = CliRunner().invoke(
        cli, ["solve", "--input", str(source), "-p", "3", "--eps", "1e-3", "--variant", variant, "--out", str(out)]
    )
    assert result.exit_code == 0, result.output
    report = json.loads(out.read_text())
    assert np.allclose(report["weights_definition"], 0.5, rtol=1e-3)
    assert report["config"]["variant"] == variant.replace("-", "_")


def test_solve_random_instance(tmp_path, gaussian):
    source = write_matrix(tmp_path / "a.csv", gaussian(40, 5))
    out = tmp_path / "report.json"
    result = CliRunner().invoke(
        cli, ["solve", "--input", str(source), "-p", "8", "--eps", "1e-6", "--out", str(out), "--threads", "2"]
    )
    assert result.exit_code == 0, result.output
    report = json.loads(out.read_text())
    assert report["residuals"]["max_relative_fixed_point_residual"] <= 1e-6
    assert report["config"]["settings"]["workers"] == 2


def test_solve_wide_matrix_is_input_error(tmp_path):
    source = write_matrix(tmp_path / "wide.csv", np.ones((2, 3)))
    result = CliRunner().invoke(cli, ["solve", "--input", str(source), "-p", "4", "--out", str(tmp_path / "r.json")])
    assert result.exit_code == 1
    assert "DimensionError" in result.output


@pytest.mark.parametrize("p", ["2", "1"])
def test_solve_rejects_p(p, tmp_path):
    source = write_matrix(tmp_path / "eye.csv", np.eye(2))
    result = CliRunner().invoke(cli, ["solve", "--input", str(source), "-p", p, "--out", str(tmp_path / "r.json")])
    assert result.exit_code == 1


def test_solve_cohen_peng_needs_small_p(tmp_path):
    source = write_matrix(tmp_path / "eye.csv", np.eye(2))
    result = CliRunner().invoke(
        cli, ["solve", "--input", str(source), "-p", "5", "--variant", "cohen-peng", "--out", str(tmp_path / "r.json")]
    )
    assert result.exit_code == 1
    assert "UnsupportedP" in result.output


def test_solve_missing_input(tmp_path):
    result = CliRunner().invoke(
        cli, ["solve", "--input", str(tmp_path / "nope.csv"), "-p", "4", "--out", str(tmp_path / "r.json")]
    )
    assert result.exit_code == 1


def test_solve_budget_exhausted(tmp_path, gaussian):
    source = write_matrix(tmp_path / "a.csv", gaussian(30, 4))
    out = tmp_path / "report.json"
    result = CliRunner().invoke(
        cli, ["solve", "--input", str(source), "-p", "4", "--max-iters-scale", "1e-9", "--out", str(out)]
    )
    assert result.exit_code == 2
    assert json.loads(out.read_text())["converged"] is False


def test_solve_unwritable_report(tmp_path):
    source = write_matrix(tmp_path / "eye.csv", np.eye(2))
    result = CliRunner().invoke(cli, ["solve", "--input", str(source), "-p", "4", "--out", str(tmp_path)])
    assert result.exit_code == 1
    assert isinstance(result.exception, SystemExit)
    assert "I/O error" in result.output


def test_solve_one_step_over_iteration_limit(tmp_path, gaussian):
    source = write_matrix(tmp_path / "a.csv", gaussian(100, 10))
    out = tmp_path / "report.json"
    result = CliRunner().invoke(
        cli, ["solve", "--input", str(source), "-p", "8", "--variant", "one-step", "--out", str(out)]
    )
    assert result.exit_code == 2
    assert "IterationCapExceeded" in result.output
    assert not out.exists()


def test_config_file(tmp_path, monkeypatch):
    config = tmp_path / "config.toml"
    config.write_text('log_level = "INFO"\n\n[solver]\nfactorization = "qr"\n')
    result = CliRunner().invoke(cli, ["-c", str(config), "config"])
    assert result.exit_code == 0, result.output
    settings = json.loads(result.output)
    assert settings["log_level"] == "INFO"
    assert settings["solver"]["factorization"] == "qr"


def test_invalid_config_file(tmp_path):
    config = tmp_path / "config.toml"
    config.write_text("[solver]\ncap_factor = 0\n")
    result = CliRunner().invoke(cli, ["-c", str(config), "config"])
    assert result.exit_code == 1


def test_lint_report(tmp_path):
    source = write_matrix(tmp_path / "a.csv", np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [1.0, -1.0]]))
    out, trace = tmp_path / "report.json", tmp_path / "trace.csv"
    runner = CliRunner()
    result = runner.invoke(
        cli, ["solve", "--input", str(source), "-p", "4", "--out", str(out), "--trace", str(trace)]
    )
    assert result.exit_code == 0, result.output
    assert lint_report(out) == []
    assert runner.invoke(cli, ["lint-report", str(out)]).exit_code == 0

    with trace.open("a", newline="") as f:
        csv.writer(f).writerow([999, "descent", "1e300", "1.0", "0.0"])
    problems = lint_report(out)
    assert len(problems) == 1
    assert "999" in problems[0]
    assert runner.invoke(cli, ["lint-report", str(out)]).exit_code == 3


def test_lint_report_missing_keys(write):
    report = write("report.json", json.dumps({"weights_optimizer": [1.0], "trace_path": None}))
    problems = lint_report(report)
    assert any("wall_ms" in problem for problem in problems)
    assert not any("weights_optimizer" in problem for problem in problems)


def test_lint_report_trace_without_objective_column(write):
    trace = write("trace.csv", "iter,step_type,rho_max\n0,init,1.5\n")
    report = write("report.json", json.dumps({"trace_path": str(trace)}))
    problems = lint_report(report)
    assert any("lacks column(s) F" in problem for problem in problems)
