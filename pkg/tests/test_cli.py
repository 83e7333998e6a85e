import io
import json
import math
import subprocess
import sys

import pytest

from lineara import from_tree, parse_program, pretty_print
from lineara.cli import run

SQUARE = "(def square ((x R) ;) (R ;) (mul x x))\n"
MIXED = (
    "(def h ((x R) (y R) ;) (R ;)\n"
    "  (let ((a R) ;) (sin x) (let ((b R) ;) (mul a y) (exp b))))\n"
)
LINEAR = "(def g ((c R) ; (dx R) (dy (tup R R))) (; R (tup R R))\n  (let (; (s R)) (lscale c dx) (ret (; s dy))))\n"


@pytest.fixture
def write(tmp_path):
    def go(text, name="p.lina"):
        f = tmp_path / name
        f.write_text(text)
        return str(f)

    return go


def cli(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run(list(argv), out, err)
    return code, out.getvalue(), err.getvalue()


def test_eval_with_cost(write):
    assert cli("eval", write(SQUARE), "--func", "square", "--args", "3", "--cost") == (0, "9\nwork: 1\n", "")


def test_eval_linear_args(write):
    code, out, _ = cli("eval", write(LINEAR), "--func", "g", "--args", "2", "--lin-args", "5 (1 2)")
    assert code == 0
    assert out.split("\n")[:2] == ["10", "(1 2)"]


def test_grad(write):
    assert cli("grad", write(SQUARE), "--func", "square", "--at", "3") == (0, "6\n", "")
    code, out, _ = cli("grad", write(MIXED), "--func", "h", "--at", "0.5 2")
    lines = [float(v) for v in out.split()]
    a = math.sin(0.5)
    assert code == 0
    assert lines == pytest.approx([math.exp(a * 2) * 2 * math.cos(0.5), math.exp(a * 2) * a], rel=1e-14)


def test_check_reports_signatures(write):
    code, out, _ = cli("check", write(SQUARE + LINEAR))
    assert code == 0
    assert "square: ok (R ;) -> (R ;)  [linear-b]" in out
    assert "g: ok (R ; R (tup R R)) -> (; R (tup R R))  [linear-b]" in out


def test_check_type_error_names_rule(write):
    path = write("(def f (; (dx R)) (; R)\n  (ladd dx dx))\n")
    code, out, err = cli("check", path)
    assert code == 2 and out == ""
    assert err.startswith(f"{path}:1:1: type error: TypeLinPlus")
    assert "used twice" in err


def test_parse_error_location(write):
    path = write("(def f ((x R) ;) (R ;)\n  (mul (sin x) x))\n")
    code, _, err = cli("check", path)
    assert code == 3
    assert err.startswith(f"{path}:2:8: parse error: ANF violation")


@pytest.mark.parametrize(
    "argv",
    [
        ["frobnicate"],
        ["eval"],
        ["eval", "PATH"],
        ["eval", "PATH", "--func", "nope"],
        ["eval", "PATH", "--func", "square", "--args", "(3"],
        ["eval", "PATH", "--func", "square", "--args", "1 2"],
        ["grad", "PATH", "--func", "square"],
        ["check", "/nonexistent/file.lina"],
    ],
)
def test_usage_errors(write, argv):
    path = write(SQUARE)
    code, out, err = cli(*[path if a == "PATH" else a for a in argv])
    assert code == 4 and out == "" and err


def test_transpose_outside_linear_b_is_exit_2(write):
    code, _, err = cli("transpose", write(MIXED), "--func", "h")
    assert code == 2 and "non-linear results" in err


def test_jvp_of_linear_def_is_usage_error(write):
    code, _, err = cli("jvp", write(LINEAR), "--func", "g")
    assert code == 4 and "linear syntax" in err


@pytest.mark.parametrize(
    "argv",
    [
        ["jvp", "--func", "h"],
        ["unzip", "--func", "h"],
        ["unzip", "--func", "h", "--checkpoint"],
        ["transpose", "--func", "g"],
    ],
)
def test_transform_output_rechecks(write, argv):
    path = write(MIXED + LINEAR)
    code, out, _ = cli(argv[0], path, *argv[1:])
    assert code == 0
    again = write(out, "out.lina")
    assert cli("check", again)[0] == 0


def test_structured_emit_round_trips(write):
    path = write(MIXED + LINEAR)
    _, text, _ = cli("unzip", path, "--func", "h")
    _, tree, _ = cli("unzip", path, "--func", "h", "--emit", "structured")
    p = from_tree(json.loads(tree))
    assert p == parse_program(text)
    assert parse_program(pretty_print(p)) == p


@pytest.mark.parametrize("argv", [["--seed", "7"], ["--seed", "7", "--linear"], ["--seed", "3", "--mode", "nl"]])
def test_gen_output_checks(write, argv):
    code, out, _ = cli("gen", *argv)
    assert code == 0
    assert cli("check", write(out))[0] == 0
    assert cli("gen", *argv)[1] == out


def test_gen_linear_is_linear_b(write):
    _, out, _ = cli("gen", "--seed", "5", "--linear")
    _, report, _ = cli("check", write(out))
    f_line = [ln for ln in report.splitlines() if ln.startswith("f:")][0]
    assert "[linear-b]" in f_line and "-> (;" in f_line


def test_pipeline_through_stdin(write):
    # jvp | unzip | transpose | check, the way a shell user would chain them
    path = write(MIXED)
    exe = [sys.executable, "-m", "lineara"]
    step = subprocess.run(exe + ["jvp", path, "--func", "h"], capture_output=True, text=True, check=True)
    for argv in (["unzip", "-", "--func", "h.jvp"], ["transpose", "-", "--func", "h.jvp.lin"], ["check", "-"]):
        step = subprocess.run(exe + argv, input=step.stdout, capture_output=True, text=True)
        assert step.returncode == 0, step.stderr
    assert "h.jvp.lin.T: ok" in step.stdout
