import json
from importlib import resources

import jsonschema
import pytest

from berkdyn.cli import main, parse_spec, run
from berkdyn.errors import InputError

SCHEMA = json.loads((resources.files("berkdyn") / "schemas" / "report.schema.json").read_text())
WORKED = ["--field", "padic:3", "--poly", "(z^2 - z)/3"]


def call(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr().out


def call_json(capsys, *argv):
    code, out = call(capsys, *argv)
    doc = json.loads(out)
    jsonschema.validate(doc, SCHEMA)
    return code, doc


# -- parsing -------------------------------------------------------------------


def test_parse_examples():
    cfg = parse_spec(["analyze", *WORKED])
    assert cfg.poly.degree == 2 and cfg.seed == 0 and cfg.output == "json"
    cfg = parse_spec(["grid", "--grid", "fibonacci:depth=40", "--output", "tsv"])
    assert cfg.subcommand == "grid" and cfg.options["grid"] == "fibonacci:depth=40"
    assert parse_spec(["analyze", "--field", "laurent:t", "--poly", "z^2/t"]).field.kind == "laurent"


@pytest.mark.parametrize(
    "argv",
    [
        ["analyze", "--field", "padic:4", "--poly", "z^2"],
        ["analyze", "--field", "padic:3", "--poly", "z^2 + y"],
        ["analyze", "--field", "padic:3", "--poly", "z^2", "--anchor", "1/0"],
        ["analyze", "--field", "padic:3", "--poly", "z^2", "--frobnicate"],
        ["analyze", "--field", "padic:3"],
        ["analyze", "--field", "padic:3", "--poly", "z^2", "--max-iter", "0"],
        ["launch"],
    ],
)
def test_parse_errors(argv):
    with pytest.raises(InputError):
        parse_spec(argv)


# -- reports --------------------------------------------------------------------------


def test_analyze_worked(capsys):
    code, doc = call_json(capsys, "analyze", *WORKED)
    assert code == 0
    assert doc["base_point"] == "xi(0; 0)" and doc["simple"] is False
    assert doc["kappa"] == "0" and doc["Xi_log"] == "1" and doc["tame"] is True


def test_analyze_laurent(capsys):
    code, doc = call_json(capsys, "analyze", "--field", "laurent:t", "--poly", "z^2/t", "--anchor", "0")
    assert code == 0 and doc["R_log"] == "-1"


def test_lyapunov_gauss_tsv(capsys):
    for p in (2, 3, 5):
        code, out = call(capsys, "lyapunov", "--field", f"padic:{p}", "--poly", f"z^{p}", "--xi", "0;0",
                         "--steps", "5", "--output", "tsv")
        lines = out.splitlines()
        assert code == 0 and lines[0].split("\t")[:3] == ["n", "partial", "normalized"]
        assert [ln.split("\t")[2] for ln in lines[1:]] == ["-1"] * 5


def test_lyapunov_point_and_measure(capsys, tmp_path):
    code, doc = call_json(capsys, "lyapunov", *WORKED, "--point", "0", "--steps", "4")
    assert code == 0 and [r["normalized"] for r in doc["sequence"]] == ["1"] * 4
    m = tmp_path / "mu.json"
    m.write_text(json.dumps({"support": ["0;0"], "weights": ["1"]}))
    code, doc = call_json(capsys, "lyapunov", "--field", "padic:3", "--poly", "z^2", "--orbit-measure", str(m))
    assert code == 0 and doc["exponent"] == "0"
    assert all(v["passed"] for v in doc["verdicts"])
    m.write_text("{not json")
    code, doc = call_json(capsys, "lyapunov", "--field", "padic:3", "--poly", "z^2", "--orbit-measure", str(m))
    assert code == 1 and doc["error"] == "invalid_input"


def test_orbit(capsys):
    code, doc = call_json(capsys, "orbit", *WORKED, "--point", "2", "--steps", "3")
    assert code == 0 and doc["escape_time"] == 1
    assert doc["orbit"][1]["point"] == "2/3"


def test_tree_outputs(capsys):
    code, doc = call_json(capsys, "tree", *WORKED, "--point", "0", "--levels", "3")
    assert code == 0 and doc["levels"] == ["xi(0; 0)", "xi(0; -1)", "xi(0; -2)", "xi(0; -3)"]
    code, dot = call(capsys, "tree", *WORKED, "--point", "0", "--levels", "3", "--output", "dot")
    assert dot.startswith("digraph tree {") and 'G1 -> G0 [label="deg 1, len 1"]' in dot
    _, again = call(capsys, "tree", *WORKED, "--point", "0", "--levels", "3", "--output", "dot")
    assert dot == again
    code, tsv = call(capsys, "tree", *WORKED, "--point", "0", "--levels", "2", "--output", "tsv")
    rows = [ln.split("\t") for ln in tsv.splitlines()]
    assert rows[0][:4] == ["level", "point", "logdiam", "rho_from_base"]
    assert [r[3] for r in rows[1:]] == ["0", "1", "2"]


def test_dot_only_for_tree(capsys):
    code, doc = call_json(capsys, "analyze", *WORKED, "--output", "dot")
    assert code == 1


def test_grid_outputs(capsys, tmp_path):
    code, doc = call_json(capsys, "grid", "--grid", "fibonacci:depth=12", "--seeds", "1,2")
    assert code == 0 and doc["gaps"][:4] == ["1", "2", "3/2", "7/4"]
    code, tsv = call(capsys, "grid", "--grid", "fibonacci:depth=12", "--output", "tsv")
    head = tsv.splitlines()[0].split("\t")
    assert head == ["n", "k", "ell", "a", "normalized", "normalized_dec"]
    path = tmp_path / "g.grid"
    path.write_text("q=1 m=2\n1111\n1000\n1000\n")
    code, doc = call_json(capsys, "grid", "--grid", f"file:{path}")
    assert code == 0
    path.write_text("q=1 m=2\n1111\n1100\n1100\n")
    code, doc = call_json(capsys, "grid", "--grid", f"file:{path}")
    assert code == 1 and doc["error"] == "inconsistent_grid"


def test_grid_refusal_is_a_failed_verdict(capsys):
    code, doc = call_json(capsys, "grid", "--grid", "fixture:two_critical")
    assert code == 2
    assert any(v["name"] == "unique_critical_point" and not v["passed"] for v in doc["verdicts"])


def test_budget_exit_code(capsys):
    code, doc = call_json(capsys, "grid", "--grid", "fibonacci:depth=4000")
    assert code == 3 and doc["error"] == "budget_exceeded"
    code, doc = call_json(capsys, "tree", *WORKED, "--point", "0", "--levels", "50", "--max-depth", "10")
    assert code == 3


def test_usage_errors_are_json(capsys):
    code, doc = call_json(capsys, "analyze", "--field", "padic:4", "--poly", "z^2")
    assert code == 1 and doc["error"] == "invalid_input"
    code, doc = call_json(capsys, "tree", *WORKED, "--point", "2", "--levels", "3")
    assert code == 1


def test_verify_small_run(capsys):
    code, doc = call_json(capsys, "verify", "--suite", "bounds", "--count", "6", "--seed", "3")
    assert code == 0 and doc["summary"]["failed"] == 0 and doc["summary"]["total"] > 0


def test_run_returns_text_and_code():
    text, code = run(parse_spec(["analyze", *WORKED]))
    assert code == 0 and text.endswith("\n") and json.loads(text)["command"] == "analyze"


def test_identical_runs_are_byte_identical(capsys):
    argv = ["verify", "--suite", "all", "--count", "5", "--seed", "11"]
    _, a = call(capsys, *argv)
    _, b = call(capsys, *argv)
    assert a == b
