import json
import subprocess
import sys

import pytest

from algebroid_fl import example as ex
from algebroid_fl.cli import (
    EXIT_ALGORITHM,
    EXIT_CONDITIONS,
    EXIT_INPUT,
    EXIT_OK,
    example_file,
    main,
)
from algebroid_fl.geometry import PolyMap, compose
from algebroid_fl.sysfile import InputError, loads

PHI_MAP_FILE = """vars: x1, x2, x3
map:
  x1 - x1^2 - x2 - x3^2
  x1^2 + x1 + x3^2 + x2
  x3^4 + 2*x2*x3^2 + x3 + x2^2
"""


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return str(p)


def run_json(argv, capsys):
    code = main(argv + ["--json", "-"])
    out = capsys.readouterr().out
    return code, json.loads(out)


@pytest.fixture
def example_path(tmp_path):
    return write(tmp_path, "example.sys", example_file().dumps())


@pytest.fixture
def bare_example_path(tmp_path):
    return write(tmp_path, "bare.sys", example_file(hints=False).dumps())


# -- check ----------------------------------------------------------------------------


def test_check_example(example_path, capsys):
    code, report = run_json(["check", example_path], capsys)
    assert code == EXIT_OK
    assert report["verdicts"]["classical"]["rank"] == 3
    assert report["verdicts"]["classical"]["involutive"] is True


def test_check_constant_fields(tmp_path, capsys):
    path = write(tmp_path, "const.sys", "vars: x1, x2\nf:\n  1\n  0\ng:\n  1\n  0\n")
    code, report = run_json(["check", path], capsys)
    assert code == EXIT_CONDITIONS
    assert report["verdicts"]["classical"]["accessible"] is False


def test_malformed_expression_reports_position(tmp_path, capsys):
    path = write(tmp_path, "bad.sys", "vars: x1, x2\nf:\n  x2 + * x1\n  0\ng:\n  0\n  1\n")
    assert main(["check", path]) == EXIT_INPUT
    err = capsys.readouterr().err
    assert "line 3" in err and "column" in err


def test_dimension_mismatch_is_input_error(tmp_path, capsys):
    path = write(tmp_path, "dim.sys", "vars: x1, x2\nf:\n  x2\ng:\n  0\n  1\n")
    assert main(["check", path]) == EXIT_INPUT


def test_missing_file_is_input_error(tmp_path, capsys):
    assert main(["check", str(tmp_path / "absent.sys")]) == EXIT_INPUT


# -- linearize ----------------------------------------------------------------------


def test_linearize_algebroid2(example_path, capsys):
    code, report = run_json(["linearize", example_path, "--method", "algebroid2"], capsys)
    assert code == EXIT_OK
    trace = report["traces"]["algebroid2"]
    assert trace["y"] == str(ex.X.parse(ex.Y))
    assert trace["records"][1]["g"] == [str(ex.X.parse(c)) for c in ex.G1]
    assert trace["records"][0]["nu"] == [str(ex.X.parse(c)) for c in ex.NU0]
    assert report["output"]["relative_degree"] == 3
    assert report["verdicts"]["exactness"] is True


def test_linearize_both_agree(example_path, capsys):
    code, report = run_json(["linearize", example_path, "--method", "both"], capsys)
    assert code == EXIT_OK
    assert report["verdicts"]["outputs_agree"] is True
    assert report["output"]["algebroid1"]["y"] == report["output"]["algebroid2"]["y"] == str(ex.X.parse(ex.Y))
    assert report["output"]["algebroid2"]["jacobian_determinant"] == "2"


def test_linearize_without_hints(bare_example_path, capsys):
    # the coordinate-form heuristic succeeds at every iteration, so no hint is needed
    code, report = run_json(["linearize", bare_example_path, "--method", "both"], capsys)
    assert code == EXIT_OK
    omegas = [r["omega"] for r in report["traces"]["algebroid2"]["records"]]
    assert omegas == [["0", "0", "1"], ["1", "0", "0"], ["0", "1", "0"]]
    assert report["output"]["y"] == "x1^2 + x3^2 - x1 + x2"


def test_linearize_conditions_fail(tmp_path, capsys):
    path = write(tmp_path, "ni.sys", "vars: x1, x2, x3\nf:\n  2\n  1\n  -2*x3 - 1\ng:\n  2*x3\n  -2\n  -2*x3 - 3\n")
    assert main(["linearize", path]) == EXIT_CONDITIONS
    capsys.readouterr()
    code, report = run_json(["linearize", path, "--skip-check"], capsys)
    assert code == EXIT_ALGORITHM
    assert "NotExact" in report["error"]


def test_linearize_heuristic_exhausted_names_iteration(tmp_path, capsys):
    # g1 has no constant component and no exact ansatz of degree <= 2
    path = write(tmp_path, "he.sys", "vars: x1, x2, x3\nf:\n  -x3 - 1\n  3/2\n  -2*x3\ng:\n  -1\n  3*x2 - 3\n  2*x2\n")
    code, report = run_json(["linearize", path, "--skip-check", "--max-ansatz-degree", "2"], capsys)
    assert code == EXIT_ALGORITHM
    assert "HeuristicExhausted (iteration 1)" in report["error"]


def test_linearize_rejects_bad_degree(example_path, capsys):
    assert main(["linearize", example_path, "--max-ansatz-degree", "0"]) == EXIT_INPUT


# -- invert-map -----------------------------------------------------------------------


def test_invert_output_row_map(tmp_path, capsys):
    code, report = run_json(["invert-map", write(tmp_path, "phi.sys", PHI_MAP_FILE)], capsys)
    assert code == EXIT_OK
    assert report["output"]["jacobian_determinant"] == "2"
    assert report["verdicts"]["round_trip"] is True
    # independent route: the row map is swap ∘ Ψ ∘ Φ0, so its inverse is Φ0^{-1} ∘ Ψ^{-1} ∘ swap
    Z = ex.Z
    phi0_inv = PolyMap.parse(Z, ex.PHI0_INV, ex.X)
    psi_inv = PolyMap.parse(Z, [c.replace("w", "z") for c in ex.PHI1_INV] + ["z3"], Z)
    swap = PolyMap.parse(Z, ["z2", "z1", "z3"], Z)
    expected = compose(phi0_inv, compose(psi_inv, swap))
    assert report["output"]["inverse"] == [str(c) for c in expected.components]


def test_invert_identity(tmp_path, capsys):
    path = write(tmp_path, "id.sys", "vars: x1, x2\nmap:\n  x1\n  x2\n")
    code, report = run_json(["invert-map", path], capsys)
    assert code == EXIT_OK
    assert report["output"]["inverse"] == ["z1", "z2"]
    assert report["output"]["jacobian_determinant"] == "1"


def test_invert_non_injective(tmp_path, capsys):
    path = write(tmp_path, "sq.sys", "vars: x1, x2\nmap:\n  x1^2\n  x2\n")
    code, report = run_json(["invert-map", path], capsys)
    assert code == EXIT_ALGORITHM
    assert "InversionFailed" in report["error"]


# -- example --------------------------------------------------------------------------


def test_example_command(capsys):
    code, report = run_json(["example"], capsys)
    assert code == EXIT_OK
    rows = {r["name"]: r["match"] for r in report["verdicts"]["comparisons"]}
    for name in ("algebroid2 g1", "algebroid2 g2", "algebroid2 nu1", "algebroid2 nu0", "algebroid2 y",
                 "algebroid1 f1", "algebroid1 g1", "algebroid1 y", "relative degree"):
        assert rows[name], name
    assert report["output"]["relative_degree"] == 3
    assert any("stated" in note for note in report["notes"])


def test_example_text_report(capsys):
    assert main(["example"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "[match] algebroid2 y" in out and "MISMATCH" not in out


def test_example_emit(tmp_path, capsys):
    path = str(tmp_path / "out.sys")
    assert main(["example", "--emit", path]) == EXIT_OK
    assert loads(open(path, encoding="utf-8").read()) == example_file()


# -- serialization --------------------------------------------------------------------


def test_json_is_deterministic(example_path, tmp_path, capsys):
    outs = []
    for k in range(2):
        out = str(tmp_path / f"r{k}.json")
        assert main(["linearize", example_path, "--method", "both", "--json", out]) == EXIT_OK
        outs.append(open(out, "rb").read())
    assert outs[0] == outs[1]
    assert "timings" not in json.loads(outs[0])


def test_timings_on_request(example_path, capsys):
    code, report = run_json(["linearize", example_path, "--timings"], capsys)
    assert "algebroid2" in report["timings"]


def test_system_file_round_trip():
    for sf in (example_file(), example_file(hints=False), loads(PHI_MAP_FILE)):
        assert loads(sf.dumps()) == sf


def test_system_file_comments_and_errors():
    sf = loads("# a comment\nvars: x1  # trailing\nf:\n  x1^2  # drift\ng:\n  1\n")
    assert sf.f == ("x1^2",) and sf.g == ("1",)
    with pytest.raises(InputError) as info:
        loads("vars: x1\nf:\n  x1\nf:\n  x1\ng:\n  1\n")
    assert info.value.line == 4
    with pytest.raises(InputError):
        loads("f:\n  x1\ng:\n  1\n")
    with pytest.raises(InputError) as info:
        loads("  x1\nvars: x1\n")
    assert info.value.line == 1
    with pytest.raises(InputError) as info:
        loads("vars: x1, x1\nf:\n  x1\ng:\n  1\n")
    assert info.value.line == 1


def test_hints_parse_in_stage_contexts():
    sf = example_file()
    hints = sf.map_hints()
    assert hints[1][0].ctx.names == ("z1", "z2", "z3")
    assert len(sf.omega_hints().per_iteration) == 3


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "algebroid_fl.cli", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0 and "linearize" in proc.stdout
