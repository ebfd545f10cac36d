import io
import json
import subprocess
import sys

import pytest

from lcachar.cli import run

Z5 = '{"finite": [5]}'
Z6 = '{"finite": [6]}'
CIRCLE = '{"t_rank": 1}'


def call(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run(list(argv), out, err)
    return code, out.getvalue(), err.getvalue()


def report(*argv):
    code, out, _ = call(*argv)
    return code, json.loads(out)


def test_quartic_expectation():
    code, rep = report("counterexample", "quartic", "--a", "1", "--b", "1/100",
                       "--expect", "qindep-nongaussian")
    assert code == 0 and rep["fitted_q"] == {"(2,2)": "-0.12"}
    code, _, err = call("counterexample", "quartic", "--a", "1", "--b", "0",
                        "--expect", "qindep-nongaussian")
    assert code == 1 and "contradicts" in err


def test_output_is_deterministic():
    argv = ("verify", "t2", "--group", Z5, "--deltas", "1,2", "--search", "--denominator", "4")
    assert call(*argv)[1] == call(*argv)[1]


def test_hypothesis_failure_is_a_verdict():
    code, rep = report("verify", "t2", "--group", Z6, "--deltas", "1,5", "--search")
    assert code == 0 and rep["verdict"] == "HypothesisNotMet"
    assert rep["witnesses"] == [{"z": [], "t": [], "f": [3]}]
    assert call("verify", "t2", "--group", Z6, "--deltas", "1,5", "--expect", "pass")[0] == 1


@pytest.mark.parametrize("argv", [
    ("dual", "--group", '{"z_rank": 1,'),
    ("dual", "--group", '{"z_rank": 1, "bogus": 2}'),
    ("pd-check", "--group", CIRCLE, "--charfn", '{"type": "nope"}'),
    ("pd-check", "--group", CIRCLE, "--tol", "1e-3", "--charfn", '{"type": "exp-poly", "phi": {"(2)": "1"}}'),
    ("dual",),
    ("no-such-command",),
])
def test_input_errors_exit_2(argv):
    code, out, err = call(*argv)
    assert code == 2 and out == ""


def test_malformed_json_names_the_flag():
    _, _, err = call("dual", "--group", '{"z_rank": 1,')
    assert "--group" in err and "column" in err


def test_inconclusive_exit_3():
    code, rep = report("pd-check", "--group", CIRCLE, "--charfn",
                       '{"type": "exp-poly", "phi": {"(2)": "1/10000"}}')
    assert code == 3 and rep["verdict"] == "inconclusive"


def test_text_format():
    code, out, _ = call("heyde-cond", "--group", Z5, "--deltas", "1,4", "--format", "text")
    assert code == 0
    assert out.splitlines()[0] == "heyde-condition: FAIL (fails)"


def test_structural_commands():
    code, rep = report("annihilator", "--group", '{"finite": [12]}', "--subgroup", '{"generators": [[4]]}')
    assert [e["f"][0] for e in rep["elements"]] == [0, 3, 6, 9]
    code, rep = report("admissible", "--group", '{"finite": [2, 4]}', "--coeffs", "1,4")
    assert rep["verdict"] == "not-admissible"
    code, rep = report("predicates", "--group", CIRCLE)
    assert rep["is_corwin"] is True


def test_lift_and_cascade():
    code, rep = report("lift", "--subgroup", '{"tag": "torus_cyclic", "m": 3}')
    assert code == 0 and rep["verdict"] == "qindep-nongaussian"
    code, rep = report("lift", "--subgroup", '{"tag": "torus_cyclic", "m": 2}')
    sub = {c["claim"]: c for c in rep["sub_certificates"]}
    assert sub["qdefect-sumdiff"]["verdict"] == "CaseMismatch"
    code, rep = report("cascade", "heyde", "--seed", "3")
    assert code == 0 and rep["pass"]
    code, rep = report("cascade", "sd", "--shifts", "[1, 2, -1]")
    assert rep["trace"]["steps"][0]["shift"]["u"] == {"z": [-1], "t": [], "f": []}


def test_qdefect_forms():
    marg = json.dumps([{"spectral": {"type": "exp-poly", "phi": {"(2)": "1"}}},
                       {"spectral": {"type": "exp-poly", "phi": {"(2)": "2"}}}])
    code, rep = report("qdefect", "forms", "--group", CIRCLE, "--marginals", marg,
                       "--a", "1,1", "--b", "1,-1")
    assert rep["fitted_q"] == {"(1,1)": "2.0"}


def test_file_arguments(tmp_path):
    p = tmp_path / "g.json"
    p.write_text(Z5)
    code, rep = report("dual", "--group", f"@{p}")
    assert rep["dual"]["finite"] == [5]
    assert call("dual", "--group", f"@{tmp_path / 'missing.json'}")[0] == 2


def test_console_script_entry_point():
    proc = subprocess.run([sys.executable, "-m", "lcachar.cli", "counterexample", "quartic",
                           "--a", "1", "--b", "1/100", "--expect", "qindep-nongaussian"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["verdict"] == "qindep-nongaussian"
