import json
import subprocess
import sys

import pytest

from lvdiff.cli import EXIT_ERROR, EXIT_NEGATIVE, EXIT_OK, main, run

LV_BD = ["lv-classical", "--set", "a=1", "--set", "c=1"]
LV_NORM = LV_BD + ["--set", "b=1"]


def result(argv):
    report, code = run(argv + ["--no-timing"])
    assert report["schema"] == 1
    assert "timing" not in report
    return report, code


def test_check_invariant_example():
    report, code = result(["check-invariant", "lv-classical", "--poly", "X*Y"])
    assert code == EXIT_OK
    assert report["result"]["cofactor"] == "a*Y + c*X + b + d"


def test_check_invariant_negative():
    report, code = result(["check-invariant"] + LV_BD + ["--poly", "X + Y"])
    assert code == EXIT_NEGATIVE
    assert report["status"] == "negative"


def test_search_with_equal_rates():
    report, code = result(["search-darboux"] + LV_BD + ["--set", "d=b", "--max-degree", "1"])
    assert code == EXIT_OK
    polys = {f["polynomial"] for f in report["result"]["families"]}
    assert {"X", "Y", "X - Y"} <= polys
    assert "over_extensions" in report["result"]


def test_ode_alg_test_examples():
    report, code = result(["ode-alg-test", "--coeff", "alpha/t"])
    assert code == EXIT_NEGATIVE and report["result"]["verdict"] == "NoAlgebraic"
    report, code = result(["ode-alg-test", "--coeff", "3/(2*t)"])
    assert code == EXIT_OK and report["result"]["verdict"] == "HasAlgebraic"


def test_first_integral_command():
    report, code = result(["first-integral"] + LV_BD)
    assert code == EXIT_OK
    assert report["result"]["H"] == "X - Y + d*log(X) - b*log(Y)"
    assert report["result"]["conserved"] is True


def test_puiseux_command():
    report, code = result(["puiseux-constraints"] + LV_NORM + ["--set", "d=alpha", "--case", "r<0", "--depth", "2"])
    assert code == EXIT_OK
    eqs = [c["equation"] for c in report["result"]["constraints"]]
    assert eqs[0] == "a0^2*r = 0"


def test_integrate_writes_csv(tmp_path):
    out = tmp_path / "t.csv"
    report, code = result(["integrate"] + LV_NORM + ["--params", "d=1.41421356", "--ic", "0.5,0.25",
                                                       "--horizon", "1", "--out", str(out)])
    assert code == EXIT_OK
    assert report["result"]["termination"] in ("HorizonReached", "BlowUpGuard")
    lines = out.read_text().splitlines()
    assert lines[0] == "t,x,y" and len(lines) == report["result"]["samples"] + 1


def test_independence_probe_reports_both_probes():
    report, _ = result(["independence-probe"] + LV_NORM + ["--params", "d=1.41421356",
                                                           "--ic", "0.5,0.25", "--ic", "0.6,0.3"])
    res = report["result"]
    assert res["ratio_probe"]["verdict"] == "IndependentEvidence"
    assert res["relation_probe"]["monomials"] == 15


@pytest.mark.parametrize("argv", [
    ["bogus"],
    ["check-invariant", "lv-classical", "--poly", "X+"],
    ["check-invariant", "lv-classical"],
    ["check-invariant", "no-such-preset", "--poly", "X"],
    ["integrate"] + LV_NORM + ["--ic", "0.5", "--horizon", "1"],
    ["integrate"] + LV_NORM + ["--ic", "0.5,0.25", "--horizon", "1", "--rtol", "1"],
    ["search-darboux", "lv-classical", "--max-degree", "-1"],
])
def test_errors_exit_two(argv):
    report, code = run(argv)
    assert code == EXIT_ERROR
    assert report["status"] == "error" and report["error"]


@pytest.mark.parametrize("argv", [
    ["check-invariant", "lv-classical", "--poly", "X*Y"],
    ["search-darboux"] + LV_BD + ["--max-degree", "2"],
    ["lemma-check", "--family", "classical", "--q", "1 - alpha", "--c1", "1", "--c2", "1"],
    ["demo", "lv-2d"],
])
def test_deterministic_output(argv, capsys):
    outs = []
    for _ in range(2):
        main(argv + ["--no-timing"])
        outs.append(capsys.readouterr().out)
    assert outs[0] == outs[1]
    json.loads(outs[0])


def test_pretty_output(capsys):
    assert main(["check-invariant", "lv-classical", "--poly", "X*Y", "--pretty"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "a*Y + c*X + b + d" in out and not out.lstrip().startswith("{")


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "lvdiff.cli", "ode-alg-test", "--coeff", "1/t^2", "--no-timing"],
                          capture_output=True, text=True)
    assert proc.returncode == EXIT_NEGATIVE
    assert json.loads(proc.stdout)["result"]["verdict"] == "NoAlgebraic"
