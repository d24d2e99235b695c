import json
import os
import shutil

import pytest

from realize.cli import main

from conftest import requires_solver

HERE = os.path.dirname(__file__)
CONTRACTS = os.path.join(HERE, os.pardir, "contracts")


def ctr(name):
    return os.path.join(CONTRACTS, name + ".ctr")


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@requires_solver
class TestCheck:
    def test_doubler_human(self, capsys):
        code, out, _ = run(capsys, "check", ctr("doubler"))
        assert code == 1
        assert out.startswith("UNREALIZABLE: deadlock at depth 0")
        assert "pending input in = -" in out

    def test_doubler_fixed_json(self, capsys):
        code, out, _ = run(capsys, "check", ctr("doubler_fixed"), "--format", "json")
        assert code == 0
        data = json.loads(out)
        assert data["verdict"] == "realizable" and data["n"] == 0

    @pytest.mark.parametrize("name, code", [("doubler", 1), ("doubler_fixed", 0),
                                            ("no_initial", 1), ("counter", 1),
                                            ("false_positive", 1)])
    def test_exit_codes_and_json(self, capsys, name, code):
        got, out, _ = run(capsys, "check", ctr(name), "--format=json")
        assert got == code
        assert json.loads(out)["contract"] == name

    def test_unknown_exit_code(self, capsys):
        code, out, _ = run(capsys, "check", ctr("doubler_fixed"), "--solver", "sh -c 'cat >/dev/null;"
                           " echo unknown'", "--format", "json")
        assert code == 2 and json.loads(out)["verdict"] == "unknown"

    def test_plot_and_dump(self, capsys, tmp_path):
        fig = tmp_path / "q.png"
        code, _, _ = run(capsys, "check", ctr("counter"), "--plot", str(fig),
                         "--dump-smt", str(tmp_path / "smt"))
        assert code == 1 and fig.stat().st_size > 0
        assert len(os.listdir(tmp_path / "smt")) == 4


def test_missing_solver_is_a_tool_error(capsys):
    code, out, err = run(capsys, "check", ctr("doubler"), "--solver", "no-such-solver-x",
                         "--format", "json")
    assert code == 3
    assert json.loads(out)["verdict"] == "error" and "tool error" in err


def test_oracle_reports_empty_viable_set(capsys):
    code, out, _ = run(capsys, "oracle", ctr("doubler"), "--range", "in=-4..4",
                       "--range", "out=-4..4")
    assert code == 1 and "|V*| = 0" in out


def test_oracle_uses_sidecar_ranges(capsys, tmp_path):
    code, out, _ = run(capsys, "oracle", ctr("doubler_fixed"), "--format", "json")
    data = json.loads(out)
    assert code == 0 and data["verdict"] == "realizable"
    assert data["viable_states"] == data["states"] == 9 and data["witness"] == {"out": -4}
    code, out, _ = run(capsys, "oracle", ctr("false_positive"), "--plot",
                       str(tmp_path / "fix.png"))
    assert code == 0 and "|V*| = 1" in out and (tmp_path / "fix.png").exists()


def test_oracle_missing_range(capsys, tmp_path):
    src = tmp_path / "d.ctr"
    shutil.copy(ctr("doubler"), src)
    code, out, err = run(capsys, "oracle", str(src), "--format", "json")
    assert code == 4 and "no range" in err and json.loads(out)["verdict"] == "error"


def test_dump_smt_command(capsys, tmp_path):
    code, out, _ = run(capsys, "dump-smt", ctr("doubler"), "--max-n", "1", "--exact-base",
                       "-o", str(tmp_path), "--format", "json")
    assert code == 0
    assert len(json.loads(out)["files"]) == 1 + 3 * 2 == len(os.listdir(tmp_path))


def test_parse_command_round_trips(capsys, tmp_path):
    code, out, _ = run(capsys, "parse", ctr("doubler"))
    assert code == 0 and out.startswith("contract doubler")
    again = tmp_path / "again.ctr"
    again.write_text(out)
    code, out2, _ = run(capsys, "parse", str(again))
    assert code == 0 and out2 == out


def test_parse_error(capsys, tmp_path):
    bad = tmp_path / "bad.ctr"
    bad.write_text("contract c state: x : int; initial: x +; end\n")
    code, out, err = run(capsys, "parse", str(bad), "--format", "json")
    assert code == 4 and "syntax-error" in err
    data = json.loads(out)
    assert data["diagnostics"][0]["code"] == "syntax-error"
    assert data["diagnostics"][0]["line"] == 1


@pytest.mark.parametrize("argv", [["check"], ["frobnicate"], ["check", "x.ctr", "--max-n", "q"],
                                  ["check", "x.ctr", "--format", "json", "--bogus"]])
def test_usage_errors(capsys, argv):
    code, out, _ = run(capsys, *argv)
    assert code == 4
    if "json" in argv:
        assert json.loads(out)["verdict"] == "error"


def test_missing_file(capsys):
    code, out, _ = run(capsys, "check", "nope.ctr", "--format", "json")
    assert code == 4 and json.loads(out)["verdict"] == "error"


def test_negative_bound_is_rejected(capsys):
    code, _, err = run(capsys, "check", ctr("doubler"), "--max-n", "-1")
    assert code == 4 and "max_n" in err
