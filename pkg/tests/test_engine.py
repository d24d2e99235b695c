import json
import os
import stat
import sys

import pytest

from realize.contract import Trace
from realize.engine import (
    BOUND_EXHAUSTED, DEADLOCK, NO_INITIAL_STATE, Options, QueryRecord, TraceReconstructionError,
    Verdict, VerdictKind, build_counterexample, check_realizability, report, verdict_to_json,
)
from realize.smt import QueryKind
from realize.solver import Status

from conftest import requires_solver, typed


def fake_solver(tmp_path, lines):
    path = tmp_path / "fake.py"
    path.write_text(f"#!{sys.executable}\nimport sys, time\nsys.stdin.read()\n{lines}\n")
    path.chmod(path.stat().st_mode | stat.S_IEXEC)
    return str(path)


# -- counterexamples

def test_counterexample_at_depth_zero(doubler):
    t = build_counterexample({"s0$out": 0, "w$in": -1}, doubler, 0)
    assert t == Trace((), {"out": 0}, {"in": -1})
    assert t.depth == 0


def test_counterexample_with_warm_up_step(counter):
    t = build_counterexample({"s0$x": 0, "s1$x": 1, "w$dummy": 0}, counter, 1)
    assert t.steps == (({"x": 0}, {}),) and t.final_state == {"x": 1}
    assert t.states() == [{"x": 0}, {"x": 1}]


@pytest.mark.parametrize("model, k", [
    ({"s0$x": 1}, 0),                       # violates the initial guarantees
    ({"s0$x": 0, "s1$x": 2}, 1),             # invalid step
    ({"s0$x": 0}, 1),                       # missing constant
])
def test_counterexample_must_replay(counter, model, k):
    with pytest.raises(TraceReconstructionError):
        build_counterexample(model, counter, k)


def test_pending_input_must_meet_assumptions(doubler_fixed):
    with pytest.raises(TraceReconstructionError):
        build_counterexample({"s0$out": 0, "w$in": -1}, doubler_fixed, 0)


# -- reports

def test_report_formats():
    assert report(Verdict(VerdictKind.REALIZABLE, "c", n=2)).splitlines()[0] == "REALIZABLE (n=2)"
    v = Verdict(VerdictKind.UNREALIZABLE, "c", reason=NO_INITIAL_STATE)
    assert report(v).splitlines()[0] == "UNREALIZABLE: no state satisfies the initial guarantees"
    v = Verdict(VerdictKind.UNKNOWN, "c", n=3, reason="timeout", query=QueryKind.EXTEND_CHECK,
                records=(QueryRecord(QueryKind.EXTEND_CHECK, 3, Status.UNKNOWN, 12),))
    lines = report(v).splitlines()
    assert lines[0] == "UNKNOWN: timeout at n=3"
    assert lines[1] == "  failing query: extend-check"
    assert lines[-1] == "  1 queries, 12 ms"
    assert json.loads(report(v, "json"))["reason"] == "timeout (extend-check)"
    with pytest.raises(ValueError):
        report(v, "xml")


def test_deadlock_report_and_json():
    t = Trace((({"x": 0}, {"i": True}),), {"x": 1}, {"i": False})
    v = Verdict(VerdictKind.UNREALIZABLE, "c", n=1, reason=DEADLOCK, trace=t)
    text = report(v)
    assert text.startswith("UNREALIZABLE: deadlock at depth 1")
    assert "pending input i = false admits no post-state" in text
    out = verdict_to_json(v)
    assert list(out) == ["contract", "verdict", "n", "reason", "trace", "pending_input",
                         "queries", "time_ms"]
    assert out["trace"] == [{"state": {"x": 0}, "input": {"i": True}},
                            {"state": {"x": 1}, "input": {"i": False}}]
    assert out["pending_input"] == {"i": False}


def test_options_validation():
    with pytest.raises(ValueError):
        Options(max_n=-1)
    with pytest.raises(ValueError):
        Options(timeout_ms=0)


# -- end to end with a solver

@requires_solver
class TestEngine:
    def test_doubler(self, doubler):
        v = check_realizability(doubler)
        assert v.kind is VerdictKind.UNREALIZABLE and v.reason == DEADLOCK and v.n == 0
        assert v.trace.pending_input["in"] < 0
        assert [r.kind for r in v.records] == [QueryKind.INITIAL_SAT, QueryKind.BASE_CHECK_PRIME]

    def test_doubler_fixed(self, doubler_fixed):
        v = check_realizability(doubler_fixed)
        assert v.realizable and v.n == 0 and v.queries == 3
        assert report(v).startswith("REALIZABLE (n=0)")

    def test_no_initial_state(self, no_initial):
        v = check_realizability(no_initial)
        assert v.unrealizable and v.reason == NO_INITIAL_STATE and v.queries == 1

    def test_counter_deadlocks_after_one_step(self, counter):
        v = check_realizability(counter)
        assert v.unrealizable and v.n == 1
        assert v.trace.steps[0][0] == {"x": 0} and v.trace.final_state == {"x": 1}

    def test_false_positive(self, false_positive):
        v = check_realizability(false_positive)
        assert v.unrealizable and v.n == 0 and v.trace.final_state == {"x": 1}

    def test_realizable_only_after_more_steps(self):
        # from x = 2 the next state must be 0, whose successor must be 1: two-step lookahead
        c = typed("contract c inputs: i : bool; state: x : int; initial: x = 0;"
                  " transitions: x' >= 0 and x' <= 2; x = 2 => x' = 0; x = 1 => x' != 0;"
                  " x = 0 => x' != 2; end")
        v = check_realizability(c)
        assert v.realizable

    def test_bound_exhausted(self):
        # negative x climbs towards -1 and is stuck there, so some unreachable state
        # dead-ends after any number of steps
        c = typed("contract c state: x : int; initial: x = 0; transitions: x' = x + 1;"
                  " x < 0 => x' < 0; end")
        v = check_realizability(c, max_n=2)
        assert v.kind is VerdictKind.UNKNOWN and v.reason == BOUND_EXHAUSTED and v.n == 2
        assert v.queries == 1 + 2 * 3
        assert report(v).startswith("UNKNOWN: bound exhausted at n=2")

    def test_parallel_matches_sequential(self, doubler, doubler_fixed, counter):
        for c in (doubler, doubler_fixed, counter):
            a = check_realizability(c)
            b = check_realizability(c, parallel=True)
            assert (a.kind, a.n, a.reason) == (b.kind, b.n, b.reason)

    def test_exact_base_is_diagnostic(self, doubler):
        v = check_realizability(doubler, exact_base=True)
        assert v.unrealizable and v.exact_base == ((0, Status.UNSAT),)
        assert "exact base check n=0: unsat" in report(v)

    def test_dump_smt(self, doubler_fixed, tmp_path):
        check_realizability(doubler_fixed, dump_smt=str(tmp_path))
        assert sorted(os.listdir(tmp_path)) == [
            "doubler_fixed_base-check-prime_0.smt2", "doubler_fixed_extend-check_0.smt2",
            "doubler_fixed_initial-sat_0.smt2"]


def test_solver_timeout_gives_unknown(doubler, tmp_path):
    cmd = fake_solver(tmp_path, "time.sleep(30)")
    v = check_realizability(doubler, solver_cmd=cmd, timeout_ms=200)
    assert v.kind is VerdictKind.UNKNOWN and v.reason == "timeout"
    assert v.query is QueryKind.INITIAL_SAT and v.n == 0


def test_bogus_model_is_a_hard_failure(doubler_fixed, tmp_path):
    # a solver claiming sat with a model that does not replay
    cmd = fake_solver(tmp_path, "print('sat'); print('((define-fun w$in () Int (- 5)))')")
    with pytest.raises(TraceReconstructionError):
        check_realizability(doubler_fixed, solver_cmd=cmd)
