import os
import subprocess

import pytest

from realize.contract import Arith, BoolLit, Cmp, IntLit, VarRef, VarTag
from realize.corpus import DOUBLER, FALSE_POSITIVE
from realize.oracle import FiniteContract, IntRange
from realize.smt import (
    QueryKind, encode, encode_base_check_prime, encode_exact_base_check, encode_extend_check,
    encode_initial_sat, input_name, lower_expr, post_name, state_name, step_namer,
)
from realize.solver import Status, default_solver_cmd, run_query

from conftest import requires_solver, typed

GOLDEN = os.path.join(os.path.dirname(__file__), "golden")


def solve(script):
    return run_query(script, timeout_ms=10_000)


# -- lowering

def test_lower_on_path_and_inside_forall(doubler):
    g = doubler.transitional_guarantees[0]
    k = 3
    path = step_namer(lambda x: state_name(k, x), lambda x: input_name(k, x),
                      lambda x: state_name(k + 1, x))
    assert lower_expr(g, path) == "(= s4$out (* 2 i3$in))"
    last = step_namer(lambda x: state_name(k, x), lambda x: input_name(k, x), post_name)
    assert lower_expr(g, last) == "(= post$out (* 2 i3$in))"


def test_lower_literals_and_div():
    pre = step_namer(lambda x: state_name(0, x))
    assert lower_expr(BoolLit(True), pre) == "true"
    e = Cmp(">=", Arith("div", (VarRef("x", VarTag.PRE), IntLit(2))), IntLit(0))
    assert lower_expr(e, pre) == "(>= (div s0$x 2) 0)"
    assert lower_expr(IntLit(-3), pre) == "(- 3)"
    assert lower_expr(Cmp("!=", IntLit(1), IntLit(2)), pre) == "(distinct 1 2)"


def test_real_literals():
    c = typed("contract c state: x : real; initial: x = -1/3; x < 2; end")
    s = encode_initial_sat(c).text
    assert "(= s0$x (- (/ 1.0 3.0)))" in s
    assert "(< s0$x 2.0)" in s


def test_lowering_needs_naming_context(doubler):
    with pytest.raises(ValueError):
        lower_expr(doubler.transitional_guarantees[0], step_namer(lambda x: x))


# -- script shape

def test_script_shape_and_model_vars(doubler):
    s = encode_base_check_prime(doubler, 2)
    lines = s.text.strip().splitlines()
    assert lines[-2:] == ["(check-sat)", "(get-model)"]
    assert "(set-logic ALL)" in lines and "(set-option :produce-models true)" in lines
    names = [mv.smt_name for mv in s.model_vars]
    assert names == ["s0$out", "s1$out", "s2$out", "i0$in", "i1$in", "w$in"]
    declared = [ln.split()[1] for ln in lines if ln.startswith("(declare-const")]
    assert declared == names
    w = s.model_vars[-1]
    assert (w.var, w.step, w.tag) == ("in", 2, VarTag.INPUT)
    assert "forall ((post$out Int))" in s.text


def test_extend_check_does_not_constrain_s0(doubler_fixed):
    rooted = encode_base_check_prime(doubler_fixed, 1).text
    free = encode_extend_check(doubler_fixed, 1).text
    assert "initial guarantees" in rooted and "initial guarantees" not in free


def test_no_state_variables_means_no_forall():
    c = typed("contract c inputs: i : int; assumptions: i > 0; transitions: i > 1; end")
    s = encode_base_check_prime(c, 0).text
    assert "forall" not in s
    assert "(assert (not (> w$i 1)))" in s


def test_exact_base_check_is_fully_quantified(doubler):
    s = encode_exact_base_check(doubler, 2)
    assert s.model_vars == ()
    assert s.text.count("forall") == 2 and s.text.count("exists") == 3


def test_encoding_requires_typed_contract():
    from realize.parser import parse_contract
    with pytest.raises(ValueError):
        encode_initial_sat(parse_contract(DOUBLER))


@pytest.mark.parametrize("kind", list(QueryKind))
def test_encoding_is_deterministic(doubler, kind):
    texts = {encode(typed(DOUBLER), kind, 2).text for _ in range(3)}
    assert len(texts) == 1


@pytest.mark.parametrize("name", sorted(os.listdir(GOLDEN)))
def test_golden_scripts(name):
    contract, kind, index = name[:-len(".smt2")].rsplit("_", 2)
    src = {"doubler": DOUBLER, "false_positive": FALSE_POSITIVE}[contract]
    script = encode(typed(src), QueryKind(kind), int(index))
    assert script.filename == name
    with open(os.path.join(GOLDEN, name)) as f:
        assert script.text == f.read()


@requires_solver
@pytest.mark.parametrize("name", sorted(os.listdir(GOLDEN)))
def test_golden_scripts_parse_in_solver(name):
    with open(os.path.join(GOLDEN, name)) as f:
        text = f.read()
    out = subprocess.run(default_solver_cmd().split(), input=text, capture_output=True,
                         text=True, timeout=30).stdout
    errors = [ln for ln in out.splitlines()
              if ln.startswith("(error") and "model is not available" not in ln]
    assert errors == []


# -- solver answers for each query

@requires_solver
class TestAnswers:
    def test_initial_sat(self):
        assert solve(encode_initial_sat(typed(DOUBLER))).status is Status.SAT
        c = typed("contract c state: x : int; initial: x > 0 and x < 0; end")
        assert solve(encode_initial_sat(c)).status is Status.UNSAT
        c = typed("contract c state: x : int; initial: x = 0 or x = 1; end")
        res = solve(encode_initial_sat(c))
        assert res.status is Status.SAT and res.model["s0$x"] in (0, 1)

    def test_base_check_prime_doubler(self, doubler):
        res = solve(encode_base_check_prime(doubler, 0))
        assert res.status is Status.SAT
        assert res.model["w$in"] < 0

    def test_base_check_prime_doubler_fixed(self, doubler_fixed):
        # independent check: every admissible input has the output 2*in
        for i in range(-4, 5):
            if i >= 0:
                assert any(o == 2 * i and o >= 0 for o in range(-8, 9))
        assert solve(encode_base_check_prime(doubler_fixed, 0)).status is Status.UNSAT

    @pytest.mark.parametrize("k", [0, 1, 3])
    def test_unsatisfiable_initial_guarantees_pass_base_check_vacuously(self, k):
        c = typed("contract c inputs: i : int; state: x : int; initial: false;"
                  " transitions: false; end")
        assert solve(encode_base_check_prime(c, k)).status is Status.UNSAT

    def test_extend_check(self, doubler, doubler_fixed):
        assert solve(encode_extend_check(doubler_fixed, 0)).status is Status.UNSAT
        assert solve(encode_extend_check(doubler, 0)).status is Status.SAT
        c = typed("contract c inputs: i : int; state: x : int; transitions: true; end")
        for n in range(3):
            assert solve(encode_extend_check(c, n)).status is Status.UNSAT

    def test_exact_base_check(self, doubler, doubler_fixed):
        assert solve(encode_exact_base_check(doubler, 0)).status is Status.UNSAT
        assert solve(encode_exact_base_check(doubler, 1)).status is Status.SAT
        # oracle: with in in [0, 2] every state is 2-step finitely viable
        from realize.oracle import finitely_viable
        fc = FiniteContract(doubler_fixed, {"in": IntRange(0, 2), "out": IntRange(-4, 4)})
        assert all(finitely_viable(fc, 2, s) for s in fc.states)
        assert solve(encode_exact_base_check(doubler_fixed, 2)).status is Status.UNSAT

    def test_base_check_model_is_a_valid_path(self, counter):
        from realize.contract import holds_A, holds_GI, holds_GT
        res = solve(encode_base_check_prime(counter, 1))
        assert res.status is Status.SAT
        s0, s1 = {"x": res.model["s0$x"]}, {"x": res.model["s1$x"]}
        assert holds_GI(counter, s0)
        assert holds_A(counter, s0, {}) and holds_GT(counter, s0, {}, s1)

    def test_sat_answer_is_stable_across_runs(self, doubler):
        script = encode_base_check_prime(doubler, 0)
        assert {solve(script).status for _ in range(3)} == {Status.SAT}
