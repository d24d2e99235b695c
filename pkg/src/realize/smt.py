"""SMT-LIB2 generation for the realizability queries.

Every script is self-contained and is checked in negated form: ``unsat``
means the property holds.  The one exception is the initial-state query,
which asks directly whether some state satisfies the initial guarantees.

Constant naming:

=============  ==========================================
``s<j>$x``     state variable ``x`` at path step ``j``
``i<j>$x``     input variable ``x`` at path step ``j``
``w$x``        the extra input applied at the last state
``post$x``     universally bound post-state of the last step
=============  ==========================================
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional

from .contract import (
    And, Arith, BoolLit, Cmp, Contract, Expr, Implies, IntLit, Ite, Not, Or, RealLit, Sort,
    VarRef, VarTag,
)


class QueryKind(enum.Enum):
    INITIAL_SAT = "initial-sat"
    BASE_CHECK_PRIME = "base-check-prime"
    EXACT_BASE_CHECK = "exact-base-check"
    EXTEND_CHECK = "extend-check"


@dataclass(frozen=True)
class ModelVar:
    """A declared constant and the contract variable it stands for.

    ``tag`` is PRE for state constants and INPUT for inputs; the extra
    input ``w`` is the INPUT at ``step == k``, one past the last path input.
    """

    smt_name: str
    var: str
    step: int
    tag: VarTag
    sort: Sort


@dataclass(frozen=True)
class SmtScript:
    kind: QueryKind
    index: int
    text: str
    model_vars: tuple[ModelVar, ...]
    contract_name: str = ""

    @property
    def filename(self) -> str:
        return f"{self.contract_name}_{self.kind.value}_{self.index}.smt2"


SMT_SORT = {Sort.BOOL: "Bool", Sort.INT: "Int", Sort.REAL: "Real"}
_CMP = {"=": "=", "!=": "distinct", "<": "<", "<=": "<=", ">": ">", ">=": ">="}

Namer = Callable[[str, VarTag], str]


def state_name(j: int, name: str) -> str:
    return f"s{j}${name}"


def input_name(j: int, name: str) -> str:
    return f"i{j}${name}"


def w_name(name: str) -> str:
    return f"w${name}"


def post_name(name: str) -> str:
    return f"post${name}"


def step_namer(pre: Callable[[str], str], inp: Optional[Callable[[str], str]] = None,
               post: Optional[Callable[[str], str]] = None) -> Namer:
    table = {VarTag.PRE: pre, VarTag.INPUT: inp, VarTag.POST: post}

    def name(var: str, tag: VarTag) -> str:
        fn = table[tag]
        if fn is None:
            raise ValueError(f"no naming context for {tag.value} variable {var!r}")
        return fn(var)

    return name


def _number(v) -> str:
    if isinstance(v, int):
        return f"(- {-v})" if v < 0 else str(v)
    q = Fraction(v)
    neg, q = q < 0, abs(q)
    body = f"{q.numerator}.0" if q.denominator == 1 else f"(/ {q.numerator}.0 {q.denominator}.0)"
    return f"(- {body})" if neg else body


def _nary(op: str, parts: list[str], unit: str) -> str:
    if not parts:
        return unit
    if len(parts) == 1:
        return parts[0]
    return f"({op} {' '.join(parts)})"


def lower_expr(e: Expr, name: Namer) -> str:
    """Render a typed expression as an SMT-LIB2 term."""
    if isinstance(e, BoolLit):
        return "true" if e.value else "false"
    if isinstance(e, IntLit):
        return _number(e.value)
    if isinstance(e, RealLit):
        return _number(e.value)
    if isinstance(e, VarRef):
        return name(e.name, e.tag)
    if isinstance(e, Not):
        return f"(not {lower_expr(e.arg, name)})"
    if isinstance(e, And):
        return _nary("and", [lower_expr(a, name) for a in e.args], "true")
    if isinstance(e, Or):
        return _nary("or", [lower_expr(a, name) for a in e.args], "false")
    if isinstance(e, Implies):
        return f"(=> {lower_expr(e.lhs, name)} {lower_expr(e.rhs, name)})"
    if isinstance(e, Ite):
        return (f"(ite {lower_expr(e.cond, name)} {lower_expr(e.then, name)} "
                f"{lower_expr(e.orelse, name)})")
    if isinstance(e, Cmp):
        return f"({_CMP[e.op]} {lower_expr(e.lhs, name)} {lower_expr(e.rhs, name)})"
    if isinstance(e, Arith):
        args = " ".join(lower_expr(a, name) for a in e.args)
        op = "-" if e.op == "neg" else e.op
        return f"({op} {args})"
    raise TypeError(f"not an expression: {e!r}")


def lower_conj(es, name: Namer) -> str:
    return _nary("and", [lower_expr(e, name) for e in es], "true")


# --------------------------------------------------------------------------


class _Script:
    def __init__(self, c: Contract, kind: QueryKind, index: int, comment: str):
        if not c.typed:
            raise ValueError("contract must be type checked before encoding")
        self.c = c
        self.kind = kind
        self.index = index
        self.lines = [
            f"; contract {c.name}: {kind.value} n={index}",
            f"; {comment}",
            "(set-option :produce-models true)",
            "(set-logic ALL)",
        ]
        self.model_vars: list[ModelVar] = []

    def declare(self, smt_name: str, var: str, step: int, tag: VarTag, sort: Sort) -> None:
        self.lines.append(f"(declare-const {smt_name} {SMT_SORT[sort]})")
        self.model_vars.append(ModelVar(smt_name, var, step, tag, sort))

    def declare_state(self, j: int) -> None:
        for d in self.c.states:
            self.declare(state_name(j, d.name), d.name, j, VarTag.PRE, d.sort)

    def declare_input(self, j: int) -> None:
        for d in self.c.inputs:
            self.declare(input_name(j, d.name), d.name, j, VarTag.INPUT, d.sort)

    def declare_w(self, k: int) -> None:
        for d in self.c.inputs:
            self.declare(w_name(d.name), d.name, k, VarTag.INPUT, d.sort)

    def assert_(self, term: str, note: str = "") -> None:
        if note:
            self.lines.append(f"; {note}")
        self.lines.append(f"(assert {term})")

    def done(self) -> SmtScript:
        self.lines += ["(check-sat)", "(get-model)"]
        return SmtScript(self.kind, self.index, "\n".join(self.lines) + "\n",
                         tuple(self.model_vars), self.c.name)


def _binders(decls, naming: Callable[[str], str]) -> str:
    return " ".join(f"({naming(d.name)} {SMT_SORT[d.sort]})" for d in decls)


def _forall(decls, naming, body: str) -> str:
    return f"(forall ({_binders(decls, naming)}) {body})" if decls else body


def _exists(decls, naming, body: str) -> str:
    return f"(exists ({_binders(decls, naming)}) {body})" if decls else body


def encode_initial_sat(c: Contract) -> SmtScript:
    """Satisfiable iff some state meets the initial guarantees."""
    sc = _Script(c, QueryKind.INITIAL_SAT, 0, "sat iff some state satisfies the initial guarantees")
    sc.declare_state(0)
    sc.assert_(lower_conj(c.initial_guarantees, step_namer(lambda x: state_name(0, x))),
               "initial guarantees at s0")
    return sc.done()


def _dead_end_path(sc: _Script, k: int, rooted: bool) -> SmtScript:
    c = sc.c
    for j in range(k + 1):
        sc.declare_state(j)
    for j in range(k):
        sc.declare_input(j)
    sc.declare_w(k)
    if rooted:
        sc.assert_(lower_conj(c.initial_guarantees, step_namer(lambda x: state_name(0, x))),
                   "initial guarantees at s0")
    for j in range(k):
        nm = step_namer(lambda x, j=j: state_name(j, x), lambda x, j=j: input_name(j, x),
                        lambda x, j=j: state_name(j + 1, x))
        sc.assert_(f"(and {lower_conj(c.assumptions, nm)} "
                   f"{lower_conj(c.transitional_guarantees, nm)})",
                   f"valid step {j} -> {j + 1}")
    last = step_namer(lambda x: state_name(k, x), w_name, post_name)
    sc.assert_(lower_conj(c.assumptions, last), f"assumptions hold for s{k} and w")
    sc.assert_(_forall(c.states, post_name,
                       f"(not {lower_conj(c.transitional_guarantees, last)})"),
               f"no post-state extends s{k} under w")
    return sc.done()


def encode_base_check_prime(c: Contract, k: int) -> SmtScript:
    """Negated simplified base check: a valid ``k``-path from an initial
    state that dead-ends on some input."""
    if k < 0:
        raise ValueError("k must be non-negative")
    sc = _Script(c, QueryKind.BASE_CHECK_PRIME, k,
                 "sat iff a valid path from an initial state dead-ends")
    return _dead_end_path(sc, k, rooted=True)


def encode_extend_check(c: Contract, n: int) -> SmtScript:
    """Negated extend check: a valid ``n``-path from any state that dead-ends."""
    if n < 0:
        raise ValueError("n must be non-negative")
    sc = _Script(c, QueryKind.EXTEND_CHECK, n,
                 "sat iff a valid path from an arbitrary state dead-ends")
    return _dead_end_path(sc, n, rooted=False)


def encode_exact_base_check(c: Contract, n: int) -> SmtScript:
    """Negation of "some initial state is finitely viable for ``n`` steps".

    Fully quantified, with ``n`` nested forall-input / exists-successor
    alternations; only practical for tiny ``n``.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    sc = _Script(c, QueryKind.EXACT_BASE_CHECK, n,
                 "unsat iff some initial state is finitely viable")

    def fv(j: int, m: int) -> str:
        # finitely viable for m more steps, from bound state s<j>
        if m == 0:
            return "true"
        nm = step_namer(lambda x: state_name(j, x), lambda x: input_name(j, x),
                        lambda x: state_name(j + 1, x))
        step = f"(and {lower_conj(c.transitional_guarantees, nm)} {fv(j + 1, m - 1)})"
        succ = _exists(c.states, lambda x: state_name(j + 1, x), step)
        return _forall(c.inputs, lambda x: input_name(j, x),
                       f"(=> {lower_conj(c.assumptions, nm)} {succ})")

    gi = lower_conj(c.initial_guarantees, step_namer(lambda x: state_name(0, x)))
    body = _exists(c.states, lambda x: state_name(0, x), f"(and {gi} {fv(0, n)})")
    sc.assert_(f"(not {body})")
    return sc.done()


def encode(c: Contract, kind: QueryKind, index: int = 0) -> SmtScript:
    if kind is QueryKind.INITIAL_SAT:
        return encode_initial_sat(c)
    return {
        QueryKind.BASE_CHECK_PRIME: encode_base_check_prime,
        QueryKind.EXTEND_CHECK: encode_extend_check,
        QueryKind.EXACT_BASE_CHECK: encode_exact_base_check,
    }[kind](c, index)
