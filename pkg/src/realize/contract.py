"""Contract AST, type checking and concrete evaluation.

A contract is a triple of predicate lists over typed variables:

* ``assumptions`` (A) over the pre-state and the current input,
* ``initial_guarantees`` (G_I) over the initial state,
* ``transitional_guarantees`` (G_T) over pre-state, input and post-state.

Every list is read as a conjunction; an empty list is ``true``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Optional, Sequence, Union

Value = Union[bool, int, Fraction]
Valuation = Mapping[str, Value]


class Sort(enum.Enum):
    BOOL = "bool"
    INT = "int"
    REAL = "real"

    @property
    def numeric(self) -> bool:
        return self is not Sort.BOOL


class VarTag(enum.Enum):
    PRE = "pre"
    INPUT = "input"
    POST = "post"


class Section(enum.Enum):
    ASSUMPTIONS = "assumptions"
    INITIAL = "initial"
    TRANSITIONS = "transitions"


# Tags each section may reference.
SECTION_TAGS = {
    Section.ASSUMPTIONS: frozenset({VarTag.PRE, VarTag.INPUT}),
    Section.INITIAL: frozenset({VarTag.PRE}),
    Section.TRANSITIONS: frozenset({VarTag.PRE, VarTag.INPUT, VarTag.POST}),
}


@dataclass(frozen=True)
class SourceSpan:
    line: int
    column: int
    length: int = 1

    def __post_init__(self):
        if self.line < 1 or self.column < 1 or self.length < 1:
            raise ValueError(f"invalid span {self.line}:{self.column}+{self.length}")

    def __str__(self) -> str:
        return f"{self.line}:{self.column}"


@dataclass(frozen=True)
class Diagnostic:
    code: str
    message: str
    span: Optional[SourceSpan] = None

    def __str__(self) -> str:
        where = f"{self.span}: " if self.span else ""
        return f"{where}{self.code}: {self.message}"


class ContractError(Exception):
    """Raised with one or more diagnostics when a contract is rejected."""

    def __init__(self, diagnostics: Sequence[Diagnostic]):
        self.diagnostics = tuple(diagnostics)
        super().__init__("\n".join(str(d) for d in self.diagnostics))

    @property
    def codes(self) -> list[str]:
        return [d.code for d in self.diagnostics]


class EvaluationError(Exception):
    pass


class DivisionByZero(EvaluationError):
    pass


class MissingValuation(EvaluationError):
    pass


# --------------------------------------------------------------------------
# Expressions.  Spans and inferred sorts never take part in equality.

_meta = dict(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Expr:
    def children(self) -> tuple["Expr", ...]:
        return ()


@dataclass(frozen=True)
class BoolLit(Expr):
    value: bool
    span: Optional[SourceSpan] = field(**_meta)
    sort: Optional[Sort] = field(**_meta)


@dataclass(frozen=True)
class IntLit(Expr):
    value: int
    span: Optional[SourceSpan] = field(**_meta)
    sort: Optional[Sort] = field(**_meta)


@dataclass(frozen=True)
class RealLit(Expr):
    numerator: int
    denominator: int = 1
    span: Optional[SourceSpan] = field(**_meta)
    sort: Optional[Sort] = field(**_meta)

    def __post_init__(self):
        if self.denominator <= 0:
            raise ValueError("denominator must be positive")
        q = Fraction(self.numerator, self.denominator)
        object.__setattr__(self, "numerator", q.numerator)
        object.__setattr__(self, "denominator", q.denominator)

    @property
    def value(self) -> Fraction:
        return Fraction(self.numerator, self.denominator)


@dataclass(frozen=True)
class VarRef(Expr):
    name: str
    tag: VarTag
    span: Optional[SourceSpan] = field(**_meta)
    sort: Optional[Sort] = field(**_meta)


@dataclass(frozen=True)
class Not(Expr):
    arg: Expr
    span: Optional[SourceSpan] = field(**_meta)
    sort: Optional[Sort] = field(**_meta)

    def children(self):
        return (self.arg,)


@dataclass(frozen=True)
class And(Expr):
    args: tuple[Expr, ...]
    span: Optional[SourceSpan] = field(**_meta)
    sort: Optional[Sort] = field(**_meta)

    def children(self):
        return self.args


@dataclass(frozen=True)
class Or(Expr):
    args: tuple[Expr, ...]
    span: Optional[SourceSpan] = field(**_meta)
    sort: Optional[Sort] = field(**_meta)

    def children(self):
        return self.args


@dataclass(frozen=True)
class Implies(Expr):
    lhs: Expr
    rhs: Expr
    span: Optional[SourceSpan] = field(**_meta)
    sort: Optional[Sort] = field(**_meta)

    def children(self):
        return (self.lhs, self.rhs)


@dataclass(frozen=True)
class Ite(Expr):
    cond: Expr
    then: Expr
    orelse: Expr
    span: Optional[SourceSpan] = field(**_meta)
    sort: Optional[Sort] = field(**_meta)

    def children(self):
        return (self.cond, self.then, self.orelse)


CMP_OPS = ("=", "!=", "<", "<=", ">", ">=")
ARITH_OPS = ("+", "-", "*", "div", "mod", "neg")


@dataclass(frozen=True)
class Cmp(Expr):
    op: str
    lhs: Expr
    rhs: Expr
    span: Optional[SourceSpan] = field(**_meta)
    sort: Optional[Sort] = field(**_meta)

    def __post_init__(self):
        if self.op not in CMP_OPS:
            raise ValueError(f"unknown comparison {self.op!r}")

    def children(self):
        return (self.lhs, self.rhs)


@dataclass(frozen=True)
class Arith(Expr):
    op: str
    args: tuple[Expr, ...]
    span: Optional[SourceSpan] = field(**_meta)
    sort: Optional[Sort] = field(**_meta)

    def __post_init__(self):
        if self.op not in ARITH_OPS:
            raise ValueError(f"unknown arithmetic operator {self.op!r}")
        arity = len(self.args)
        if self.op == "neg" and arity != 1:
            raise ValueError("neg takes one argument")
        if self.op in ("div", "mod", "-") and arity != 2:
            raise ValueError(f"{self.op} takes two arguments")
        if self.op in ("+", "*") and arity < 2:
            raise ValueError(f"{self.op} takes at least two arguments")

    def children(self):
        return self.args


TRUE = BoolLit(True)
FALSE = BoolLit(False)


def walk(e: Expr) -> Iterator[Expr]:
    yield e
    for c in e.children():
        yield from walk(c)


def free_vars(e: Expr) -> set[tuple[str, VarTag]]:
    return {(n.name, n.tag) for n in walk(e) if isinstance(n, VarRef)}


def is_constant(e: Expr) -> bool:
    return not any(isinstance(n, VarRef) for n in walk(e))


# Convenience constructors, mostly for tests and generated corpora.

def var(name: str, tag: VarTag = VarTag.PRE) -> VarRef:
    return VarRef(name, tag)


def lit(v: Value) -> Expr:
    if isinstance(v, bool):
        return BoolLit(v)
    if isinstance(v, int):
        return IntLit(v)
    q = Fraction(v)
    return RealLit(q.numerator, q.denominator)


def conj(*es: Expr) -> Expr:
    if not es:
        return TRUE
    return es[0] if len(es) == 1 else And(tuple(es))


def disj(*es: Expr) -> Expr:
    if not es:
        return FALSE
    return es[0] if len(es) == 1 else Or(tuple(es))


# --------------------------------------------------------------------------
# Contracts


@dataclass(frozen=True)
class VarDecl:
    name: str
    sort: Sort
    span: Optional[SourceSpan] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Contract:
    name: str
    inputs: tuple[VarDecl, ...] = ()
    states: tuple[VarDecl, ...] = ()
    assumptions: tuple[Expr, ...] = ()
    initial_guarantees: tuple[Expr, ...] = ()
    transitional_guarantees: tuple[Expr, ...] = ()
    typed: bool = field(default=False, compare=False, repr=False)

    def section(self, which: Section) -> tuple[Expr, ...]:
        return {
            Section.ASSUMPTIONS: self.assumptions,
            Section.INITIAL: self.initial_guarantees,
            Section.TRANSITIONS: self.transitional_guarantees,
        }[which]

    @property
    def input_names(self) -> list[str]:
        return [d.name for d in self.inputs]

    @property
    def state_names(self) -> list[str]:
        return [d.name for d in self.states]

    def sort_of(self, name: str) -> Sort:
        for d in self.inputs + self.states:
            if d.name == name:
                return d.sort
        raise KeyError(name)

    def normalized(self) -> "Contract":
        """Drop literal ``true`` conjuncts; empty and ``[true]`` sections coincide."""

        def strip(es):
            return tuple(e for e in es if e != TRUE)

        return replace(
            self,
            assumptions=strip(self.assumptions),
            initial_guarantees=strip(self.initial_guarantees),
            transitional_guarantees=strip(self.transitional_guarantees),
        )


@dataclass(frozen=True)
class Trace:
    """A valid path ``s0 -i0-> s1 ... -> final_state``.

    When ``pending_input`` is set the trace ends in a deadlock: the
    assumptions hold for ``(final_state, pending_input)`` but no post-state
    satisfies the transitional guarantees.  That last fact comes from the
    solver and is not re-checked here.
    """

    steps: tuple[tuple[dict, dict], ...]
    final_state: dict
    pending_input: Optional[dict] = None
    deadlock_solver_attested: bool = True

    @property
    def depth(self) -> int:
        return len(self.steps)

    def states(self) -> list[dict]:
        return [s for s, _ in self.steps] + [self.final_state]


# --------------------------------------------------------------------------
# Type checking


class _Checker:
    def __init__(self, contract: Contract):
        self.contract = contract
        self.diags: list[Diagnostic] = []
        self.inputs = {d.name: d.sort for d in contract.inputs}
        self.states = {d.name: d.sort for d in contract.states}

    def err(self, code: str, msg: str, node) -> None:
        self.diags.append(Diagnostic(code, msg, getattr(node, "span", None)))

    def check_decls(self) -> None:
        seen: dict[str, VarDecl] = {}
        for d in self.contract.inputs + self.contract.states:
            if d.name in seen:
                self.err("duplicate-variable", f"variable {d.name!r} declared twice", d)
            seen[d.name] = d

    def section(self, which: Section, es: Iterable[Expr]) -> tuple[Expr, ...]:
        out = []
        for e in es:
            t = self.expr(e, which)
            if t.sort is not None and t.sort is not Sort.BOOL:
                self.err("sort-mismatch", f"{which.value} entry must be bool, got {t.sort.value}", e)
            out.append(t)
        return tuple(out)

    def expr(self, e: Expr, sec: Section) -> Expr:
        if isinstance(e, BoolLit):
            return replace(e, sort=Sort.BOOL)
        if isinstance(e, IntLit):
            return replace(e, sort=Sort.INT)
        if isinstance(e, RealLit):
            return replace(e, sort=Sort.REAL)
        if isinstance(e, VarRef):
            return self.varref(e, sec)
        if isinstance(e, Not):
            return replace(e, arg=self.boolean(e.arg, sec), sort=Sort.BOOL)
        if isinstance(e, (And, Or)):
            return replace(e, args=tuple(self.boolean(a, sec) for a in e.args), sort=Sort.BOOL)
        if isinstance(e, Implies):
            return replace(e, lhs=self.boolean(e.lhs, sec), rhs=self.boolean(e.rhs, sec),
                           sort=Sort.BOOL)
        if isinstance(e, Ite):
            cond = self.boolean(e.cond, sec)
            a, b = self.unify([self.expr(e.then, sec), self.expr(e.orelse, sec)], e)
            return replace(e, cond=cond, then=a, orelse=b, sort=a.sort)
        if isinstance(e, Cmp):
            a, b = self.unify([self.expr(e.lhs, sec), self.expr(e.rhs, sec)], e)
            if a.sort is Sort.BOOL and e.op not in ("=", "!="):
                self.err("sort-mismatch", f"ordering {e.op} applied to bool operands", e)
            return replace(e, lhs=a, rhs=b, sort=Sort.BOOL)
        if isinstance(e, Arith):
            return self.arith(e, sec)
        raise TypeError(f"not an expression: {e!r}")

    def varref(self, e: VarRef, sec: Section) -> Expr:
        if e.name in self.inputs:
            sort = self.inputs[e.name]
            if e.tag is VarTag.POST:
                self.err("illegal-tag-in-section", f"input {e.name!r} cannot be primed", e)
                return replace(e, sort=sort)
        elif e.name in self.states:
            sort = self.states[e.name]
        else:
            self.err("unknown-variable", f"undeclared variable {e.name!r}", e)
            return replace(e, sort=None)
        if e.tag not in SECTION_TAGS[sec]:
            what = {VarTag.POST: "primed variable", VarTag.INPUT: "input"}.get(e.tag, "variable")
            self.err("illegal-tag-in-section",
                     f"{what} {e.name!r} not allowed in {sec.value}", e)
        return replace(e, sort=sort)

    def boolean(self, e: Expr, sec: Section) -> Expr:
        t = self.expr(e, sec)
        if t.sort is not None and t.sort is not Sort.BOOL:
            self.err("sort-mismatch", f"expected bool, got {t.sort.value}", e)
        return t

    def unify(self, args: list[Expr], node: Expr) -> list[Expr]:
        sorts = {a.sort for a in args if a.sort is not None}
        if sorts == {Sort.INT, Sort.REAL}:
            # integer literals are promoted in a real context
            args = [_promote(a) for a in args]
            sorts = {a.sort for a in args if a.sort is not None}
        if len(sorts) > 1:
            names = ", ".join(sorted(s.value for s in sorts))
            self.err("sort-mismatch", f"operands have different sorts ({names})", node)
        return args

    def arith(self, e: Arith, sec: Section) -> Expr:
        args = [self.expr(a, sec) for a in e.args]
        for a in args:
            if a.sort is Sort.BOOL:
                self.err("sort-mismatch", f"arithmetic {e.op} applied to bool", a)
        args = self.unify(args, e)
        sort = next((a.sort for a in args if a.sort is not None), None)
        if e.op == "*" and sum(not is_constant(a) for a in args) > 1:
            self.err("nonlinear-multiplication", "'*' needs all but one operand constant", e)
        if e.op in ("div", "mod"):
            if sort is Sort.REAL:
                self.err("sort-mismatch", f"{e.op} requires int operands", e)
            if not is_constant(args[1]):
                self.err("nonlinear-multiplication", f"divisor of {e.op} must be constant", e)
        return replace(e, args=tuple(args), sort=sort)


def _promote(e: Expr) -> Expr:
    if isinstance(e, IntLit):
        return RealLit(e.value, 1, span=e.span, sort=Sort.REAL)
    if isinstance(e, Arith) and e.op == "neg" and e.sort is Sort.INT and is_constant(e):
        return replace(e, args=(_promote(e.args[0]),), sort=Sort.REAL)
    return e


def typecheck(contract: Contract) -> Contract:
    """Return ``contract`` with every expression node annotated with its sort.

    Raises :class:`ContractError` listing every problem found.
    """
    ck = _Checker(contract)
    ck.check_decls()
    typed = replace(
        contract,
        assumptions=ck.section(Section.ASSUMPTIONS, contract.assumptions),
        initial_guarantees=ck.section(Section.INITIAL, contract.initial_guarantees),
        transitional_guarantees=ck.section(Section.TRANSITIONS, contract.transitional_guarantees),
        typed=True,
    )
    if ck.diags:
        raise ContractError(ck.diags)
    return typed


# --------------------------------------------------------------------------
# Evaluation


def euclid_divmod(a: int, b: int) -> tuple[int, int]:
    """Integer division with ``0 <= r < |b|``, as in SMT-LIB's Ints theory."""
    if b == 0:
        raise DivisionByZero(f"{a} div 0")
    r = a % abs(b)
    return (a - r) // b, r


_CMP = {
    "=": lambda a, b: a == b,
    "!=": lambda a, b: a != b,
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b,
}


def evaluate(e: Expr, pre: Optional[Valuation] = None, inp: Optional[Valuation] = None,
             post: Optional[Valuation] = None) -> Value:
    """Evaluate ``e`` with variables looked up by tag in ``pre``/``inp``/``post``."""
    env = {VarTag.PRE: pre, VarTag.INPUT: inp, VarTag.POST: post}

    def go(e: Expr) -> Value:
        if isinstance(e, (BoolLit, IntLit, RealLit)):
            return e.value
        if isinstance(e, VarRef):
            vals = env[e.tag]
            if vals is None or e.name not in vals:
                raise MissingValuation(f"no {e.tag.value} value for {e.name!r}")
            return vals[e.name]
        if isinstance(e, Not):
            return not go(e.arg)
        if isinstance(e, And):
            return all(go(a) for a in e.args)
        if isinstance(e, Or):
            return any(go(a) for a in e.args)
        if isinstance(e, Implies):
            return (not go(e.lhs)) or bool(go(e.rhs))
        if isinstance(e, Ite):
            return go(e.then) if go(e.cond) else go(e.orelse)
        if isinstance(e, Cmp):
            return _CMP[e.op](go(e.lhs), go(e.rhs))
        if isinstance(e, Arith):
            xs = [go(a) for a in e.args]
            if e.op == "neg":
                return -xs[0]
            if e.op == "+":
                return sum(xs[1:], xs[0])
            if e.op == "-":
                return xs[0] - xs[1]
            if e.op == "*":
                out = xs[0]
                for x in xs[1:]:
                    out = out * x
                return out
            q, r = euclid_divmod(xs[0], xs[1])
            return q if e.op == "div" else r
        raise TypeError(f"not an expression: {e!r}")

    return go(e)


def holds_A(c: Contract, s: Valuation, i: Valuation) -> bool:
    return all(evaluate(e, s, i) for e in c.assumptions)


def holds_GI(c: Contract, s: Valuation) -> bool:
    return all(evaluate(e, s) for e in c.initial_guarantees)


def holds_GT(c: Contract, s: Valuation, i: Valuation, s2: Valuation) -> bool:
    return all(evaluate(e, s, i, s2) for e in c.transitional_guarantees)


def default_value(sort: Sort) -> Value:
    return {Sort.BOOL: False, Sort.INT: 0, Sort.REAL: Fraction(0)}[sort]
