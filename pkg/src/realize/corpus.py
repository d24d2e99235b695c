"""Seeded random contracts over small finite ranges.

Each generated contract carries its ranges as explicit guards (inputs in
the assumptions, initial states in the initial guarantees, post-states in
the transitional guarantees), so the unbounded reading used by the solver
and the finite reading used by the oracle describe the same game.
"""

from __future__ import annotations

import random
from typing import Iterator, Optional

from .contract import (
    And, Arith, BoolLit, Cmp, Contract, Expr, Implies, IntLit, Ite, Not, Or, Sort, VarDecl,
    VarRef, VarTag, typecheck,
)
from .oracle import BoolDomain, FiniteContract, IntRange
from .parser import parse_contract

LO, HI = -2, 2
MAX_VARS = 3


def range_guards(name: str, dom: IntRange, tag: VarTag) -> list[Expr]:
    v = VarRef(name, tag)
    return [Cmp(">=", v, IntLit(dom.lo)), Cmp("<=", v, IntLit(dom.hi))]


class _Gen:
    def __init__(self, rng: random.Random, decls: dict[str, tuple[Sort, str]]):
        self.rng = rng
        self.decls = decls  # name -> (sort, "input"|"state")

    def refs(self, sort: Sort, tags: tuple[VarTag, ...]) -> list[VarRef]:
        out = []
        for name, (s, role) in sorted(self.decls.items()):
            if s is not sort:
                continue
            for t in tags:
                if (role == "input") == (t is VarTag.INPUT):
                    out.append(VarRef(name, t))
        return out

    def const(self) -> Expr:
        return IntLit(self.rng.randint(LO, HI))

    def term(self, tags, depth: int) -> Expr:
        rng = self.rng
        ints = self.refs(Sort.INT, tags)
        if depth <= 0 or rng.random() < 0.4:
            if ints and rng.random() < 0.75:
                return rng.choice(ints)
            return self.const()
        op = rng.choice(["+", "-", "*", "neg", "ite", "mod"])
        if op == "neg":
            return Arith("neg", (self.term(tags, depth - 1),))
        if op == "*":
            return Arith("*", (IntLit(rng.choice([-2, -1, 2, 3])), self.term(tags, depth - 1)))
        if op == "mod":
            return Arith("mod", (self.term(tags, depth - 1), IntLit(rng.choice([2, 3, -2]))))
        if op == "ite":
            return Ite(self.formula(tags, depth - 1), self.term(tags, depth - 1),
                       self.term(tags, depth - 1))
        return Arith(op, (self.term(tags, depth - 1), self.term(tags, depth - 1)))

    def atom(self, tags, depth: int) -> Expr:
        rng = self.rng
        bools = self.refs(Sort.BOOL, tags)
        if bools and rng.random() < 0.35:
            v = rng.choice(bools)
            return Not(v) if rng.random() < 0.3 else v
        if not self.refs(Sort.INT, tags) and not bools:
            return BoolLit(rng.random() < 0.8)
        if not self.refs(Sort.INT, tags):
            return rng.choice(bools)
        op = rng.choice(["=", "!=", "<", "<=", ">", ">=", "="])
        return Cmp(op, self.term(tags, depth), self.term(tags, min(depth, 1)))

    def formula(self, tags, depth: int) -> Expr:
        rng = self.rng
        if depth <= 0 or rng.random() < 0.5:
            return self.atom(tags, 1)
        kind = rng.choice(["and", "or", "not", "=>"])
        a = self.formula(tags, depth - 1)
        if kind == "not":
            return Not(a)
        b = self.formula(tags, depth - 1)
        if kind == "=>":
            return Implies(a, b)
        return (And if kind == "and" else Or)((a, b))


def random_finite_contract(rng: random.Random, name: str = "rand") -> FiniteContract:
    nvars = rng.randint(1, MAX_VARS)
    decls: dict[str, tuple[Sort, str]] = {}
    ranges: dict = {}
    n_states = rng.randint(1, nvars)
    for k in range(nvars):
        role = "state" if k < n_states else "input"
        vname = ("x", "y", "z")[k] if role == "state" else ("a", "b", "c")[k - n_states]
        sort = Sort.BOOL if rng.random() < 0.3 else Sort.INT
        decls[vname] = (sort, role)
        if sort is Sort.INT:
            lo = rng.randint(LO, HI - 1)
            hi = rng.randint(lo + 1, HI)
            ranges[vname] = IntRange(lo, hi)
        else:
            ranges[vname] = BoolDomain()
    g = _Gen(rng, decls)
    inputs = tuple(VarDecl(n, s) for n, (s, r) in sorted(decls.items()) if r == "input")
    states = tuple(VarDecl(n, s) for n, (s, r) in sorted(decls.items()) if r == "state")

    assumptions: list[Expr] = []
    initial: list[Expr] = []
    transitions: list[Expr] = []
    for d in inputs:
        if d.sort is Sort.INT:
            assumptions += range_guards(d.name, ranges[d.name], VarTag.INPUT)
    for d in states:
        if d.sort is Sort.INT:
            initial += range_guards(d.name, ranges[d.name], VarTag.PRE)
            transitions += range_guards(d.name, ranges[d.name], VarTag.POST)

    a_tags = (VarTag.PRE, VarTag.INPUT)
    t_tags = (VarTag.PRE, VarTag.INPUT, VarTag.POST)
    if inputs and rng.random() < 0.4:
        assumptions.append(g.formula(a_tags, 1))
    if rng.random() < 0.6:
        initial.append(g.formula((VarTag.PRE,), 1))
    for _ in range(rng.randint(1, 2)):
        transitions.append(g.formula(t_tags, 2))

    c = Contract(name, inputs, states, tuple(assumptions), tuple(initial), tuple(transitions))
    return FiniteContract(typecheck(c), ranges)


def corpus(size: int, seed: int = 0) -> Iterator[FiniteContract]:
    rng = random.Random(seed)
    for k in range(size):
        yield random_finite_contract(rng, f"rand{seed}_{k}")


# Hand-written members shared by tests and the acceptance suite.

DOUBLER = """\
contract doubler
  inputs:  in : int;
  state:   out : int;
  assumptions:
  initial:     true;
  transitions: out' = 2 * in; out' >= 0;
end
"""

DOUBLER_FIXED = """\
contract doubler_fixed
  inputs:  in : int;
  state:   out : int;
  assumptions: in >= 0;
  initial:     true;
  transitions: out' = 2 * in; out' >= 0;
end
"""

# Realizable (x = 0 is viable) yet the simplified base check fails at x = 1.
FALSE_POSITIVE = """\
contract false_positive
  inputs:  tick : bool;
  state:   x : int;
  assumptions:
  initial:     x = 0 or x = 1;
  transitions: (x = 0 => x' = 0) and (x = 1 => false);
end
"""

NO_INITIAL = """\
contract no_initial
  state:   x : int;
  initial: x > 0 and x < 0;
  transitions: x' = x;
end
"""

# The deadlock only shows after one warm-up step.
COUNTER = """\
contract counter
  state:   x : int;
  initial: x = 0;
  transitions: x' = x + 1; x' <= 1;
end
"""


def named(text: str, ranges: Optional[dict] = None) -> FiniteContract:
    return FiniteContract(typecheck(parse_contract(text)), ranges or {})
