"""Explicit-state semantics over finite variable ranges.

This module evaluates realizability notions by brute-force enumeration:
viability as a greatest fixpoint, finite viability, extendability,
reachability, and the four conditions a transition system must meet to
realize a contract.  It is slow by design and serves as ground truth for
the SMT-based engine at small scale.

States and inputs are tuples of values ordered by variable name; use
:meth:`FiniteContract.state_valuation` to turn one into a dict.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Iterable, Mapping, Optional, Union

from .contract import Contract, Sort, holds_A, holds_GI, holds_GT, typecheck

MAX_SPACE = 10 ** 6

State = tuple
Inputs = tuple


class OracleError(ValueError):
    pass


class DomainTooLarge(OracleError):
    pass


class NotRealizable(OracleError):
    pass


@dataclass(frozen=True)
class BoolDomain:
    @property
    def values(self) -> tuple:
        return (False, True)

    def __str__(self) -> str:
        return "bool"


@dataclass(frozen=True)
class IntRange:
    lo: int
    hi: int

    def __post_init__(self):
        if self.lo > self.hi:
            raise OracleError(f"empty range {self.lo}..{self.hi}")

    @property
    def values(self) -> tuple:
        return tuple(range(self.lo, self.hi + 1))

    def __str__(self) -> str:
        return f"{self.lo}..{self.hi}"


Domain = Union[BoolDomain, IntRange]

_RANGE_ARG = re.compile(r"^\s*([A-Za-z_]\w*)\s*=\s*(?:(bool)|(-?\d+)\s*\.\.\s*(-?\d+))\s*$")


def parse_range_arg(text: str) -> tuple[str, Domain]:
    """``x=-2..2`` or ``b=bool``."""
    m = _RANGE_ARG.match(text)
    if not m:
        raise OracleError(f"bad range {text!r}; expected NAME=LO..HI or NAME=bool")
    if m.group(2):
        return m.group(1), BoolDomain()
    return m.group(1), IntRange(int(m.group(3)), int(m.group(4)))


def parse_ranges(text: str) -> dict[str, Domain]:
    """Read a ``.ranges`` sidecar: one ``var lo hi`` or ``var bool`` per line."""
    out: dict[str, Domain] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("--", 1)[0].split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        try:
            if len(parts) == 2 and parts[1] == "bool":
                out[parts[0]] = BoolDomain()
            elif len(parts) == 3:
                out[parts[0]] = IntRange(int(parts[1]), int(parts[2]))
            else:
                raise ValueError
        except ValueError:
            raise OracleError(f"line {lineno}: expected 'var lo hi' or 'var bool'") from None
    return out


class FiniteContract:
    """A contract paired with a finite range for every variable.

    Boolean variables default to ``{false, true}``; integer variables need an
    explicit :class:`IntRange`.  Real variables are rejected.
    """

    def __init__(self, contract: Contract, ranges: Optional[Mapping[str, Domain]] = None):
        if not contract.typed:
            contract = typecheck(contract)
        ranges = dict(ranges or {})
        self.contract = contract
        self.ranges: dict[str, Domain] = {}
        for d in contract.inputs + contract.states:
            if d.sort is Sort.REAL:
                raise OracleError(f"real variable {d.name!r}: the oracle handles bool/int only")
            dom = ranges.pop(d.name, None)
            if dom is None:
                if d.sort is not Sort.BOOL:
                    raise OracleError(f"no range given for int variable {d.name!r}")
                dom = BoolDomain()
            if (d.sort is Sort.BOOL) != isinstance(dom, BoolDomain):
                raise OracleError(f"range {dom} does not match sort of {d.name!r}")
            self.ranges[d.name] = dom
        if ranges:
            raise OracleError(f"ranges given for undeclared variables: {sorted(ranges)}")
        self.state_names = tuple(sorted(contract.state_names))
        self.input_names = tuple(sorted(contract.input_names))
        for kind, names in (("state", self.state_names), ("input", self.input_names)):
            size = 1
            for n in names:
                size *= len(self.ranges[n].values)
            if size > MAX_SPACE:
                raise DomainTooLarge(f"{kind} space has {size} elements (limit {MAX_SPACE})")
        self._assume: dict = {}
        self._succ: dict = {}
        self._fv_memo: dict = {}
        self._ext_memo: dict = {}

    def __repr__(self) -> str:
        rs = ", ".join(f"{k}={v}" for k, v in sorted(self.ranges.items()))
        return f"FiniteContract({self.contract.name}, {rs})"

    @cached_property
    def states(self) -> tuple[State, ...]:
        return tuple(itertools.product(*(self.ranges[n].values for n in self.state_names)))

    @cached_property
    def inputs(self) -> tuple[Inputs, ...]:
        return tuple(itertools.product(*(self.ranges[n].values for n in self.input_names)))

    def state_valuation(self, s: State) -> dict:
        return dict(zip(self.state_names, s))

    def input_valuation(self, i: Inputs) -> dict:
        return dict(zip(self.input_names, i))

    def state_of(self, valuation: Mapping) -> State:
        return tuple(valuation[n] for n in self.state_names)

    def initial(self, s: State) -> bool:
        return holds_GI(self.contract, self.state_valuation(s))

    def assume(self, s: State, i: Inputs) -> bool:
        key = (s, i)
        if key not in self._assume:
            self._assume[key] = holds_A(self.contract, self.state_valuation(s),
                                        self.input_valuation(i))
        return self._assume[key]

    def guarantee(self, s: State, i: Inputs, s2: State) -> bool:
        return s2 in self.successors(s, i)

    def successors(self, s: State, i: Inputs) -> frozenset:
        """All in-range ``s2`` with ``G_T(s, i, s2)``."""
        key = (s, i)
        if key not in self._succ:
            pre, inp = self.state_valuation(s), self.input_valuation(i)
            self._succ[key] = frozenset(
                s2 for s2 in self.states
                if holds_GT(self.contract, pre, inp, self.state_valuation(s2)))
        return self._succ[key]

    def valid_inputs(self, s: State) -> Iterable[Inputs]:
        return (i for i in self.inputs if self.assume(s, i))


# --------------------------------------------------------------------------
# Viability


def viable_iterates(fc: FiniteContract) -> list[frozenset]:
    """``V_0 = all states``, ``V_{j+1}`` keeps states whose every valid input
    has a ``G_T`` successor in ``V_j``; stops at the first repeat."""
    current = frozenset(fc.states)
    out = [current]
    while True:
        nxt = frozenset(
            s for s in current
            if all(fc.successors(s, i) & current for i in fc.valid_inputs(s)))
        if nxt == current:
            return out
        out.append(nxt)
        current = nxt


def viable_set(fc: FiniteContract) -> frozenset:
    return viable_iterates(fc)[-1]


def check_realizable_oracle(fc: FiniteContract) -> bool:
    """Some state meets the initial guarantees and is viable."""
    v = viable_set(fc)
    return any(fc.initial(s) for s in v)


def finitely_viable(fc: FiniteContract, n: int, s: State, _memo: Optional[dict] = None) -> bool:
    """``G_T`` can be met for ``n`` more steps from ``s`` whatever valid inputs arrive."""
    memo = fc._fv_memo if _memo is None else _memo
    if n == 0:
        return True
    key = (n, s)
    if key not in memo:
        memo[key] = all(
            any(finitely_viable(fc, n - 1, s2, memo) for s2 in fc.successors(s, i))
            for i in fc.valid_inputs(s))
    return memo[key]


def extendable(fc: FiniteContract, n: int, s: State, _memo: Optional[dict] = None) -> bool:
    """Every valid path of length ``n`` from ``s`` can take one more step."""
    memo = fc._ext_memo if _memo is None else _memo
    key = (n, s)
    if key not in memo:
        if n == 0:
            memo[key] = all(fc.successors(s, i) for i in fc.valid_inputs(s))
        else:
            memo[key] = all(extendable(fc, n - 1, s2, memo)
                            for i in fc.valid_inputs(s) for s2 in fc.successors(s, i))
    return memo[key]


# --------------------------------------------------------------------------
# Transition systems and realizations


@dataclass(frozen=True)
class TransitionSystem:
    initial: Callable[[State], bool]
    transition: Callable[[State, Inputs, State], bool]

    @classmethod
    def from_sets(cls, initial: Iterable[State], transitions: Iterable[tuple]) -> "TransitionSystem":
        init = frozenset(initial)
        rel = frozenset(transitions)
        return cls(init.__contains__, lambda s, i, s2: (s, i, s2) in rel)


def _post(fc: FiniteContract, ts: TransitionSystem, s: State, i: Inputs) -> list[State]:
    return [s2 for s2 in fc.states if ts.transition(s, i, s2)]


def reachable_set(fc: FiniteContract, ts: TransitionSystem) -> frozenset:
    """Initial states plus everything reached by steps whose input meets the assumptions."""
    seen = {s for s in fc.states if ts.initial(s)}
    frontier = list(seen)
    while frontier:
        s = frontier.pop()
        for i in fc.valid_inputs(s):
            for s2 in _post(fc, ts, s, i):
                if s2 not in seen:
                    seen.add(s2)
                    frontier.append(s2)
    return frozenset(seen)


@dataclass(frozen=True)
class Realization:
    initial_implies_gi: bool
    reachable_steps_meet_gt: bool
    has_initial_state: bool
    reachable_never_stuck: bool

    @property
    def conditions(self) -> tuple[bool, bool, bool, bool]:
        return (self.initial_implies_gi, self.reachable_steps_meet_gt,
                self.has_initial_state, self.reachable_never_stuck)

    @property
    def holds(self) -> bool:
        return all(self.conditions)

    def __bool__(self) -> bool:
        return self.holds


def check_realization(fc: FiniteContract, ts: TransitionSystem) -> Realization:
    reach = reachable_set(fc, ts)
    c1 = all(fc.initial(s) for s in fc.states if ts.initial(s))
    c3 = any(ts.initial(s) for s in fc.states)
    c2 = c4 = True
    for s in reach:
        for i in fc.valid_inputs(s):
            post = _post(fc, ts, s, i)
            if not post:
                c4 = False
            if any(not fc.guarantee(s, i, s2) for s2 in post):
                c2 = False
    return Realization(c1, c2, c3, c4)


def witness_transition(fc: FiniteContract) -> TransitionSystem:
    """Build ``I = {s0}``, ``T = G_T ∧ viable(post)`` from the first viable initial state.

    Raises :class:`NotRealizable` when no initial state is viable.
    """
    v = viable_set(fc)
    s0 = next((s for s in fc.states if s in v and fc.initial(s)), None)
    if s0 is None:
        raise NotRealizable(f"{fc.contract.name}: no viable state meets the initial guarantees")
    return TransitionSystem(
        initial=lambda s: s == s0,
        transition=lambda s, i, s2: fc.guarantee(s, i, s2) and s2 in v,
    )


def witness_initial_state(fc: FiniteContract) -> State:
    v = viable_set(fc)
    for s in fc.states:
        if s in v and fc.initial(s):
            return s
    raise NotRealizable(fc.contract.name)
