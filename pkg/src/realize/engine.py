"""The realizability decision procedure.

For ``n = 0, 1, ...`` the engine asks the solver whether

* some valid ``n``-step path from an initial state dead-ends
  (simplified base check); if so the contract is reported unrealizable,
  which may be a false positive;
* some valid ``n``-step path from an arbitrary state dead-ends
  (extend check); if not, the contract is realizable.

A satisfiable-initial-guarantees query runs once up front so that an empty
set of initial states cannot pass the base checks vacuously.
"""

from __future__ import annotations

import enum
import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .contract import Contract, Trace, Value, holds_A, holds_GI, holds_GT, typecheck
from .smt import (
    QueryKind, SmtScript, encode_base_check_prime, encode_exact_base_check,
    encode_extend_check, encode_initial_sat,
)
from .solver import SolverResult, Status, run_query

log = logging.getLogger(__name__)

DEFAULT_MAX_N = 20
DEFAULT_TIMEOUT_MS = 10_000


class TraceReconstructionError(RuntimeError):
    """A solver model did not replay as a valid path; an encoder or driver bug."""


class VerdictKind(enum.Enum):
    REALIZABLE = "realizable"
    UNREALIZABLE = "unrealizable"
    UNKNOWN = "unknown"


NO_INITIAL_STATE = "no-initial-state"
DEADLOCK = "deadlock"
BOUND_EXHAUSTED = "bound exhausted"


@dataclass(frozen=True)
class QueryRecord:
    kind: QueryKind
    index: int
    status: Status
    wall_time_ms: int


@dataclass(frozen=True)
class Options:
    max_n: int = DEFAULT_MAX_N
    timeout_ms: int = DEFAULT_TIMEOUT_MS
    solver_cmd: Optional[str] = None
    exact_base: bool = False
    dump_smt: Optional[str] = None
    parallel: bool = False

    def __post_init__(self):
        if self.max_n < 0:
            raise ValueError("max_n must be >= 0")
        if self.timeout_ms <= 0:
            raise ValueError("timeout_ms must be > 0")


@dataclass(frozen=True)
class Verdict:
    kind: VerdictKind
    contract: str
    n: Optional[int] = None
    reason: Optional[str] = None
    trace: Optional[Trace] = None
    query: Optional[QueryKind] = None
    records: tuple[QueryRecord, ...] = ()
    exact_base: tuple[tuple[int, Status], ...] = field(default=())

    @property
    def queries(self) -> int:
        return len(self.records)

    @property
    def total_ms(self) -> int:
        return sum(r.wall_time_ms for r in self.records)

    @property
    def realizable(self) -> bool:
        return self.kind is VerdictKind.REALIZABLE

    @property
    def unrealizable(self) -> bool:
        return self.kind is VerdictKind.UNREALIZABLE


def build_counterexample(model: dict, c: Contract, k: int) -> Trace:
    """Rebuild the dead-ending ``k``-path from a base-check model and replay it."""
    try:
        states = [{d.name: model[f"s{j}${d.name}"] for d in c.states} for j in range(k + 1)]
        inputs = [{d.name: model[f"i{j}${d.name}"] for d in c.inputs} for j in range(k)]
        pending = {d.name: model[f"w${d.name}"] for d in c.inputs}
    except KeyError as exc:
        raise TraceReconstructionError(f"model lacks constant {exc.args[0]}") from None
    if not holds_GI(c, states[0]):
        raise TraceReconstructionError(f"s0 = {states[0]} violates the initial guarantees")
    for j in range(k):
        if not holds_A(c, states[j], inputs[j]):
            raise TraceReconstructionError(f"step {j}: assumptions fail for {inputs[j]}")
        if not holds_GT(c, states[j], inputs[j], states[j + 1]):
            raise TraceReconstructionError(f"step {j}: transitional guarantees fail")
    if not holds_A(c, states[k], pending):
        raise TraceReconstructionError(f"pending input {pending} violates the assumptions")
    return Trace(tuple(zip(states[:k], inputs)), states[k], pending)


class Engine:
    """One realizability run for one contract."""

    def __init__(self, contract: Contract, opts: Optional[Options] = None):
        self.contract = contract if contract.typed else typecheck(contract)
        self.opts = opts or Options()
        self.records: list[QueryRecord] = []
        self.exact: list[tuple[int, Status]] = []

    def _solve(self, script: SmtScript) -> SolverResult:
        if self.opts.dump_smt:
            os.makedirs(self.opts.dump_smt, exist_ok=True)
            with open(os.path.join(self.opts.dump_smt, script.filename), "w") as f:
                f.write(script.text)
        res = run_query(script, self.opts.solver_cmd, self.opts.timeout_ms)
        log.debug("%s n=%d: %s (%d ms)", script.kind.value, script.index, res.status.value,
                  res.wall_time_ms)
        return res

    def _record(self, script: SmtScript, res: SolverResult) -> None:
        self.records.append(QueryRecord(script.kind, script.index, res.status, res.wall_time_ms))

    def _verdict(self, kind: VerdictKind, **kw) -> Verdict:
        return Verdict(kind, self.contract.name, records=tuple(self.records),
                       exact_base=tuple(self.exact), **kw)

    def _unknown(self, script: SmtScript, res: SolverResult) -> Verdict:
        return self._verdict(VerdictKind.UNKNOWN, n=script.index, reason=res.reason,
                             query=script.kind)

    def run(self) -> Verdict:
        c = self.contract
        init = encode_initial_sat(c)
        res = self._solve(init)
        self._record(init, res)
        if res.status is Status.UNKNOWN:
            return self._unknown(init, res)
        if res.status is Status.UNSAT:
            return self._verdict(VerdictKind.UNREALIZABLE, reason=NO_INITIAL_STATE,
                                 query=QueryKind.INITIAL_SAT)

        pool = ThreadPoolExecutor(max_workers=2) if self.opts.parallel else None
        try:
            for n in range(self.opts.max_n + 1):
                base = encode_base_check_prime(c, n)
                ext = encode_extend_check(c, n)
                if pool:
                    fb, fe = pool.submit(self._solve, base), pool.submit(self._solve, ext)
                    base_res, ext_res = fb.result(), fe.result()
                    self._record(base, base_res)
                    self._record(ext, ext_res)
                else:
                    base_res, ext_res = self._solve(base), None
                    self._record(base, base_res)
                if self.opts.exact_base:
                    exact = encode_exact_base_check(c, n)
                    exact_res = self._solve(exact)
                    self._record(exact, exact_res)
                    self.exact.append((n, exact_res.status))
                if base_res.status is Status.SAT:
                    trace = build_counterexample(base_res.model, c, n)
                    return self._verdict(VerdictKind.UNREALIZABLE, n=n, reason=DEADLOCK,
                                         trace=trace, query=QueryKind.BASE_CHECK_PRIME)
                if base_res.status is Status.UNKNOWN:
                    return self._unknown(base, base_res)
                if ext_res is None:
                    ext_res = self._solve(ext)
                    self._record(ext, ext_res)
                if ext_res.status is Status.UNSAT:
                    return self._verdict(VerdictKind.REALIZABLE, n=n)
                if ext_res.status is Status.UNKNOWN:
                    return self._unknown(ext, ext_res)
        finally:
            if pool:
                pool.shutdown()
        return self._verdict(VerdictKind.UNKNOWN, n=self.opts.max_n, reason=BOUND_EXHAUSTED)


def check_realizability(contract: Contract, opts: Optional[Options] = None, **kw) -> Verdict:
    """Decide realizability of ``contract``; keyword arguments override ``opts``."""
    if kw:
        base = opts or Options()
        opts = Options(**{**base.__dict__, **kw})
    return Engine(contract, opts).run()


# --------------------------------------------------------------------------
# Reports


def _json_value(v: Value):
    if isinstance(v, Fraction):
        return str(v) if v.denominator != 1 else f"{v.numerator}.0"
    return v


def _json_valuation(val: Optional[dict]):
    if val is None:
        return None
    return {k: _json_value(v) for k, v in val.items()}


def _fmt_value(v: Value) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)


def _fmt_valuation(val: dict) -> str:
    return ", ".join(f"{k}={_fmt_value(v)}" for k, v in val.items()) or "-"


def verdict_to_json(v: Verdict) -> dict:
    trace = None
    pending = None
    if v.trace is not None:
        trace = [{"state": _json_valuation(s), "input": _json_valuation(i)}
                 for s, i in v.trace.steps]
        trace.append({"state": _json_valuation(v.trace.final_state),
                      "input": _json_valuation(v.trace.pending_input)})
        pending = _json_valuation(v.trace.pending_input)
    reason = v.reason
    if v.kind is VerdictKind.UNKNOWN and v.query is not None:
        reason = f"{v.reason} ({v.query.value})"
    return {
        "contract": v.contract,
        "verdict": v.kind.value,
        "n": v.n,
        "reason": reason,
        "trace": trace,
        "pending_input": pending,
        "queries": v.queries,
        "time_ms": v.total_ms,
    }


def error_json(contract: str, message: str) -> dict:
    return {"contract": contract, "verdict": "error", "n": None, "reason": message,
            "trace": None, "pending_input": None, "queries": 0, "time_ms": 0}


def _trace_table(t: Trace) -> list[str]:
    rows = [(str(j), _fmt_valuation(s), _fmt_valuation(i)) for j, (s, i) in enumerate(t.steps)]
    rows.append((str(t.depth), _fmt_valuation(t.final_state),
                 _fmt_valuation(t.pending_input) + "  <- no successor"))
    w0 = max(4, *(len(r[0]) for r in rows))
    w1 = max(5, *(len(r[1]) for r in rows))
    out = [f"  {'step':<{w0}}  {'state':<{w1}}  input"]
    out += [f"  {a:<{w0}}  {b:<{w1}}  {c}" for a, b, c in rows]
    return out


def report(v: Verdict, fmt: str = "human") -> str:
    if fmt == "json":
        return json.dumps(verdict_to_json(v))
    if fmt != "human":
        raise ValueError(f"unknown report format {fmt!r}")
    if v.kind is VerdictKind.REALIZABLE:
        lines = [f"REALIZABLE (n={v.n})"]
    elif v.kind is VerdictKind.UNKNOWN:
        lines = [f"UNKNOWN: {v.reason} at n={v.n}"]
        if v.query is not None:
            lines.append(f"  failing query: {v.query.value}")
    elif v.reason == NO_INITIAL_STATE:
        lines = ["UNREALIZABLE: no state satisfies the initial guarantees"]
    else:
        lines = [f"UNREALIZABLE: deadlock at depth {v.n}"]
        lines += _trace_table(v.trace)
        lines.append(f"  pending input {_fmt_valuation(v.trace.pending_input).replace('=', ' = ')}"
                     " admits no post-state satisfying the transitional guarantees")
    for n, status in v.exact_base:
        lines.append(f"  exact base check n={n}: {status.value}")
    lines.append(f"  {v.queries} queries, {v.total_ms} ms")
    return "\n".join(lines)
