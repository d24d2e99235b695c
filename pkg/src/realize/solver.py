"""Run an external SMT-LIB2 solver on a script and read back its answer."""

from __future__ import annotations

import enum
import logging
import os
import re
import shlex
import subprocess
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Union

from .contract import Sort, Value, default_value
from .smt import ModelVar, SmtScript

log = logging.getLogger(__name__)

DEFAULT_SOLVER = "z3 -in"
SOLVER_ENV = "REALIZE_SOLVER"
KILL_GRACE_S = 2.0


class SolverSpawnError(RuntimeError):
    pass


class SolverProtocolError(RuntimeError):
    pass


class ModelParseError(SolverProtocolError):
    pass


class Status(enum.Enum):
    SAT = "sat"
    UNSAT = "unsat"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class SolverResult:
    status: Status
    model: Optional[dict[str, Value]] = None
    reason: Optional[str] = None
    stderr_tail: str = ""
    wall_time_ms: int = 0
    defaulted: tuple[str, ...] = field(default=())

    def __post_init__(self):
        if (self.model is not None) != (self.status is Status.SAT):
            raise ValueError("a model is present exactly when the status is sat")


def default_solver_cmd() -> str:
    return os.environ.get(SOLVER_ENV) or DEFAULT_SOLVER


# --------------------------------------------------------------------------
# S-expressions

_SEXP_TOKEN = re.compile(r'\s+|;[^\n]*|\(|\)|"(?:[^"]|"")*"|\|[^|]*\||[^\s()";|]+')


def read_sexps(text: str) -> list:
    """Parse ``text`` into nested lists of atom strings."""
    stack: list[list] = [[]]
    pos = 0
    while pos < len(text):
        m = _SEXP_TOKEN.match(text, pos)
        if m is None:
            raise SolverProtocolError(f"cannot tokenize solver output at {text[pos:pos + 20]!r}")
        tok = m.group()
        pos = m.end()
        if tok[0].isspace() or tok[0] == ";":
            continue
        if tok == "(":
            stack.append([])
        elif tok == ")":
            if len(stack) == 1:
                raise SolverProtocolError("unbalanced ')' in solver output")
            done = stack.pop()
            stack[-1].append(done)
        else:
            if tok.startswith("|") and tok.endswith("|"):
                tok = tok[1:-1]
            stack[-1].append(tok)
    if len(stack) != 1:
        raise SolverProtocolError("unbalanced '(' in solver output")
    return stack[0]


def _value(term) -> Value:
    if term == "true":
        return True
    if term == "false":
        return False
    if isinstance(term, str):
        try:
            return int(term) if re.fullmatch(r"\d+", term) else Fraction(term)
        except ValueError:
            raise ModelParseError(f"not a literal value: {term!r}") from None
    if len(term) == 2 and term[0] == "-":
        return -_value(term[1])
    if len(term) == 3 and term[0] == "/":
        q = Fraction(_value(term[1])) / Fraction(_value(term[2]))
        return q
    if len(term) == 2 and term[0] == "to_real":
        return Fraction(_value(term[1]))
    raise ModelParseError(f"unsupported value term {term!r}")


def _coerce(v: Value, sort: Sort) -> Value:
    if sort is Sort.BOOL:
        if not isinstance(v, bool):
            raise ModelParseError(f"expected Bool value, got {v!r}")
        return v
    if isinstance(v, bool):
        raise ModelParseError(f"expected {sort.value} value, got {v!r}")
    if sort is Sort.INT:
        if Fraction(v).denominator != 1:
            raise ModelParseError(f"expected Int value, got {v!r}")
        return int(v)
    return Fraction(v)


def parse_model(model, model_vars: Iterable[ModelVar] = ()) -> tuple[dict[str, Value], list[str]]:
    """Extract ``define-fun`` constants from a model.

    ``model`` is either the raw text or an already-read s-expression.
    Entries outside ``model_vars`` are ignored (unless ``model_vars`` is
    empty, in which case every nullary definition is kept).  Declared
    constants the solver left out get their sort's default and are returned
    in the second component.
    """
    if isinstance(model, str):
        forms = read_sexps(model)
        if len(forms) == 1 and isinstance(forms[0], list):
            model = forms[0]
        else:
            model = forms
    entries = model[1:] if model and model[0] == "model" else model
    wanted = {mv.smt_name: mv for mv in model_vars}
    values: dict[str, Value] = {}
    for entry in entries:
        if not isinstance(entry, list) or not entry or entry[0] != "define-fun":
            raise ModelParseError(f"unexpected model entry {entry!r}")
        if len(entry) != 5:
            raise ModelParseError(f"malformed define-fun {entry!r}")
        _, name, params, _sort, body = entry
        if params:
            continue  # functions are not part of our models
        if wanted and name not in wanted:
            continue
        v = _value(body)
        values[name] = _coerce(v, wanted[name].sort) if wanted else v
    defaulted = []
    for mv in wanted.values():
        if mv.smt_name not in values:
            values[mv.smt_name] = default_value(mv.sort)
            defaulted.append(mv.smt_name)
    if defaulted:
        log.warning("model omitted %s; using defaults", ", ".join(defaulted))
    return values, defaulted


# --------------------------------------------------------------------------


def _interpret(stdout: str, model_vars, stderr_tail: str, ms: int) -> SolverResult:
    forms = read_sexps(stdout)
    status = None
    idx = 0
    for idx, form in enumerate(forms):
        if form in ("sat", "unsat", "unknown"):
            status = Status(form)
            break
        if isinstance(form, list) and form and form[0] == "error":
            raise SolverProtocolError(f"solver error before status: {' '.join(map(str, form[1:]))}")
        raise SolverProtocolError(f"unexpected solver output {form!r}")
    if status is None:
        raise SolverProtocolError(f"no status in solver output {stdout[:200]!r}; "
                                  f"stderr: {stderr_tail}")
    if status is Status.SAT:
        rest = [f for f in forms[idx + 1:] if not (isinstance(f, list) and f[:1] == ["error"])]
        model_form = rest[0] if rest and isinstance(rest[0], list) else []
        model, defaulted = parse_model(model_form, model_vars)
        return SolverResult(status, model, None, stderr_tail, ms, tuple(defaulted))
    reason = "solver returned unknown" if status is Status.UNKNOWN else None
    return SolverResult(status, None, reason, stderr_tail, ms)


def run_query(script: Union[SmtScript, str], solver_cmd: Optional[str] = None,
              timeout_ms: int = 10_000) -> SolverResult:
    """Feed ``script`` to one fresh solver process and classify the answer."""
    cmd = shlex.split(solver_cmd or default_solver_cmd())
    text = script.text if isinstance(script, SmtScript) else script
    model_vars = script.model_vars if isinstance(script, SmtScript) else ()
    start = time.monotonic()
    try:
        proc = subprocess.Popen(cmd, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
                                stderr=subprocess.PIPE, text=True)
    except OSError as exc:
        raise SolverSpawnError(f"cannot start solver {cmd!r}: {exc}") from exc
    try:
        out, err = proc.communicate(text, timeout=timeout_ms / 1000)
    except subprocess.TimeoutExpired:
        proc.kill()
        try:
            out, err = proc.communicate(timeout=KILL_GRACE_S)
        except subprocess.TimeoutExpired:
            out, err = "", ""
        ms = int((time.monotonic() - start) * 1000)
        return SolverResult(Status.UNKNOWN, None, "timeout", (err or "")[-500:], ms)
    ms = int((time.monotonic() - start) * 1000)
    return _interpret(out, model_vars, err[-500:], ms)
