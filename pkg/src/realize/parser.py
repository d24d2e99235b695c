"""Reader and printer for the ``.ctr`` contract language.

::

    contract doubler
      inputs:      in : int;
      state:       out : int;
      assumptions:
      initial:     true;
      transitions: out' = 2 * in; out' >= 0;
    end

Binding strength, loosest first: ``if``, ``=>`` (right associative),
``or``, ``and``, ``not``, comparisons (non associative), ``+ -``,
``* div mod``, unary minus.  ``--`` starts a comment.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Optional

from .contract import (
    And, Arith, BoolLit, Cmp, Contract, ContractError, Diagnostic, Expr, Implies, IntLit,
    Ite, Not, Or, RealLit, Sort, SourceSpan, VarDecl, VarRef, VarTag,
)

KEYWORDS = {
    "contract", "end", "inputs", "state", "assumptions", "initial", "transitions",
    "bool", "int", "real", "true", "false", "and", "or", "not", "if", "then", "else",
    "div", "mod",
}
SECTIONS = ("inputs", "state", "assumptions", "initial", "transitions")
SORTS = {"bool": Sort.BOOL, "int": Sort.INT, "real": Sort.REAL}

_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r\f\v]+|--[^\n]*)
  | (?P<nl>\n)
  | (?P<rat>\d+/\d+)
  | (?P<dec>\d+\.\d+)
  | (?P<int>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>=>|<=|>=|!=|<>|[-+*=<>();:'])
""", re.VERBOSE)


@dataclass(frozen=True)
class Token:
    kind: str  # ident, keyword, int, dec, rat, op, eof
    text: str
    span: SourceSpan


class _Abort(Exception):
    pass


def tokenize(text: str) -> tuple[list[Token], list[Diagnostic]]:
    toks: list[Token] = []
    diags: list[Diagnostic] = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        col = pos - line_start + 1
        if m is None:
            diags.append(Diagnostic("lex-error", f"unexpected character {text[pos]!r}",
                                    SourceSpan(line, col)))
            pos += 1
            continue
        kind = m.lastgroup
        s = m.group()
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind != "ws":
            if kind == "ident" and s in KEYWORDS:
                kind = "keyword"
            toks.append(Token(kind, s, SourceSpan(line, col, len(s))))
        pos = m.end()
    toks.append(Token("eof", "", SourceSpan(line, pos - line_start + 1)))
    return toks, diags


def _join(a: SourceSpan, b: SourceSpan) -> SourceSpan:
    if a.line != b.line:
        return a
    return SourceSpan(a.line, a.column, max(1, b.column + b.length - a.column))


class _Parser:
    def __init__(self, toks: list[Token]):
        self.toks = toks
        self.i = 0
        self.diags: list[Diagnostic] = []
        self.last = toks[0]

    # -- token helpers
    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def at(self, *texts: str) -> bool:
        return self.tok.kind in ("op", "keyword") and self.tok.text in texts

    def at_section(self) -> bool:
        return (self.tok.kind == "keyword" and self.tok.text in SECTIONS
                and self.toks[self.i + 1].text == ":")

    def advance(self) -> Token:
        t = self.tok
        if t.kind != "eof":
            self.i += 1
        self.last = t
        return t

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.fail(f"expected {text!r}")
        return self.advance()

    def fail(self, msg: str):
        t = self.tok
        found = "end of input" if t.kind == "eof" else repr(t.text)
        self.diags.append(Diagnostic("syntax-error", f"{msg}, found {found}", t.span))
        raise _Abort

    def recover(self) -> None:
        """Skip to just past the next ``;`` (or to a section boundary)."""
        while self.tok.kind != "eof" and not self.at(";", "end") and not self.at_section():
            self.advance()
        if self.at(";"):
            self.advance()

    # -- contract structure
    def contract(self) -> Optional[Contract]:
        try:
            self.expect("contract")
            if self.tok.kind != "ident":
                self.fail("expected contract name")
            name = self.advance().text
        except _Abort:
            return None
        sections: dict[str, list] = {}
        while not self.at("end") and self.tok.kind != "eof":
            if not self.at_section():
                try:
                    self.fail("expected a section keyword or 'end'")
                except _Abort:
                    self.recover()
                    continue
            kw = self.advance()
            self.advance()  # ':'
            if kw.text in sections:
                self.diags.append(Diagnostic("duplicate-section",
                                             f"section {kw.text!r} appears twice", kw.span))
            items = self.decls() if kw.text in ("inputs", "state") else self.exprs()
            sections.setdefault(kw.text, []).extend(items)
        try:
            self.expect("end")
            if self.tok.kind != "eof":
                self.fail("unexpected text after 'end'")
        except _Abort:
            pass
        return Contract(
            name=name,
            inputs=tuple(sections.get("inputs", ())),
            states=tuple(sections.get("state", ())),
            assumptions=tuple(sections.get("assumptions", ())),
            initial_guarantees=tuple(sections.get("initial", ())),
            transitional_guarantees=tuple(sections.get("transitions", ())),
        )

    def decls(self) -> list[VarDecl]:
        out = []
        while self.tok.kind != "eof" and not self.at("end") and not self.at_section():
            try:
                if self.tok.kind != "ident":
                    self.fail("expected a variable name")
                name = self.advance()
                self.expect(":")
                if not self.at(*SORTS):
                    self.fail("expected a sort (bool, int or real)")
                sort = SORTS[self.advance().text]
                self.expect(";")
                out.append(VarDecl(name.text, sort, span=name.span))
            except _Abort:
                self.recover()
        return out

    def exprs(self) -> list[Expr]:
        out = []
        while self.tok.kind != "eof" and not self.at("end") and not self.at_section():
            try:
                e = self.expr()
                self.expect(";")
                out.append(e)
            except _Abort:
                self.recover()
        return out

    # -- expressions, loosest binding first
    def expr(self) -> Expr:
        if self.at("if"):
            start = self.advance().span
            c = self.expr()
            self.expect("then")
            a = self.expr()
            self.expect("else")
            b = self.expr()
            return Ite(c, a, b, span=_join(start, self.last.span))
        return self.implies()

    def implies(self) -> Expr:
        lhs = self.disjunction()
        if self.at("=>"):
            self.advance()
            rhs = self.implies()
            return Implies(lhs, rhs, span=_join(lhs.span, self.last.span))
        return lhs

    def _binary_chain(self, ops, sub, build) -> Expr:
        lhs = sub()
        while self.at(*ops):
            op = self.advance().text
            rhs = sub()
            lhs = build(op, lhs, rhs, _join(lhs.span, self.last.span))
        return lhs

    def disjunction(self) -> Expr:
        return self._binary_chain(("or",), self.conjunction,
                                  lambda op, a, b, sp: Or((a, b), span=sp))

    def conjunction(self) -> Expr:
        return self._binary_chain(("and",), self.negation,
                                  lambda op, a, b, sp: And((a, b), span=sp))

    def negation(self) -> Expr:
        if self.at("not"):
            start = self.advance().span
            arg = self.negation()
            return Not(arg, span=_join(start, self.last.span))
        return self.comparison()

    def comparison(self) -> Expr:
        lhs = self.additive()
        if self.at("=", "!=", "<>", "<", "<=", ">", ">="):
            op = self.advance().text
            op = "!=" if op == "<>" else op
            rhs = self.additive()
            if self.at("=", "!=", "<>", "<", "<=", ">", ">="):
                self.fail("comparisons do not chain; add parentheses")
            return Cmp(op, lhs, rhs, span=_join(lhs.span, self.last.span))
        return lhs

    def additive(self) -> Expr:
        return self._binary_chain(("+", "-"), self.multiplicative,
                                  lambda op, a, b, sp: Arith(op, (a, b), span=sp))

    def multiplicative(self) -> Expr:
        return self._binary_chain(("*", "div", "mod"), self.unary,
                                  lambda op, a, b, sp: Arith(op, (a, b), span=sp))

    def unary(self) -> Expr:
        if self.at("-"):
            start = self.advance().span
            if self.tok.kind in ("int", "dec", "rat"):
                lit = self.atom()
                span = _join(start, lit.span)
                if isinstance(lit, IntLit):
                    return IntLit(-lit.value, span=span)
                return RealLit(-lit.numerator, lit.denominator, span=span)
            arg = self.unary()
            return Arith("neg", (arg,), span=_join(start, self.last.span))
        return self.atom()

    def atom(self) -> Expr:
        t = self.tok
        if t.kind == "int":
            self.advance()
            return IntLit(int(t.text), span=t.span)
        if t.kind in ("dec", "rat"):
            self.advance()
            q = Fraction(t.text)
            return RealLit(q.numerator, q.denominator, span=t.span)
        if self.at("true", "false"):
            self.advance()
            return BoolLit(t.text == "true", span=t.span)
        if t.kind == "ident":
            self.advance()
            if self.at("'"):
                end = self.advance().span
                return VarRef(t.text, VarTag.POST, span=_join(t.span, end))
            return VarRef(t.text, VarTag.PRE, span=t.span)
        if self.at("("):
            self.advance()
            e = self.expr()
            self.expect(")")
            return e
        if self.at("if"):
            return self.expr()
        self.fail("expected an expression")


def _resolve_inputs(e: Expr, inputs: set[str]) -> Expr:
    """Unprimed references to declared inputs get the input tag."""
    if isinstance(e, VarRef):
        if e.tag is VarTag.PRE and e.name in inputs:
            return replace(e, tag=VarTag.INPUT)
        return e
    if isinstance(e, Not):
        return replace(e, arg=_resolve_inputs(e.arg, inputs))
    if isinstance(e, (And, Or, Arith)):
        return replace(e, args=tuple(_resolve_inputs(a, inputs) for a in e.args))
    if isinstance(e, (Implies, Cmp)):
        return replace(e, lhs=_resolve_inputs(e.lhs, inputs), rhs=_resolve_inputs(e.rhs, inputs))
    if isinstance(e, Ite):
        return replace(e, cond=_resolve_inputs(e.cond, inputs),
                       then=_resolve_inputs(e.then, inputs),
                       orelse=_resolve_inputs(e.orelse, inputs))
    return e


def parse_contract(text: str) -> Contract:
    """Parse ``.ctr`` source into an (untyped) :class:`Contract`.

    Raises :class:`ContractError` carrying every diagnostic found; the parser
    resynchronises at the next ``;`` after a syntax error.
    """
    toks, diags = tokenize(text)
    p = _Parser(toks)
    try:
        c = p.contract()
    except RecursionError:
        c = None
        p.diags.append(Diagnostic("syntax-error", "expression nested too deeply", p.tok.span))
    diags += p.diags
    if c is not None:
        seen: set[str] = set()
        for d in c.inputs + c.states:
            if d.name in seen:
                diags.append(Diagnostic("duplicate-variable",
                                        f"variable {d.name!r} declared twice", d.span))
            seen.add(d.name)
    if diags or c is None:
        raise ContractError(sorted(diags, key=lambda d: (d.span.line, d.span.column)
                                   if d.span else (0, 0)))
    ins = set(c.input_names)
    return replace(
        c,
        assumptions=tuple(_resolve_inputs(e, ins) for e in c.assumptions),
        initial_guarantees=tuple(_resolve_inputs(e, ins) for e in c.initial_guarantees),
        transitional_guarantees=tuple(_resolve_inputs(e, ins) for e in c.transitional_guarantees),
    )


def load_contract(path) -> Contract:
    with open(path, encoding="utf-8") as f:
        return parse_contract(f.read())


# --------------------------------------------------------------------------
# Printing

_PREC_ITE, _PREC_IMP, _PREC_OR, _PREC_AND, _PREC_NOT, _PREC_CMP = 0, 1, 2, 3, 4, 5
_PREC_ADD, _PREC_MUL, _PREC_NEG, _PREC_ATOM = 6, 7, 8, 9

_ARITH_PREC = {"+": _PREC_ADD, "-": _PREC_ADD, "*": _PREC_MUL, "div": _PREC_MUL,
               "mod": _PREC_MUL}


def _prec(e: Expr) -> int:
    if isinstance(e, Ite):
        return _PREC_ITE
    if isinstance(e, Implies):
        return _PREC_IMP
    if isinstance(e, Or):
        return _PREC_OR
    if isinstance(e, And):
        return _PREC_AND
    if isinstance(e, Not):
        return _PREC_NOT
    if isinstance(e, Cmp):
        return _PREC_CMP
    if isinstance(e, Arith):
        return _PREC_NEG if e.op == "neg" else _ARITH_PREC[e.op]
    if isinstance(e, (IntLit, RealLit)) and _number(e).startswith("-"):
        return _PREC_NEG
    return _PREC_ATOM


def _number(e: Expr) -> str:
    if isinstance(e, IntLit):
        return str(e.value)
    q = e.value
    if q.denominator == 1:
        return f"{q.numerator}.0"
    d = q.denominator
    while d % 2 == 0:
        d //= 2
    while d % 5 == 0:
        d //= 5
    if d == 1:
        # terminating decimal: scale to an exact digit string
        digits = 0
        while (q * 10 ** digits).denominator != 1:
            digits += 1
        n = int(q * 10 ** digits)
        sign, n = ("-", -n) if n < 0 else ("", n)
        whole, frac = divmod(n, 10 ** digits)
        return f"{sign}{whole}.{frac:0{digits}d}"
    return f"{q.numerator}/{q.denominator}"


def render_expr(e: Expr) -> str:
    def wrap(child: Expr, min_prec: int) -> str:
        s = render_expr(child)
        return f"({s})" if _prec(child) < min_prec else s

    if isinstance(e, BoolLit):
        return "true" if e.value else "false"
    if isinstance(e, (IntLit, RealLit)):
        return _number(e)
    if isinstance(e, VarRef):
        return e.name + ("'" if e.tag is VarTag.POST else "")
    if isinstance(e, Ite):
        return f"if {render_expr(e.cond)} then {render_expr(e.then)} else {render_expr(e.orelse)}"
    if isinstance(e, Implies):
        return f"{wrap(e.lhs, _PREC_IMP + 1)} => {wrap(e.rhs, _PREC_IMP)}"
    if isinstance(e, (And, Or)):
        p = _prec(e)
        word = " and " if isinstance(e, And) else " or "
        first, *rest = e.args
        return word.join([wrap(first, p)] + [wrap(a, p + 1) for a in rest])
    if isinstance(e, Not):
        return f"not {wrap(e.arg, _PREC_NOT)}"
    if isinstance(e, Cmp):
        return f"{wrap(e.lhs, _PREC_ADD)} {e.op} {wrap(e.rhs, _PREC_ADD)}"
    if isinstance(e, Arith):
        if e.op == "neg":
            arg = e.args[0]
            # parenthesise literals so they do not fold into a negative literal
            inner = render_expr(arg)
            # literals would fold into a negative literal; "--" opens a comment
            if isinstance(arg, (IntLit, RealLit)) or _prec(arg) < _PREC_NEG or inner[0] == "-":
                return f"-({inner})"
            return f"-{inner}"
        p = _ARITH_PREC[e.op]
        first, *rest = e.args
        return f" {e.op} ".join([wrap(first, p)] + [wrap(a, p + 1) for a in rest])
    raise TypeError(f"not an expression: {e!r}")


def render_contract(c: Contract) -> str:
    def decls(ds):
        return " ".join(f"{d.name} : {d.sort.value};" for d in ds)

    def exprs(es):
        if not es:
            return "true;"
        return " ".join(f"{render_expr(e)};" for e in es)

    lines = [f"contract {c.name}"]
    if c.inputs:
        lines.append(f"  inputs:      {decls(c.inputs)}")
    if c.states:
        lines.append(f"  state:       {decls(c.states)}")
    lines.append(f"  assumptions: {exprs(c.assumptions)}")
    lines.append(f"  initial:     {exprs(c.initial_guarantees)}")
    lines.append(f"  transitions: {exprs(c.transitional_guarantees)}")
    lines.append("end")
    return "\n".join(lines) + "\n"
