"""``realize`` command line tool.

Exit codes: 0 realizable, 1 unrealizable, 2 unknown, 3 tool error,
4 usage or parse error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from typing import Optional, Sequence

from .contract import ContractError, typecheck
from .engine import (
    DEFAULT_MAX_N, DEFAULT_TIMEOUT_MS, Options, TraceReconstructionError, VerdictKind,
    check_realizability, error_json, report,
)
from .oracle import (
    FiniteContract, OracleError, check_realizable_oracle, parse_range_arg, parse_ranges,
    viable_iterates, witness_initial_state,
)
from .parser import load_contract, render_contract
from .smt import (
    encode_base_check_prime, encode_exact_base_check, encode_extend_check, encode_initial_sat,
)
from .solver import SolverProtocolError, SolverSpawnError, default_solver_cmd

EXIT_REALIZABLE, EXIT_UNREALIZABLE, EXIT_UNKNOWN, EXIT_TOOL_ERROR, EXIT_USAGE = 0, 1, 2, 3, 4

EXIT_FOR = {
    VerdictKind.REALIZABLE: EXIT_REALIZABLE,
    VerdictKind.UNREALIZABLE: EXIT_UNREALIZABLE,
    VerdictKind.UNKNOWN: EXIT_UNKNOWN,
}


class UsageError(Exception):
    pass


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    p = _ArgumentParser(prog="realize", description="Realizability checking for "
                        "assume/guarantee contracts.")
    p.add_argument("-v", "--verbose", action="store_true", help="log solver queries")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_ArgumentParser)

    def common(sp):
        sp.add_argument("contract", help="contract file (.ctr)")
        sp.add_argument("--format", choices=("human", "json"), default="human")

    def solving(sp):
        sp.add_argument("--max-n", type=int, default=DEFAULT_MAX_N)
        sp.add_argument("--exact-base", action="store_true",
                        help="also run the exact base check (diagnostic only)")

    c = sub.add_parser("check", help="decide realizability with an SMT solver")
    common(c)
    solving(c)
    c.add_argument("--timeout-ms", type=int, default=DEFAULT_TIMEOUT_MS)
    c.add_argument("--solver", default=None,
                   help="solver command reading SMT-LIB2 on stdin "
                        "(default: $REALIZE_SOLVER or 'z3 -in')")
    c.add_argument("--dump-smt", metavar="DIR", help="also write every script to DIR")
    c.add_argument("--parallel", action="store_true",
                   help="run the two checks of each iteration concurrently")
    c.add_argument("--plot", metavar="FILE", help="write a per-query timing figure")

    o = sub.add_parser("oracle", help="decide realizability by explicit enumeration")
    common(o)
    o.add_argument("--range", action="append", default=[], metavar="VAR=LO..HI",
                   help="finite range for a variable (repeatable; VAR=bool for booleans)")
    o.add_argument("--ranges", metavar="FILE", help="ranges sidecar file "
                   "(default: <contract>.ranges when present)")
    o.add_argument("--plot", metavar="FILE", help="write the fixpoint convergence figure")

    d = sub.add_parser("dump-smt", help="write all SMT-LIB2 scripts without solving")
    common(d)
    solving(d)
    d.add_argument("--dump-smt", "-o", dest="out", metavar="DIR", default="smt")

    pp = sub.add_parser("parse", help="type check and pretty-print a contract")
    common(pp)
    return p


def _load(path: str):
    return typecheck(load_contract(path))


def _contract_label(path: Optional[str]) -> str:
    if not path:
        return ""
    return os.path.splitext(os.path.basename(path))[0]


def cmd_check(args) -> int:
    c = _load(args.contract)
    opts = Options(max_n=args.max_n, timeout_ms=args.timeout_ms,
                   solver_cmd=args.solver or default_solver_cmd(), exact_base=args.exact_base,
                   dump_smt=args.dump_smt, parallel=args.parallel)
    v = check_realizability(c, opts)
    print(report(v, args.format))
    if args.plot:
        from .plotting import plot_queries
        plot_queries(v, args.plot)
    return EXIT_FOR[v.kind]


def _ranges_for(args) -> dict:
    ranges = {}
    sidecar = args.ranges or os.path.splitext(args.contract)[0] + ".ranges"
    if args.ranges or os.path.exists(sidecar):
        with open(sidecar, encoding="utf-8") as f:
            ranges.update(parse_ranges(f.read()))
    for r in args.range:
        name, dom = parse_range_arg(r)
        ranges[name] = dom
    return ranges


def cmd_oracle(args) -> int:
    c = _load(args.contract)
    fc = FiniteContract(c, _ranges_for(args))
    iterates = viable_iterates(fc)
    viable = iterates[-1]
    ok = check_realizable_oracle(fc)
    if args.format == "json":
        out = error_json(c.name, "")
        out.update(verdict="realizable" if ok else "unrealizable", reason=None,
                   states=len(fc.states), inputs=len(fc.inputs), viable_states=len(viable),
                   iterations=len(iterates) - 1,
                   witness=fc.state_valuation(witness_initial_state(fc)) if ok else None)
        print(json.dumps(out))
    else:
        rs = ", ".join(f"{k}={v}" for k, v in sorted(fc.ranges.items()))
        print(f"oracle: {c.name} over {rs}")
        print(f"  states: {len(fc.states)}, inputs: {len(fc.inputs)}")
        print(f"  |V*| = {len(viable)} viable states "
              f"(fixpoint after {len(iterates) - 1} iterations)")
        if ok:
            w = fc.state_valuation(witness_initial_state(fc))
            print("REALIZABLE (oracle); initial viable state "
                  + ", ".join(f"{k}={v}" for k, v in w.items()))
        else:
            print("UNREALIZABLE (oracle): no viable state satisfies the initial guarantees")
    if args.plot:
        from .plotting import plot_fixpoint
        plot_fixpoint([len(v) for v in iterates], c.name, args.plot)
    return EXIT_REALIZABLE if ok else EXIT_UNREALIZABLE


def cmd_dump(args) -> int:
    c = _load(args.contract)
    scripts = [encode_initial_sat(c)]
    for n in range(args.max_n + 1):
        scripts += [encode_base_check_prime(c, n), encode_extend_check(c, n)]
        if args.exact_base:
            scripts.append(encode_exact_base_check(c, n))
    os.makedirs(args.out, exist_ok=True)
    paths = []
    for s in scripts:
        path = os.path.join(args.out, s.filename)
        with open(path, "w", encoding="utf-8") as f:
            f.write(s.text)
        paths.append(path)
    if args.format == "json":
        print(json.dumps({"contract": c.name, "files": paths}))
    else:
        print(f"wrote {len(paths)} scripts to {args.out}")
    return 0


def cmd_parse(args) -> int:
    c = _load(args.contract)
    text = render_contract(c)
    if args.format == "json":
        print(json.dumps({"contract": c.name, "ok": True, "text": text}))
    else:
        print(text, end="")
    return 0


COMMANDS = {"check": cmd_check, "oracle": cmd_oracle, "dump-smt": cmd_dump, "parse": cmd_parse}


def _wants_json(argv: Sequence[str]) -> bool:
    argv = list(argv)
    for k, a in enumerate(argv):
        if a == "--format=json" or (a == "--format" and argv[k + 1:k + 2] == ["json"]):
            return True
    return False


def _fail(code: int, message: str, as_json: bool, contract: str = "", diagnostics=()) -> int:
    print(message, file=sys.stderr)
    if as_json:
        out = error_json(contract, message)
        if diagnostics:
            out["diagnostics"] = [
                {"code": d.code, "message": d.message,
                 "line": d.span.line if d.span else None,
                 "column": d.span.column if d.span else None} for d in diagnostics]
        print(json.dumps(out))
    return code


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    as_json = _wants_json(argv)
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        return _fail(EXIT_USAGE, str(exc), as_json)
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    label = _contract_label(getattr(args, "contract", None))
    try:
        return COMMANDS[args.command](args)
    except ContractError as exc:
        return _fail(EXIT_USAGE, f"{args.contract}:\n{exc}", as_json, label, exc.diagnostics)
    except OSError as exc:
        return _fail(EXIT_USAGE, str(exc), as_json, label)
    except (OracleError, ValueError) as exc:
        return _fail(EXIT_USAGE, str(exc), as_json, label)
    except (SolverSpawnError, SolverProtocolError, TraceReconstructionError) as exc:
        return _fail(EXIT_TOOL_ERROR, f"tool error: {exc}", as_json, label)


if __name__ == "__main__":
    sys.exit(main())
