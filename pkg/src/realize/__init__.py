"""Realizability checking for assume/guarantee contracts."""

from .contract import (
    Contract, ContractError, Diagnostic, Sort, Trace, VarDecl, VarTag, evaluate, holds_A,
    holds_GI, holds_GT, typecheck,
)
from .parser import load_contract, parse_contract, render_contract

__version__ = "0.1.0"
