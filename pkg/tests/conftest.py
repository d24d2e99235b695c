import shutil

import pytest

from realize.contract import typecheck
from realize.corpus import COUNTER, DOUBLER, DOUBLER_FIXED, FALSE_POSITIVE, NO_INITIAL
from realize.parser import parse_contract
from realize.solver import default_solver_cmd

HAVE_SOLVER = shutil.which(default_solver_cmd().split()[0]) is not None

requires_solver = pytest.mark.skipif(not HAVE_SOLVER, reason="no SMT solver on PATH")


def typed(text):
    return typecheck(parse_contract(text))


@pytest.fixture
def doubler():
    return typed(DOUBLER)


@pytest.fixture
def doubler_fixed():
    return typed(DOUBLER_FIXED)


@pytest.fixture
def false_positive():
    return typed(FALSE_POSITIVE)


@pytest.fixture
def no_initial():
    return typed(NO_INITIAL)


@pytest.fixture
def counter():
    return typed(COUNTER)
