import functools

import numpy as np
import pytest

from c0ip_bddc.assembly import assemble_global
from c0ip_bddc.bddc import build_preconditioners
from c0ip_bddc.modified_q2 import build_space
from c0ip_bddc.splitting import SubspaceSplit

ACCEPTANCE_LINES: list[str] = []


@functools.lru_cache(maxsize=None)
def space_for(n, m):
    return build_space(n, m)


@functools.lru_cache(maxsize=None)
def split_for(n, m):
    return SubspaceSplit(space_for(n, m))


@functools.lru_cache(maxsize=None)
def global_matrix(n, m, eta=5.0):
    return assemble_global(space_for(n, m), eta)


@functools.lru_cache(maxsize=None)
def preconditioners(n, m, eta=5.0):
    """``(ops, bddc, full)`` for one (n, m)."""
    return build_preconditioners(split_for(n, m), eta, global_matrix(n, m, eta))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def record(line: str) -> None:
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
