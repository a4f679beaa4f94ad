import math

import numpy as np
import pytest

from fockspread.model import CircuitSpec

ACCEPTANCE_LINES = []


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def spec6():
    return CircuitSpec.self_dual(6)


@pytest.fixture
def report():
    """Record one acceptance line; shown in the terminal summary."""

    def _report(criterion: str, passed: bool, detail: str):
        line = f"{'PASS' if passed else 'FAIL'}  criterion {criterion}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)

    return _report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: s.split("criterion ")[1]):
            terminalreporter.write_line(line)


def pauli_chain_ops(L):
    """Dense sigma^x_j, sigma^z_j for an L-site chain; site 1 is the leftmost kron factor."""
    sx = np.array([[0, 1], [1, 0]], dtype=complex)
    sz = np.diag([1.0, -1.0]).astype(complex)

    def site(op, j):
        out = np.ones((1, 1), dtype=complex)
        for k in range(L):
            out = np.kron(out, op if k == j else np.eye(2))
        return out

    return [site(sx, j) for j in range(L)], [site(sz, j) for j in range(L)]


PI = math.pi
