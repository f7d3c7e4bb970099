import functools

import numpy as np
import pytest

from varmg.problems import GridSpec, assemble_poisson_5pt, homogeneous_poisson, manufactured_poisson
from varmg.transfer import Level, build_hierarchy


@functools.lru_cache(maxsize=None)
def poisson_hierarchy(N, coarsest_N=2, alpha=1.0, kind="homogeneous"):
    make = homogeneous_poisson if kind == "homogeneous" else manufactured_poisson
    return build_hierarchy(make(GridSpec(N)), coarsest_N, alpha)


@functools.lru_cache(maxsize=None)
def poisson_level(N):
    """Finest level with the closed-form ``lambda_max``."""
    grid = GridSpec(N)
    return Level.single(assemble_poisson_5pt(grid), grid,
                        lambda_max=4.0 + 4.0 * np.cos(np.pi / N))


def tridiag(n):
    from varmg.linalg import SparseMatrix
    A = 2.0 * np.eye(n) - np.eye(n, k=1) - np.eye(n, k=-1)
    return SparseMatrix.from_dense(A, symmetric=True)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
