import os

import numpy as np
import pytest

from switchctl import fixtures
from switchctl.design import certificate_from_blocks, design_switching
from switchctl.sysmodel import SimplexVector, SwitchedAffineSystem

SEED = int(os.environ.get("SWITCHCTL_SEED", "20240611"))


@pytest.fixture
def rng():
    return np.random.default_rng(SEED)


@pytest.fixture(scope="session")
def fx():
    return {name: fixtures.load(name) for name in fixtures.DEMOS}


@pytest.fixture(scope="session")
def designed(fx):
    out = {}
    for name, f in fx.items():
        out[name] = design_switching(f.system, f.lam, f.x_perp, nullspace_weight=f.nullspace_weight)
    return out


@pytest.fixture(scope="session")
def example1_law(fx):
    f = fx["example1"]
    return certificate_from_blocks(f.system, f.lam, [[1.5]], [[1.0]], f.x_perp)


@pytest.fixture(scope="session")
def example2_law(fx):
    f = fx["example2"]
    return certificate_from_blocks(f.system, f.lam, f.P_bar, f.P_perp, f.x_perp)


def index_independent_system():
    """Two modes with the same A; only the affine terms differ."""
    A = np.diag([-1.0, 0.0])
    return SwitchedAffineSystem([A, A], [[1.0, -1.0], [1.0, 1.0]])


@pytest.fixture(scope="session")
def index_independent_law():
    sys = index_independent_system()
    return certificate_from_blocks(sys, SimplexVector([0.5, 0.5]), [[1.0]], [[1.0]], [0.0])


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import VERDICTS
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(VERDICTS):
            terminalreporter.write_line(line)
