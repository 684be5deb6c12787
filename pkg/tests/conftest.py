import sys

import numpy as np
import pytest

from kleinsigma import periods as pr
from kleinsigma.curves import build_curve
from kleinsigma.sigma import Sigma


@pytest.fixture(scope="session")
def x4():
    return build_curve("x4")


@pytest.fixture(scope="session")
def x12():
    return build_curve("x12")


@pytest.fixture(scope="session")
def pd4(x4):
    pd = pr.period_matrices(x4)
    pr.riemann_constant(x4, pd)
    return pd


@pytest.fixture(scope="session")
def abel4(x4, pd4):
    return pr.AbelMap(x4, pd4.basis.x0)


@pytest.fixture(scope="session")
def sig4(pd4):
    return Sigma(pd4)


@pytest.fixture(scope="session")
def pd12(x12):
    return pr.period_matrices(x12)


@pytest.fixture(scope="session")
def abel12(x12, pd12):
    return pr.AbelMap(x12, pd12.basis.x0)


@pytest.fixture(scope="session")
def pd12_char(x12, pd12, abel12):
    pr.riemann_constant(x12, pd12, abel12)
    return pd12


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    lines = getattr(mod, "LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
