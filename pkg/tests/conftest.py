import sys

import numpy as np
import pytest

from mgpinn.checks import random_store  # noqa: F401  (re-exported for tests)
from mgpinn.problems import get_problem
from mgpinn.sampling import build_samples


@pytest.fixture(scope="session")
def burgers1d():
    return get_problem("burgers1d")


@pytest.fixture(scope="session")
def burgers2d():
    return get_problem("burgers2d")


@pytest.fixture(scope="session")
def burgers3d():
    return get_problem("burgers3d")


@pytest.fixture
def small_samples_1d(burgers1d):
    return build_samples(burgers1d, 64, 16, 16, seed=5)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_addoption(parser):
    parser.addoption("--fast", action="store_true", help="skip multi-minute training runs")


def pytest_collection_modifyitems(config, items):
    if not config.getoption("--fast"):
        return
    skip = pytest.mark.skip(reason="--fast")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
