"""Shared fixtures and the slow marker."""

import os
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent.parent))
os.environ.setdefault("TESTING", "true")


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run full-budget statistical tests")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: full-budget statistical test, needs --runslow")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
