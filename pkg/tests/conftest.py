"""Shared fixtures."""
import os
import sys

import numpy as np
import pytest

from ldanneal.spin_model import SpinGlassInstance

sys.path.insert(0, os.path.dirname(__file__))


@pytest.fixture
def three_site():
    return SpinGlassInstance(3, {(0, 1): -1.0, (1, 2): 0.5}, {0: 0.2})


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)



# acceptance verdicts, repeated in the terminal summary
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[k])
