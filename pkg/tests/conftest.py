"""Shared fixtures.

The acceptance suite shares one full-scale context so its expensive artifacts
(tree ensembles, mean tables, fixed-point populations) are computed once. The
per-criterion pass/fail lines are echoed in the terminal summary.
"""

from __future__ import annotations

import numpy as np
import pytest

from splitlab import verify
from splitlab._rng import generator
from splitlab.splitters import (
    bary_search_tree,
    beta_binary,
    binary_search_tree,
    dirichlet,
    median_of,
)
from splitlab.trees import default_params

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def acceptance_ctx() -> verify.VerifyContext:
    return verify.VerifyContext(quick=False, master_seed=20260819)


@pytest.fixture(scope="session")
def family_specs():
    return {
        "bst": binary_search_tree(),
        "med3": median_of(1),
        "bary3": bary_search_tree(3),
        "dir3": dirichlet((1.5, 1.5, 1.5)),
        "bb": beta_binary(2.0, 1.0),
    }


@pytest.fixture(scope="session")
def family_params(family_specs):
    return {name: default_params(spec) for name, spec in family_specs.items()}


@pytest.fixture()
def rng() -> np.random.Generator:
    return generator(20260819, "test", 0)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
