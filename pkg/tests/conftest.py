"""Shared fixtures: a small synthetic world, plus the acceptance summary."""

import numpy as np
import pytest

from micropop import gen_synthetic_base, gen_synthetic_geography, gen_synthetic_rates
from micropop.core import Population
from micropop.genesis import initialise

WORLD_SEED = 11
WORLD_SIZE = 6_000


@pytest.fixture(scope="session")
def world():
    """(tables, initialised population snapshot) shared across module tests."""
    geo = gen_synthetic_geography(WORLD_SEED, total_population=WORLD_SIZE)
    tables = gen_synthetic_rates(WORLD_SEED, geo)
    pop = gen_synthetic_base(WORLD_SEED, geo, WORLD_SIZE)
    initialise(pop, tables)
    return tables, pop.snapshot_state()


def clone_population(snapshot) -> Population:
    pop = Population()
    pop.restore_state(snapshot)
    return pop


@pytest.fixture
def world_pop(world) -> Population:
    """A fresh mutable copy of the shared initialised population."""
    return clone_population(world[1])


# ---------------------------------------------------------------------------
# Acceptance reporting: tests in test_acceptance.py register one line per
# criterion; the summary prints even when pytest captures stdout.
# ---------------------------------------------------------------------------

ACCEPTANCE_RESULTS: list[tuple[int, str, str]] = []


def record_criterion(number: int, passed: bool, detail: str) -> None:
    ACCEPTANCE_RESULTS.append((number, "PASS" if passed else "FAIL", detail))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for number, status, detail in sorted(ACCEPTANCE_RESULTS):
        terminalreporter.write_line(f"criterion {number:>2}: {status}  {detail}")
