from __future__ import annotations

import pytest

from hsdiag.dynamichs import enable_debug_checks
from hsdiag.golden import golden_conflict_finder, golden_dpi, golden_measurements


@pytest.fixture(autouse=True, scope="session")
def _debug_invariants():
    """Structural and post-prune assertions stay on for the whole suite."""
    enable_debug_checks(True)
    yield
    enable_debug_checks(False)


@pytest.fixture(scope="session")
def example_dpi():
    return golden_dpi()


@pytest.fixture()
def example_measurements():
    return golden_measurements()


@pytest.fixture()
def example_finder():
    return golden_conflict_finder()
