"""Shared fixtures: scenario loading and a session-wide report cache.

Scenario objects carry mutable orbit caches and warning counters, so tests
that inspect warnings or timing always load a fresh copy.  Reports, by
contrast, are pure functions of (scenario name, command, seed) and are cached
for the whole session to keep the suite fast.
"""

import numpy as np
import pytest

from bregman_lab.report import run
from bregman_lab.scenarios import load_scenario


@pytest.fixture(scope="session")
def report_cache():
    return {}


@pytest.fixture(scope="session")
def get_report(report_cache):
    """Memoized report runner: get_report(name, command, seed=None)."""

    def fetch(name, command, seed=None):
        key = (name, command, seed)
        if key not in report_cache:
            scenario = load_scenario(name, seed=seed)
            report_cache[key] = run(scenario, command)
        return report_cache[key]

    return fetch


def entry_for(report, check_name):
    """The single report entry with the given check name."""
    matches = [c for c in report["checks"] if c["check"] == check_name]
    assert len(matches) == 1, f"expected one '{check_name}' entry, got {len(matches)}"
    return matches[0]


@pytest.fixture
def rng():
    return np.random.default_rng(20260814)
