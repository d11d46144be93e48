import os

os.environ.setdefault("OMP_NUM_THREADS", "1")
os.environ.setdefault("OPENBLAS_NUM_THREADS", "1")

import time

import pytest

from labcap.harness import analyze, preset
from labcap.harness.experiment import compare_results, simulate

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def acceptance_log():
    return ACCEPTANCE_LINES


class _FemCache:
    """Full steady-state runs of the reference experiments, computed once per session."""

    def __init__(self):
        self._runs = {}
        self.elapsed = {}

    def get(self, name):
        if name not in self._runs:
            t0 = time.perf_counter()
            a = analyze(preset(name))
            traj = simulate(a)
            self._runs[name] = (a, traj, compare_results(a, traj))
            self.elapsed[name] = time.perf_counter() - t0
        return self._runs[name]


@pytest.fixture(scope="session")
def fem_runs():
    return _FemCache()


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
