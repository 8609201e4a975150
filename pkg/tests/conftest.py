import math
import time

import numpy as np
import pytest

from wsm import builtin, solve

# (label, problem name, start) for every benchmark run used by the acceptance suite
BENCHMARK_RUNS = [
    ("rosenbrock-cubic (0.5,1.5)", "rosenbrock-cubic", (0.5, 1.5)),
    ("rosenbrock-cubic (0,0)", "rosenbrock-cubic", (0.0, 0.0)),
    ("rosenbrock-disk (1,-1)", "rosenbrock-disk", (1.0, -1.0)),
    ("rosenbrock-disk (5/4,sqrt7/4)", "rosenbrock-disk", (1.25, math.sqrt(7) / 4)),
    ("mishra-bird (-5,0)", "mishra-bird", (-5.0, 0.0)),
    ("gomez-levy (0,-1)", "gomez-levy", (0.0, -1.0)),
]

# filled by tests/test_acceptance.py, printed at the end of the session
ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture(scope="session")
def benchmark_runs():
    """Solve every benchmark once; returns {label: (problem, report)} plus total wall time."""
    out = {}
    t0 = time.perf_counter()
    for label, name, start in BENCHMARK_RUNS:
        problem = builtin(name)
        out[label] = (problem, solve(problem, np.array(start)))
    return out, time.perf_counter() - t0


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])
