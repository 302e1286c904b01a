import warnings

import pytest

from implicitbif import catalog
from implicitbif.bifurcation import classify

# independent 50-digit evaluation of the closed forms' targets (mpmath, frozen)
HIGH_PRECISION = {
    "ex1": {"d1": 1.0, "d2": 175.346332, "d3": -1730.806064},
    "ex4": {"d2": -42.043601, "d3": -283.872858, "genericity": 789.207888},
}

# reference values that disagree with every independent evaluation
MISMATCH = "reference value disagrees with the closed form, the oracle and a 50-digit evaluation"


@pytest.fixture(scope="session")
def examples():
    """Solved and classified worked examples keyed by name."""
    out = {}
    for which in ("ex1", "ex2", "ex3", "ex4"):
        m = catalog.model_for(which)
        cand = catalog.solve_case(m, catalog.CASES[which][0])
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            out[which] = (m, cand, classify(m, cand))
    return out


@pytest.fixture(scope="session")
def euler():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return catalog.reproduce("euler")


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
