"""Twelve acceptance criteria, each checked at full size against its runtime budget.

Run directly (``python3 tests/test_acceptance.py``) for a plain report, or
through pytest, where the lines are repeated in the terminal summary.
"""
import sys

import pytest

from convexval import suites

# (label, suite function, runtime budget in seconds)
CRITERIA = [
    ("steiner tube exactness", suites.steiner_suite, 20),
    ("gauss-bonnet", suites.gauss_bonnet_suite, 5),
    ("union additivity of normal cycles", suites.additivity_suite, 30),
    ("algebra axioms", suites.algebra_suite, 120),
    ("graded structure constants", suites.graded_suite, 60),
    ("reach lower bound", suites.reach_suite, 60),
    ("tube injectivity", suites.injectivity_suite, 30),
    ("polyhedral approximation order", suites.approximation_suite, 10),
    ("two-path evaluation", suites.two_path_suite, 60),
    ("PL differential cycles", suites.plcycle_suite, 30),
    ("chart independence", suites.chart_suite, 120),
    ("slice identity", suites.slice_suite, 20),
]

REPORT = []


def _check(index):
    label, fn, budget = CRITERIA[index]
    res = fn(seed=0)
    in_time = res.seconds < budget
    ok = res.passed and in_time
    line = f"{'PASS' if ok else 'FAIL'} {index + 1:2d} {label}: {res.line()} budget={budget}s"
    REPORT.append(line)
    print(line)
    return res, in_time


@pytest.mark.slow
@pytest.mark.parametrize("index", range(len(CRITERIA)), ids=[c[0].replace(" ", "_") for c in CRITERIA])
def test_criterion(index):
    res, in_time = _check(index)
    assert res.passed, res.line()
    assert in_time, f"{res.name} took {res.seconds:.1f}s"


if __name__ == "__main__":
    failures = 0
    for i in range(len(CRITERIA)):
        res, in_time = _check(i)
        failures += not (res.passed and in_time)
    sys.exit(1 if failures else 0)
