"""Acceptance gate: every verification check at its stated tolerance.

The whole battery runs once per session through `run_all`, which also replays
it a second time for the determinism check, and each criterion is asserted
and reported as its own test with one printed pass/fail line.
"""

import pytest

from bernsim import verify


@pytest.fixture(scope="module")
def results():
    return {r.name: r for r in verify.run_all(seed=verify.DEFAULT_SEED)}


CRITERIA = [
    "pathwise-translation",
    "ou-moments",
    "transform-residuals",
    "affine-closure",
    "isovector-dichotomy",
    "rate-drift-mc",
    "bridge-variance",
    "determinism",
]


def test_battery_matches_registered_checks():
    names = [fn.__name__.removeprefix("check_").replace("_", "-") for fn in verify.ALL_CHECKS]
    assert names == CRITERIA


@pytest.mark.parametrize("name", CRITERIA)
def test_criterion(results, name):
    res = results[name]
    print(f"ACCEPTANCE {name}: {'PASS' if res.passed else 'FAIL'}  {res.measured}")
    assert res.passed, res.measured
