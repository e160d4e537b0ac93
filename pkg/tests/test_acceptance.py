"""Acceptance criteria, one PASS/FAIL line each.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines and the
measured quantities. Criterion 11 is a heuristic: a mismatch is reported as
WARN and does not fail the test.
"""

import json

import pytest

from ri3bp.verification import CRITERIA, WARNING_ONLY


@pytest.mark.slow
@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(suite, number, capsys):
    res = suite.run(number)
    with capsys.disabled():
        print()
        print(res.line())
        print("    " + json.dumps(res.details, sort_keys=True, default=str)[:2000])
    if number in WARNING_ONLY:
        if not res.passed:
            pytest.skip(f"heuristic mismatch logged: {res.details}")
        return
    assert res.passed, res.details
