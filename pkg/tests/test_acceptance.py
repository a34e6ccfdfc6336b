"""Every acceptance criterion at its stated tolerance and runtime budget.

Each test prints one ``[PASS]``/``[FAIL]`` line. Results of the first run
are kept so the determinism check can compare against them.
"""
from __future__ import annotations

import pytest

from waitdim.acceptance import CRITERIA, c10_determinism, run_criterion

FIRST: dict = {}


def _report(capsys, result):
    with capsys.disabled():
        print("\n" + result.line())


@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(number, capsys):
    r = run_criterion(number)
    FIRST[number] = r
    _report(capsys, r)
    assert r.passed, r.summary
    assert r.within_budget, f"{r.seconds:.1f}s exceeds {r.budget:.0f}s"


def test_criterion_10_determinism(capsys):
    first = {n: FIRST.get(n) or run_criterion(n) for n in CRITERIA}
    r = c10_determinism(first, workers=8)
    _report(capsys, r)
    assert r.passed, r.summary
