from __future__ import annotations

import pytest

from verstring.suites import SUITES, SelftestConfig, run_all, run_suite


@pytest.mark.parametrize("name", list(SUITES))
def test_suite_passes(name):
    res = run_suite(name, SelftestConfig(iterations=4, max_n=120, seed=3))
    assert res.ok, res.line()
    assert res.cases == 4 and res.line().startswith("PASS")


def test_fault_is_named():
    res = run_suite("slab-grid", SelftestConfig(iterations=4, max_n=120, inject_fault=True))
    assert not res.ok
    assert res.failure.prop == "adjacent_columns"
    assert "adjacent_columns" in res.line()


def test_zero_iterations():
    assert all(r.ok and r.cases == 0 for r in run_all(SelftestConfig(iterations=0)))
