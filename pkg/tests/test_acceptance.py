"""The twelve acceptance criteria, one test each, plus the runtime budget of
the free-flow oracle.  A one-line verdict per criterion is printed in the
terminal summary."""
import time

import pytest

from hardylab.acceptance import CRITERIA, free_flow_oracle, run_suite, summary_json

LINES: list[str] = []


@pytest.fixture(scope="module")
def suite():
    results = {r.number: r for r in run_suite(seed=0)}
    LINES.extend(results[n].line() for n in sorted(results))
    return results


@pytest.mark.parametrize("number", sorted(CRITERIA), ids=lambda n: f"criterion_{n:02d}")
def test_criterion(suite, number):
    result = suite[number]
    print(result.line())
    for check in result.checks:
        print(f"    {'ok  ' if check.passed else 'FAIL'} {check.name}: {check.value:.6g} "
              f"({'<=' if check.sense == 'max' else '>='} {check.bound:.3g})")
    assert result.passed, result.line()


def test_free_flow_oracle_runs_within_a_second():
    free_flow_oracle()  # warm up FFT plans and imports
    start = time.perf_counter()
    free_flow_oracle()
    assert time.perf_counter() - start < 1.0


def test_summary_excludes_timings(suite):
    text = summary_json(list(suite.values()))
    assert "runtime" not in text
