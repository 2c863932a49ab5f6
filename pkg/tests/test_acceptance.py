"""The ten acceptance criteria, each at its stated tolerance.

Every test prints one ``[PASS]``/``[FAIL]`` line; the lines are also collected
into a summary section at the end of the pytest run.
"""

import pytest

from oversmoothing.checks import ACCEPTANCE, SLOW, _timed

import conftest

_CACHE: dict = {}


def _run(num, *args, **kw):
    name, fn = ACCEPTANCE[num]
    res = _timed(f"{num}. {name}", fn, *args, **kw)
    line = res.line()
    conftest.ACCEPTANCE_LINES.append(line)
    print(line)
    return res


@pytest.mark.parametrize("num", [n for n in ACCEPTANCE if n not in SLOW])
def test_fast_criterion(num):
    res = _run(num)
    assert res.passed, res.detail


@pytest.mark.slow
def test_table_reproduction():
    res = _run(7, jobs=1, cache=_CACHE)
    assert res.passed, res.detail


@pytest.mark.slow
def test_rate_slopes():
    res = _run(8, jobs=1, cache=_CACHE)
    assert res.passed, res.detail


@pytest.mark.slow
def test_figure_shape(tmp_path):
    res = _run(9, tmp_path)
    assert res.passed, res.detail
