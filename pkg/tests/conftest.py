"""Shared fixtures and the acceptance summary printed at the end of a run."""

import pytest

from levy_lil import catalog

_ACCEPTANCE = {}


def record_acceptance(number, ok, detail):
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
    _ACCEPTANCE[number] = line
    print(line)
    return ok


@pytest.fixture
def acceptance():
    return record_acceptance


@pytest.fixture(params=catalog.CATALOG)
def catalog_model(request):
    return request.param, catalog.get(request.param)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        terminalreporter.write_line(_ACCEPTANCE[number])
