import json
from pathlib import Path

import pytest

DATA = Path(__file__).resolve().parent / "data"
_VERDICTS = pytest.StashKey[dict]()


@pytest.fixture(scope="session")
def oracle():
    def load(name):
        return json.loads((DATA / f"{name}.json").read_text())
    return load


def pytest_configure(config):
    config.stash[_VERDICTS] = {}


@pytest.fixture(scope="session")
def verdict(pytestconfig):
    """Record and print one PASS/FAIL line for an acceptance criterion, then assert it."""
    table = pytestconfig.stash[_VERDICTS]

    def record(number, ok, detail):
        line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        table[number] = line
        print(line)
        assert ok, line
    return record


def pytest_terminal_summary(terminalreporter, config):
    table = config.stash.get(_VERDICTS, {})
    if table:
        terminalreporter.section("acceptance criteria")
        for n in sorted(table):
            terminalreporter.write_line(table[n])
