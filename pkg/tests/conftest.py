import os
import sys

sys.path.insert(0, os.path.dirname(__file__))

import pytest

_VERDICTS = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[_VERDICTS] = {}


@pytest.fixture
def verdict(request):
    """Record a PASS/FAIL line for an acceptance criterion, then assert it."""
    store = request.config.stash[_VERDICTS]

    def report(number, title, ok, detail):
        line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}: {title}; {detail}"
        store[number] = line
        print(line)
        assert ok, line

    return report


def pytest_terminal_summary(terminalreporter, config):
    store = config.stash[_VERDICTS]
    if store:
        terminalreporter.section("acceptance criteria")
        for n in sorted(store):
            terminalreporter.write_line(store[n])
