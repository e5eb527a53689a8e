import functools
import sys

import pytest

from algebroid_dynamics import systems


@functools.lru_cache(maxsize=None)
def catalog(name):
    return systems.build(name)


@pytest.fixture(params=systems.names())
def entry(request):
    return catalog(request.param)


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "RESULT_LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda l: int(l.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
