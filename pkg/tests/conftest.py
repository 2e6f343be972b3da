import time

import pytest

CRITERIA = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[CRITERIA] = []


@pytest.fixture
def criterion(request):
    """Run one acceptance check and record a PASS/FAIL line for it.

    ``criterion(number, title, body, budget=None)`` calls ``body()``, which
    returns a short detail string or raises ``AssertionError``; a run slower
    than ``budget`` seconds also counts as a failure.
    """
    lines = request.config.stash[CRITERIA]

    def check(number, title, body, budget=None):
        t0 = time.perf_counter()
        try:
            detail = body()
        except Exception as e:
            line = f"FAIL [{number}] {title}: {type(e).__name__}: {e}".splitlines()[0]
            lines.append(line)
            print(line)
            raise
        elapsed = time.perf_counter() - t0
        ok = budget is None or elapsed < budget
        timing = f"{elapsed:.1f}s" + ("" if budget is None else f" of {budget:g}s")
        line = f"{'PASS' if ok else 'FAIL'} [{number}] {title}: {detail} ({timing})"
        lines.append(line)
        print(line)
        assert ok, f"criterion {number} took {elapsed:.1f}s, budget {budget:g}s"

    return check


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(CRITERIA, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split("[", 1)[1].split("]", 1)[0])):
            terminalreporter.write_line(line)
