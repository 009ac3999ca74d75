import re

import pytest

_LINES: list[str] = []


@pytest.fixture
def criterion():
    """``criterion(k, title, checks)`` records one PASS/FAIL line and asserts.

    ``checks`` maps a short label to a bool; every failing label is named.
    """

    def record(k, title, checks, detail=""):
        bad = [name for name, ok in checks.items() if not ok]
        status = "PASS" if not bad else "FAIL"
        line = f"criterion {k}: {status}  {title}"
        if detail:
            line += f"  [{detail}]"
        if bad:
            line += f"  failed: {', '.join(bad)}"
        _LINES.append(line)
        print(line)
        assert not bad, line

    return record


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        def key(line):
            m = re.match(r"criterion (\d+)(\w*)", line)
            return int(m.group(1)), m.group(2)

        for line in sorted(_LINES, key=key):
            terminalreporter.write_line(line)
