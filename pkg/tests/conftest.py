"""Collects the acceptance-criteria pass/fail lines and echoes them in the
terminal summary so they survive pytest's output capture."""

ACCEPTANCE_LINES = []


def record(line):
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
