"""Collects acceptance-criterion result lines and echoes them after the run.

Output capture swallows prints from inside tests, so the acceptance tests
register their pass/fail lines here and a terminal-summary hook writes
them where the user (and any tee'd log) can see them.
"""

criterion_lines: list[str] = []


def record_criterion(line: str) -> None:
    criterion_lines.append(line)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if criterion_lines:
        terminalreporter.section("acceptance criteria")
        for line in criterion_lines:
            terminalreporter.write_line(line)
