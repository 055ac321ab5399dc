"""Suite configuration: prints the acceptance summary after the run."""

from __future__ import annotations

import pytest

from testhelpers import ACCEPTANCE_LINES


@pytest.hookimpl(trylast=True)
def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
