import sys
from pathlib import Path

import pytest

# the mpmath reference module lives beside the tests
sys.path.insert(0, str(Path(__file__).parent))

_STASH_KEY = pytest.StashKey[list]()


def record_acceptance(config, line: str):
    config.stash.setdefault(_STASH_KEY, []).append(line)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_STASH_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
