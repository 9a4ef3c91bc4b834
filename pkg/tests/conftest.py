import os
import sys
import time
from pathlib import Path

import pytest
from hypothesis import settings

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

DATA = Path(__file__).parent / "data"


@pytest.fixture
def data_dir():
    return DATA


@pytest.fixture
def se_fixture_bytes():
    return (DATA / "se_fixture.json").read_bytes()


SUITE_WALL_LIMIT_S = 60.0
_start = time.perf_counter()


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    elapsed = time.perf_counter() - _start
    verdict = "PASS" if elapsed < SUITE_WALL_LIMIT_S else "FAIL"
    terminalreporter.write_line(f"suite wall time {verdict}: {elapsed:.1f}s (limit {SUITE_WALL_LIMIT_S:.0f}s)")


def pytest_sessionfinish(session, exitstatus):
    if time.perf_counter() - _start >= SUITE_WALL_LIMIT_S and exitstatus == 0:
        session.exitstatus = 1
