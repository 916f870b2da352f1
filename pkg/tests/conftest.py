import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from xindex.catalog import default_catalog  # noqa: E402

FIXTURES = Path(__file__).parent / "fixtures"
REPO = Path(__file__).resolve().parents[1]


@pytest.fixture(scope="session")
def catalog():
    return default_catalog()


@pytest.fixture
def demo_dir():
    return REPO / "fixtures" / "demo"


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
