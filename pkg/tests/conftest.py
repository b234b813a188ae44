import math
from pathlib import Path

import pytest
from hypothesis import settings

from bogoscope.model import LatticeSpec

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

SCHEMA_DIR = Path(__file__).resolve().parents[1] / "src" / "bogoscope" / "schemas"


@pytest.fixture
def lat1():
    """1-D lattice with spacing 0.15 and 20 modes on each side."""
    return LatticeSpec.from_spacing(1, 0.15, 3.0)


@pytest.fixture
def unit_lattice():
    """L = 2 pi so integer momenta are physical; modes -2..2."""
    return LatticeSpec(1, 2 * math.pi, 2.0)


# one line per acceptance criterion, filled by test_acceptance
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
