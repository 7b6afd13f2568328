import re
from pathlib import Path

import numpy as np
import pytest

from noisyprach.prach_gen import GenConfig, generate_dataset

ROOT = Path(__file__).resolve().parents[1]
SOURCE_DOC = ROOT / "paper.md"


@pytest.fixture(scope="session")
def source_text():
    if not SOURCE_DOC.exists():
        pytest.skip("source document not present")
    return SOURCE_DOC.read_text()


def find_number(text, pattern):
    """First capture group of ``pattern`` in ``text`` as a float."""
    m = re.search(pattern, text)
    assert m is not None, f"pattern {pattern!r} not found"
    return float(m.group(1).replace(",", ""))


@pytest.fixture(scope="session")
def small_dataset():
    return generate_dataset(GenConfig(n_records=1000, seed=11))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# one summary line per acceptance criterion, shown at the end of the run
ACCEPTANCE_LINES: list[str] = []


def record_acceptance(line: str) -> None:
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
