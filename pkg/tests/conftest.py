import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from synth import seed_pairs_for, synthetic_dataset  # noqa: E402

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def data_dir():
    return DATA


@pytest.fixture(scope="session")
def synth():
    return synthetic_dataset()


@pytest.fixture(scope="session")
def seeds(synth):
    # first 8 examples of every domain
    return seed_pairs_for([ex for d in synth.domains for ex in synth.in_domain(d)[:8]])


def pytest_terminal_summary(terminalreporter):
    lines = [l for m in list(sys.modules.values())
             for l in getattr(m, "ACCEPTANCE_LINES", None) or []]
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda l: int(l.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
