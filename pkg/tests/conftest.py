import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from safepath.gridmap import OccupancyGrid, parse_map  # noqa: E402


@pytest.fixture
def open_grid():
    def make(h, w, cell_size=1.0):
        return OccupancyGrid([[False] * w for _ in range(h)], cell_size)

    return make


@pytest.fixture
def ascii_grid():
    def make(rows, cell_size=1.0):
        return parse_map(f"cell {cell_size}\n" + "\n".join(rows) + "\n")

    return make


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(line[1])
