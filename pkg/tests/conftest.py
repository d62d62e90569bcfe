import pytest

from fraccap.geometry import circle_grid, make_ball, make_polytope

SQUARE = [[1, 1], [-1, 1], [-1, -1], [1, -1]]

# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture(scope="session")
def grid():
    return circle_grid()


@pytest.fixture(scope="session")
def disk(grid):
    return make_ball([0.0, 0.0], 1.0, grid)


@pytest.fixture(scope="session")
def square(grid):
    return make_polytope(SQUARE, grid)


@pytest.fixture
def record():
    def _record(number: int, passed: bool, detail: str):
        ACCEPTANCE_LINES[number] = f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}"
        print(ACCEPTANCE_LINES[number])
    return _record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])

