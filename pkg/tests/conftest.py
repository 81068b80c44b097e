import pytest

from kedfl.scenario import ScenarioGeometry, sized_edge

FREQ = 2.486e9


@pytest.fixture(scope="session")
def geom():
    """5 m indoor link, antennas 0.9 m above the floor."""
    return ScenarioGeometry.from_frequency(5.0, 0.9, FREQ)


@pytest.fixture(scope="session")
def person(geom):
    def make(x, y=0.0, c=0.55, h=1.8):
        return sized_edge(geom, x, y, c, h)

    return make


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
