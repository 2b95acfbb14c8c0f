import numpy as np
import pytest

from elastonet.model import INTERIOR, TERMINAL, Network, Node, Spring


def series_chain(k1=1.0, k2=1.0) -> Network:
    """Terminals (0,0), (2,0) joined through an interior node at (1,0)."""
    return Network(
        2,
        (Node("a", (0, 0), 0, TERMINAL), Node("m", (1, 0), 0, INTERIOR), Node("b", (2, 0), 0, TERMINAL)),
        (Spring(("a", "m"), k1), Spring(("m", "b"), k2)),
    )


def single_mass_chain(k=1.0, m=1.0, prefix="") -> Network:
    """Terminal at the origin, a mass at (1,0), one spring along x."""
    return Network(
        2,
        (Node(prefix + "a", (0, 0), 0, TERMINAL), Node(prefix + "m", (1, 0), m, INTERIOR)),
        (Spring((prefix + "a", prefix + "m"), k),),
    )


def triangle(k=1.0) -> Network:
    pts = [(0, 0), (1, 0), (0, 1)]
    nodes = tuple(Node(f"t{i}", p, 0, TERMINAL) for i, p in enumerate(pts))
    springs = tuple(Spring((f"t{i}", f"t{j}"), k) for i, j in [(0, 1), (1, 2), (0, 2)])
    return Network(2, nodes, springs)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
