import numpy as np
import pytest

from binmix.grid import GridSpec, apply_dirichlet, apply_neumann, zero_vertex_boundary


def random_cell(grid, rng, neumann=True):
    f = rng.standard_normal(grid.shape("cell"))
    return apply_neumann(grid, f) if neumann else f


def random_velocity(grid, rng):
    u = rng.standard_normal(grid.shape("ew"))
    v = rng.standard_normal(grid.shape("ns"))
    return apply_dirichlet(grid, u, v)


def random_vertex(grid, rng, zero_boundary=False):
    f = rng.standard_normal(grid.shape("vertex"))
    return zero_vertex_boundary(grid, f) if zero_boundary else f


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def small_grid():
    return GridSpec(1.3, 0.9, 7, 5, x0=-0.2, y0=0.4)


ACCEPTANCE_LINES = []


def record_criterion(number, ok, detail):
    ACCEPTANCE_LINES.append(f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
