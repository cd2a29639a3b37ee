import numpy as np
import pytest

from genricci import functional as fn
from genricci import lattice as lat
from genricci import presets

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def su2_soliton():
    return fn.with_minimizer(presets.su2_state(1.0))


@pytest.fixture(scope="session")
def hopf():
    return fn.with_minimizer(presets.hopf_state())


@pytest.fixture(scope="session")
def hopf_cs():
    return presets.complex_structure("hopf")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def smooth_lattice(N=8, seed=0, amplitude=0.1, torsion=0.0, dim=3, stencil_order=2, **kw):
    grid = lat.LatticeGrid(dim, N, stencil_order=stencil_order)
    return presets.random_lattice_state(grid, np.random.default_rng(seed), amplitude=amplitude,
                                        torsion=torsion, **kw)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
