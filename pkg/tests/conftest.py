import numpy as np
import pytest
from scipy import integrate

import mislab


@pytest.fixture(scope="session")
def ex1_cfg():
    return mislab.builtin_example1()


@pytest.fixture(scope="session")
def ex1_ps(ex1_cfg):
    return ex1_cfg.proposals.build()


@pytest.fixture(scope="session")
def ex2_cfg():
    return mislab.builtin_example2()


@pytest.fixture(scope="session")
def ex2_ps(ex2_cfg):
    return ex2_cfg.proposals.build()


def full_line_mass(pdf, points=()):
    """Quadrature oracle: integral of pdf over the whole real line.

    The core window is integrated with breakpoints at the density's
    interesting locations; polynomial tails (Student-t) are integrated
    separately out to infinity so the oracle is exact for heavy tails too.
    """
    core, _ = integrate.quad(
        pdf, -40.0, 40.0, points=sorted(points), limit=200
    )
    left, _ = integrate.quad(pdf, -np.inf, -40.0)
    right, _ = integrate.quad(pdf, 40.0, np.inf)
    return core + left + right
