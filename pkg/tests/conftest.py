import logging

import numpy as np
import pytest

from abconslaw.backward import reconstruct
from abconslaw.catalogue import omega2_case, omega3_case
from abconslaw.forward import GridSpec, evolve_forward
from abconslaw.profile import PiecewiseProfile

GRID = GridSpec(-10.0, 24.0, 4000)


@pytest.fixture(autouse=True)
def _quiet_boundary_warnings(caplog):
    caplog.set_level(logging.ERROR, logger="abconslaw.forward")


@pytest.fixture(scope="session")
def grid():
    return GRID


@pytest.fixture(scope="session")
def case3():
    return omega3_case(-1.0, -16.0)


@pytest.fixture(scope="session")
def case2():
    return omega2_case(-1.0)


@pytest.fixture(scope="session")
def run3(case3):
    return reconstruct(case3.conn, case3.omega, 1.0, GRID)


@pytest.fixture(scope="session")
def run2(case2):
    return reconstruct(case2.conn, case2.omega, 1.0, GRID)


@pytest.fixture(scope="session")
def forward3(case3):
    """Forward solves towards omega3 of the vertex, both members and their midpoint blend."""
    u01, u02 = case3.extras["u01"], case3.extras["u02"]
    data = {"u0_star": case3.u0, "u01": u01, "u02": u02,
            "blend": (0.5 * u01 + 0.5 * u02).simplify()}
    return {k: evolve_forward(case3.conn, v, 1.0, GRID) for k, v in data.items()}


def random_steps(rng, n_min=2, n_max=6, lo=-6.0, hi=6.0, span=3.0):
    k = int(rng.integers(n_min, n_max + 1))
    breaks = np.sort(rng.uniform(-span, span, k))
    return PiecewiseProfile.from_pieces(breaks, rng.uniform(lo, hi, k + 1))


def compact_bump(rng, lo=-3.0, hi=3.0, span=3.0, k=3):
    breaks = np.sort(rng.uniform(-span, span, k + 1))
    return PiecewiseProfile.from_pieces(breaks, np.r_[0.0, rng.uniform(lo, hi, k), 0.0])
