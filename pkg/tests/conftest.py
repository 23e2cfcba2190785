import math

import numpy as np
import pytest

from orbitlab import fuchsian as fg
from orbitlab import nets as nt
from orbitlab import regions as rg


@pytest.fixture(scope="session")
def psl_group():
    return fg.GroupPresentation.psl2z()


@pytest.fixture(scope="session")
def psl_enum8(psl_group):
    return fg.enumerate_orbit(psl_group, (0.0, 1.0), 8.0)


@pytest.fixture(scope="session")
def psl_enum12(psl_group):
    return fg.enumerate_orbit(psl_group, (0.0, 1.0), 12.0)


@pytest.fixture(scope="session")
def ball_net_small():
    region = rg.PlaneBall((0.0, 1.0), 6.5)
    return nt.build_net(region, 0.8, seed=2, n_stream=40_000)


@pytest.fixture(scope="session")
def strip_arena():
    """Quotient strip net + thick diameter + step table for walk tests."""
    from orbitlab import walk
    from orbitlab._kernels import max_pairwise_dist

    strip = rg.PeriodicStrip(1.0, 0.002, 1.0)
    net = nt.build_net(strip, 0.30, seed=11, n_stream=150_000)
    thick = np.ascontiguousarray(net.points[net.points[:, 1] <= 0.05])
    diam = max_pairwise_dist(thick, 1, 1.0)
    table = walk.NeighborTable(net, 5.0)
    return net, diam, table
