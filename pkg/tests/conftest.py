"""Shared session fixtures.

The large local-time sample sets are expensive (minutes of path generation),
so they are computed once per session and shared between the module tests
and the acceptance suite.
"""

import numpy as np
import pytest

from wz_she_lab import brownian as bw
from wz_she_lab import functionals as fn
from wz_she_lab.mollifier import default_mollifier

MASTER_SEED = 20260823


@pytest.fixture(scope="session")
def constants_big():
    """Full-replication constants: quadrature c with a 10^5-path MC check and
    both second-order routes at 2*10^4 paths."""
    est, c_mc = fn.compute_constants(
        MASTER_SEED + 10, npaths_c=100_000, npaths_sigma=20_000, npaths_prime=20_000
    )
    return est, c_mc


@pytest.fixture(scope="session")
def moll():
    return default_mollifier()


@pytest.fixture(scope="session")
def local_time_samples_big():
    """10^5 occupation local-time estimates L(1, 0; B), dt=1e-5, delta=0.01."""
    return bw.local_time_samples(100_000, 1.0, 1e-5, 0.01, seed=MASTER_SEED + 1)


@pytest.fixture(scope="session")
def pair_local_time_samples_big():
    """10^5 intersection local-time estimates ell(1), dt=1e-5, delta=0.01."""
    return bw.intersection_local_time_samples(
        100_000, 1.0, 1e-5, 0.01, seed=MASTER_SEED + 2
    )


def mean_se(x):
    x = np.asarray(x, dtype=float)
    return float(x.mean()), float(x.std(ddof=1) / np.sqrt(len(x)))
