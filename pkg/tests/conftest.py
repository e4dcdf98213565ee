import numpy as np
import pytest

from mfs_cauchy import BoundaryGeometry, CauchyProblem, ExactSolution, prepare


@pytest.fixture(scope="session")
def disk_problem():
    return CauchyProblem(BoundaryGeometry.unit_disk(), ExactSolution.exp_trig(), 600, 28, (3.2,))


@pytest.fixture(scope="session")
def disk_prep(disk_problem):
    return prepare(disk_problem)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def fd_tangent_normal(geom, theta, which="outer", h=1e-6):
    """Outward normal from a centred finite-difference tangent rotated by -90 degrees."""
    def point(t):
        r = geom.radius(t, which)
        return np.column_stack([r * np.cos(t), r * np.sin(t)])

    t = np.atleast_1d(theta)
    tan = (point(t + h) - point(t - h)) / (2 * h)
    n = np.column_stack([tan[:, 1], -tan[:, 0]])
    n /= np.linalg.norm(n, axis=1)[:, None]
    return -n if which == "inner" else n
