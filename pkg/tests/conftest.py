import numpy as np
import pytest

from nsdsav.mesh import build_rect_coupled
from nsdsav.scenarios.library import manufactured, quiescent
from nsdsav.stepper import Discretization


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def unit_mesh():
    return build_rect_coupled((0, 1, 0, 1), (0, 1, -1, 0), 4, 4, 4)


@pytest.fixture(scope="session")
def distorted_mesh():
    """Unit pair with interior vertices perturbed, so elements are not all alike."""
    from nsdsav.mesh import _assemble

    base = build_rect_coupled((0, 1, 0, 1), (0, 1, -1, 0), 3, 3, 3)
    v = base.vertices.copy()
    gen = np.random.default_rng(7)
    inner = (v[:, 0] > 0) & (v[:, 0] < 1) & (np.abs(v[:, 1]) < 1) & (v[:, 1] != 0)
    v[inner] += gen.uniform(-0.08, 0.08, size=(inner.sum(), 2))
    return _assemble(v, base.triangles, base.subdomain)


@pytest.fixture(scope="session")
def manufactured_disc():
    sc = manufactured()
    return Discretization(sc, sc.mesh(0.25))


@pytest.fixture(scope="session")
def quiescent_disc():
    sc = quiescent()
    return Discretization(sc, sc.mesh(0.125))
