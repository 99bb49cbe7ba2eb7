import numpy as np
import pytest

from ncstokes.mesh import Mesh, build_structured_mesh


@pytest.fixture(scope="session")
def reference_triangle_mesh():
    """Single reference triangle (0,0), (1,0), (0,1)."""
    return Mesh([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], [[0, 1, 2]])


@pytest.fixture(scope="session")
def mesh_n2():
    return build_structured_mesh(2)


@pytest.fixture(scope="session")
def mesh_n4():
    return build_structured_mesh(4)


@pytest.fixture(scope="session")
def mesh_n8():
    return build_structured_mesh(8)


@pytest.fixture()
def rng():
    return np.random.default_rng(20240817)
