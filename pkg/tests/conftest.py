import numpy as np
import pytest

from confset import Window, build_geodesic_graph, extract_conflict
from confset.scenes import transversal_planes_complex, walls_and_poles_scene

WORKERS = 4  # worker count never affects output bytes; use a few for speed


@pytest.fixture(scope="session")
def walls_poles():
    return walls_and_poles_scene()


@pytest.fixture(scope="session")
def germ_complex(walls_poles):
    """Fine extraction of the walls-and-poles conflict set around the
    origin; shared by the embedding, link and slice tests."""
    return extract_conflict(walls_poles, Window.cube(0.45, 3), 144,
                            workers=WORKERS)


@pytest.fixture(scope="session")
def germ_graph(germ_complex):
    return build_geodesic_graph(germ_complex)


@pytest.fixture(scope="session")
def cone_complex():
    return transversal_planes_complex()


@pytest.fixture(scope="session")
def origin3():
    return np.zeros(3)
