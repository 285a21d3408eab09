from __future__ import annotations

import pytest

from augindex.registry import get_example


@pytest.fixture(scope="session")
def sg_system():
    return get_example("sg2").system()


@pytest.fixture(scope="session")
def sg_graph():
    return get_example("sg2").augmented(7)


@pytest.fixture(scope="session")
def sg_graph8():
    return get_example("sg2").augmented(8)


@pytest.fixture(scope="session")
def hata_graph():
    return get_example("hata").augmented(7)


@pytest.fixture(scope="session")
def aniso_graph():
    return get_example("aniso-binary").augmented(10)


@pytest.fixture(scope="session")
def golden_graph():
    return get_example("bernoulli-golden").augmented(8)
