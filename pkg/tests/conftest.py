import pytest

import builders


@pytest.fixture(scope="session")
def cantor():
    return builders.cantor()


@pytest.fixture(scope="session")
def alternating():
    return builders.alternating()


@pytest.fixture(scope="session")
def fat_cantor():
    return builders.fat_cantor()
