import pytest

from zollfins import example1, example2, round_sphere


@pytest.fixture(scope="session")
def sphere():
    return round_sphere()


@pytest.fixture(scope="session")
def ex1():
    """h(x) = 0.25 (1 - x^2) x."""
    return example1(0.25)


@pytest.fixture(scope="session")
def ex1_strong():
    """h(x) = 0.45 (1 - x^2) x, close to the curvature-positivity limit."""
    return example1(0.45)


@pytest.fixture(scope="session")
def ex2():
    """h(x) = x (1 - x^2)^2."""
    return example2()


@pytest.fixture(scope="session")
def bad_curvature():
    """h(x) = 0.6 (1 - x^2) x: admissible profile whose curvature dips below 0."""
    return example1(0.6)


@pytest.fixture(scope="session")
def all_good(sphere, ex1, ex1_strong, ex2):
    return [sphere, ex1, ex1_strong, ex2]
