import os
import sys

import pytest

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from mcprover import shell  # noqa: E402

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")


def fixture_path(name):
    return os.path.join(FIXTURES, name)


def read_fixture(name):
    with open(fixture_path(name)) as f:
        return f.read()


@pytest.fixture(scope="session")
def natural():
    return shell.parse_theory(read_fixture("natural.th"))


@pytest.fixture(scope="session")
def np_theory():
    return shell.parse_theory(read_fixture("np.th"))


@pytest.fixture(scope="session")
def lrev():
    return shell.parse_theory(read_fixture("lrev.th"))


@pytest.fixture(scope="session")
def ngt():
    return shell.parse_theory(read_fixture("ngt.th"))


@pytest.fixture(scope="session")
def pal():
    return shell.parse_theory(read_fixture("pal.th"))


@pytest.fixture(scope="session")
def lapp():
    return shell.parse_theory(read_fixture("lapp.th"))


@pytest.fixture(scope="session")
def nf2():
    return shell.parse_theory(read_fixture("nf2.th"))


@pytest.fixture(scope="session")
def mset():
    return shell.parse_theory(read_fixture("mset.th"))
