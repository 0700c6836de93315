import pathlib

import pytest

from viewforge.workspace import parse_workspace

FIXTURES = pathlib.Path(__file__).parent / "fixtures"
GOLDEN = pathlib.Path(__file__).parent / "golden"


def load_workspace(name):
    result = parse_workspace((FIXTURES / name).read_text())
    assert result.ok, [str(d) for d in result.diagnostics]
    return result.workspace


@pytest.fixture(scope="session")
def example1():
    return load_workspace("example1.vf")


@pytest.fixture(scope="session")
def square():
    return load_workspace("square.vf")


@pytest.fixture(scope="session")
def symmetric():
    return load_workspace("symmetric.vf")


@pytest.fixture(scope="session")
def makesafe():
    return load_workspace("makesafe.vf")
