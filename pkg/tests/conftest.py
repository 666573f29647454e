from __future__ import annotations

import itertools
from importlib import resources

import pytest

from tdac.compiler import compile_model
from tdac.runtime import parse_instance_data, parse_script
from tdac.tda import parse_tda

FIXTURES = resources.files("tdac") / "fixtures"


def fixture_bytes(name: str) -> bytes:
    return (FIXTURES / name).read_bytes()


@pytest.fixture(scope="session")
def construction_tda():
    return parse_tda(fixture_bytes("construction.tda.json"))


@pytest.fixture(scope="session")
def construction_data():
    return parse_instance_data(fixture_bytes("construction.data.json"))


@pytest.fixture(scope="session")
def construction_script():
    return parse_script(fixture_bytes("construction.script.json"))


@pytest.fixture(scope="session")
def construction_compiled(construction_tda, construction_data):
    counts = {name: len(records) for name, records in construction_data.items()}
    return compile_model(construction_tda, options_counts=counts)


@pytest.fixture(scope="session")
def login_tda():
    return parse_tda(fixture_bytes("login.tda.json"))


@pytest.fixture(scope="session")
def login_compiled(login_tda):
    return compile_model(login_tda)


@pytest.fixture()
def tick_clock():
    counter = itertools.count()
    return lambda: float(next(counter))
