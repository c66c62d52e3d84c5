import os

import numpy as np
import pytest

import helpers


FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)


@pytest.fixture
def std2():
    return helpers.two_qubit_interp()


@pytest.fixture
def std1():
    return helpers.one_qubit_interp()


@pytest.fixture
def fixture_path():
    def _path(name):
        return os.path.join(FIXTURES, name)

    return _path


@pytest.fixture
def fixture_text(fixture_path):
    def _text(name):
        with open(fixture_path(name), "r", encoding="utf-8") as fh:
            return fh.read()

    return _text
