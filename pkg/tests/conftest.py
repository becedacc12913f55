from pathlib import Path

import pytest

from branchcut.qform import load_spec, normalize_spec

FIXTURES_DPATH = Path(__file__).resolve().parent.parent / "fixtures"


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long running numerical sweeps and large Monte Carlo runs")


@pytest.fixture
def fixtures_dpath():
    return FIXTURES_DPATH


@pytest.fixture
def exp1():
    return normalize_spec([(1.0, 2, 0.0)])


@pytest.fixture
def chi2_3():
    return load_spec(FIXTURES_DPATH / "chi2_3.json")


@pytest.fixture
def theta1():
    return load_spec(FIXTURES_DPATH / "theta1.json")


@pytest.fixture
def theta2():
    return load_spec(FIXTURES_DPATH / "theta2.json")


@pytest.fixture
def noncentral_mix():
    return normalize_spec([(0.8, 1, 0.5), (1.7, 3, 0.0), (3.1, 2, 1.2)])
