import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from fixture_gen import (  # noqa: E402
    CASE1_NOMINAL,
    FIXTURES,
    GEN2F_TRUTH,
    case1_grasps,
    gen2f_grasps,
    load_fixture_hand,
)


@pytest.fixture(scope="session")
def gen2f_hand():
    return load_fixture_hand("gen2f")


@pytest.fixture(scope="session")
def case1_hand():
    return load_fixture_hand("case1")


@pytest.fixture(scope="session")
def case2_hand():
    return load_fixture_hand("case2")


@pytest.fixture(scope="session")
def case3_hand():
    return load_fixture_hand("case3")


@pytest.fixture(scope="session")
def gen2f_grasp_set(gen2f_hand):
    return gen2f_grasps(gen2f_hand)


@pytest.fixture(scope="session")
def case1_grasp_set(case1_hand):
    return case1_grasps(case1_hand)


@pytest.fixture(scope="session")
def fixtures_dir():
    return FIXTURES
