import numpy as np
import pytest

from leakgame import files


@pytest.fixture(scope="session")
def millionaires():
    return files.load_game(files.bundled_path("two_millionaires"))


@pytest.fixture(scope="session")
def binary_sum():
    return files.load_game(files.bundled_path("binary_sum"))


@pytest.fixture(scope="session")
def single():
    return files.load_game(files.bundled_path("single_profile"))


@pytest.fixture(scope="session")
def ten_node():
    return files.load_config(files.bundled_path("ten_node_topology"))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


TOPOLOGY_FIXTURES = ["star_topology", "wheel_topology", "line_topology", "ten_node_topology", "manet30_topology"]
GAME_FIXTURES = ["two_millionaires", "binary_sum", "single_profile"]
