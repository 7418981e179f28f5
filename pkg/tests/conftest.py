import copy

import numpy as np
import pytest

from src.landmark.detector import SyntheticDetector
from src.landmark.vocabulary import LabelVocabulary
from src.models.world import Vec3
from src.sim.world import WorldParams, assemble_world, generate_world
from src.utils.config import RunConfig

TINY = {
    "world": {"node_count": 9, "floors": 1, "vocab_size": 16, "seen_worlds": 2, "unseen_worlds": 1},
    "syfis": {"trajectories_per_world": 6, "path_length_min": 3, "path_length_max": 4},
    "model": {"embed_dim": 8, "hidden_dim": 8, "mlp_hidden": 8, "max_text_len": 48},
    "train": {"pretrain_steps": 3, "pretrain_batch": 4, "agent_steps": 2, "agent_batch": 2, "log_every": 1},
    "rollout": {"max_steps": 6},
}


@pytest.fixture(scope="session")
def tiny_settings():
    return copy.deepcopy(TINY)


@pytest.fixture
def tiny_config(tmp_path, tiny_settings):
    config = RunConfig.from_dict({**tiny_settings, "output_dir": str(tmp_path / "run")})
    config.validate_config()
    return config


@pytest.fixture
def world_params():
    return WorldParams(node_count=9, floors=1, vocab_size=16)


@pytest.fixture
def world(world_params):
    return generate_world(3, world_params)


@pytest.fixture
def two_floor_world():
    return generate_world(11, WorldParams(node_count=12, floors=2, vocab_size=16))


@pytest.fixture
def detector():
    return SyntheticDetector(LabelVocabulary.default(16))


@pytest.fixture
def line_graph():
    """Six viewpoints one unit apart along +x, edges between consecutive ones"""
    positions = [Vec3(float(i), 0.0, 0.0) for i in range(6)]
    params = WorldParams(node_count=6, floors=1, vocab_size=8, jitter=0.0)
    return assemble_world("line", 0, positions, [(i, i + 1) for i in range(5)], params, rng=np.random.default_rng(0))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
