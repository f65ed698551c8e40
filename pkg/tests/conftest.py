import sys
from pathlib import Path

import dataclasses

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from mmwsim.config import default_config


@pytest.fixture
def small_config():
    """Light scenario for pipeline tests: 4 operators, sparse."""
    return dataclasses.replace(
        default_config(), bs_density=20.0, ue_density=40.0, iterations=5, seed=7
    )
