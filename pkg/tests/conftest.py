import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from support import MINI, two_day_plan, two_day_query  # noqa: E402

from llm_modulo.sandbox import load_sandbox  # noqa: E402


@pytest.fixture(scope="session")
def mini():
    return load_sandbox(MINI)


@pytest.fixture
def plan2():
    return two_day_plan()


@pytest.fixture
def query2():
    return two_day_query()


@pytest.fixture(scope="session")
def synthetic_world(tmp_path_factory):
    """Synthetic sandbox plus a 20-query corpus the greedy planner can solve."""
    from llm_modulo.synthetic import synthetic_world as build

    return build(tmp_path_factory.mktemp("synth"), seed=0, n=20)
