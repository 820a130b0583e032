import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from modules.criteria import candidate_from_n, compute_gp  # noqa: E402
from modules.search import SubsetFp  # noqa: E402


@pytest.fixture
def cand_51():
    return candidate_from_n(51)


@pytest.fixture
def gp_51(cand_51):
    return compute_gp(cand_51)


@pytest.fixture
def a13():
    return SubsetFp.of(13, [2, 5, 6])


@pytest.fixture
def a5():
    return SubsetFp.of(5, [2, 3])


@pytest.fixture
def checkpoint_path(tmp_path):
    return str(tmp_path / 'sieve.ckpt.json')
