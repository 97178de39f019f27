import itertools
from pathlib import Path

import numpy as np
import pytest

GAMES = Path(__file__).resolve().parent.parent / "games"


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def games_dir():
    return GAMES


def brute_bias(phi):
    """Independent classical oracle: max over all sign vectors."""
    phi = np.asarray(phi, dtype=float)
    nA, nB = phi.shape
    best = -np.inf
    for b in itertools.product((-1, 1), repeat=nB):
        best = max(best, float(np.abs(phi @ np.array(b)).sum()))
    return best


def random_phi(rng, max_a=4, max_b=4):
    nA, nB = rng.integers(1, max_a + 1), rng.integers(1, max_b + 1)
    return rng.uniform(-1, 1, (nA, nB))
