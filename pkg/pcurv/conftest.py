"""
Shared fixtures: a seeded random generator and a random operator factory.

PCURV_SEED fixes the seed (default 0); PCURV_SLOW=1 enables tests marked slow.
"""

import os

import numpy as np
import pytest

from pcurv.ore import OperatorX

SEED = int(os.environ.get("PCURV_SEED", "0"))


def pytest_collection_modifyitems(config, items):
    if os.environ.get("PCURV_SLOW") == "1":
        return
    skip_slow = pytest.mark.skip(reason="set PCURV_SLOW=1 to run timing checks")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(SEED)


def make_random_operator(rng: np.random.Generator, max_order: int = 3, max_degree: int = 2,
                         bound: int = 63) -> OperatorX:
    """Operator with 1 <= m <= max_order, x-degree <= max_degree, coefficients in [-bound, bound]."""
    m = int(rng.integers(1, max_order + 1))
    d = int(rng.integers(0, max_degree + 1))
    while True:
        rows = [[int(c) for c in rng.integers(-bound, bound + 1, size=d + 1)] for _ in range(m + 1)]
        if any(rows[-1]):
            return OperatorX.from_coeffs(rows)
