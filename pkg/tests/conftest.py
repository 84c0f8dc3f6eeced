import json
from pathlib import Path

import hypothesis
import numpy as np
import pytest

from tripod_hom import SchmidtDecomposition, make_grid

hypothesis.settings.register_profile("ci", max_examples=50, deadline=None)
hypothesis.settings.register_profile("fast", max_examples=10, deadline=None)
hypothesis.settings.load_profile("ci")

BASELINES = Path(__file__).parent / "baselines"


def load_baseline(name):
    return json.loads((BASELINES / f"{name}.json").read_text())


def random_decomposition(rng, K, n=16, T_W=1.0, lam=None):
    """Random orthonormal (under quadrature) modes with a random descending spectrum."""
    grid = make_grid(n, T_W)
    q, _ = np.linalg.qr(rng.normal(size=(n, n)))
    modes = q[:, :K] / np.sqrt(grid.weights)[:, None]
    if lam is None:
        lam = np.sort(rng.uniform(0.0, 1.0, size=K))[::-1]
    return SchmidtDecomposition(np.asarray(lam, dtype=float), modes, grid)


def random_coefficients(rng, K):
    c = rng.normal(size=K) + 1j * rng.normal(size=K)
    return c / np.linalg.norm(c)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def grid64():
    return make_grid(64, 1.0)
