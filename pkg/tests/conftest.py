from __future__ import annotations

import numpy as np
import pytest
from hypothesis import settings
from hypothesis import strategies as st

from xhold import FirmNetwork

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

holding = st.floats(0.0, 0.9, allow_nan=False)
asset = st.floats(0.05, 10.0, allow_nan=False)
debt = st.floats(0.1, 5.0, allow_nan=False)


@st.composite
def two_firm_networks(draw):
    return FirmNetwork.two_firm(draw(debt), draw(debt), m12s=draw(holding), m21s=draw(holding),
                                m12d=draw(holding), m21d=draw(holding))


@st.composite
def n_firm_networks(draw, n_min=1, n_max=5):
    """Random valid networks: off-diagonal weights scaled so each column sums below 0.95."""
    n = draw(st.integers(n_min, n_max))
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    mats = []
    for _ in range(2):
        m = rng.uniform(0, 1, (n, n)) * (rng.uniform(size=(n, n)) < 0.7)
        np.fill_diagonal(m, 0.0)
        col = m.sum(axis=0)
        target = rng.uniform(0, 0.95, n)
        m = m * np.where(col > 0, target / np.where(col > 0, col, 1.0), 0.0)
        mats.append(m)
    d = rng.uniform(0.1, 5.0, n)
    return FirmNetwork(d, mats[0], mats[1])


def random_two_firm(rng: np.random.Generator):
    """Config from the acceptance ranges: network, spot."""
    m12s, m21s, m12d, m21d = rng.uniform(0, 0.9, 4)
    d = rng.uniform(0.1, 5.0, 2)
    a = rng.uniform(0.05, 10.0, 2)
    return FirmNetwork.two_firm(*d, m12s=m12s, m21s=m21s, m12d=m12d, m21d=m21d), a


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
