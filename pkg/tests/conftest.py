import numpy as np
import pytest

from gridless_doa.arrays import perturbed_nua
from gridless_doa.ivd import HarmonicModel


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_harmonic_model(rng, m, k, min_gap=None, c_range=(0.1, 10.0),
                          boundary_margin=None):
    """Random NUA positions and unit-circle harmonics with separation.

    ``min_gap`` is the circular phase separation (default 4*pi/m);
    ``boundary_margin`` keeps harmonics away from the +/-pi endfire region
    (default one search-grid cell).
    """
    if min_gap is None:
        min_gap = 4 * np.pi / m
    if boundary_margin is None:
        boundary_margin = 2 * np.pi / (10 * m)
    gamma = perturbed_nua(m, rng).positions
    for _ in range(1000):
        phases = rng.uniform(-np.pi + boundary_margin, np.pi - boundary_margin,
                             size=k)
        sorted_ph = np.sort(phases)
        if k == 1:
            break
        gaps = np.diff(sorted_ph)
        wrap = 2 * np.pi - (sorted_ph[-1] - sorted_ph[0])
        if min(gaps.min(), wrap) >= min_gap:
            break
    else:
        raise RuntimeError("failed to sample separated harmonics")
    c = rng.uniform(*c_range, size=k)
    return HarmonicModel(z=np.exp(1j * phases), c=c, gamma=gamma)
