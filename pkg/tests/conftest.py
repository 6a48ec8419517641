import numpy as np
import pytest

from nhcorr.model import TfimParams, build_quasi_hermitian

FIGURE_N = 11
FIGURE_TIMES = tuple(float(t) for t in np.linspace(0.0, 5.0, 51))


@pytest.fixture(scope="session")
def chain_model():
    """Memoized quasi-Hermitian models; the n=11 eigendecompositions are the
    expensive part of the acceptance scans and are shared across tests."""
    cache: dict[tuple[int, float], object] = {}

    def get(n: int, gamma: float):
        key = (n, round(gamma, 12))
        if key not in cache:
            cache[key] = build_quasi_hermitian(TfimParams(n=n, gamma=gamma))
        return cache[key]

    return get
