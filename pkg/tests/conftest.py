import numpy as np
import pytest

from occfactor.integrals import HubbardSpec, build_hubbard
from occfactor.natorb import no_pipeline


@pytest.fixture(scope="session")
def no_solution():
    """Cached natural-orbital pipeline results keyed by (sites, u, boundary)."""
    cache = {}

    def get(n_sites, u, boundary="open"):
        key = (n_sites, float(u), boundary)
        if key not in cache:
            integrals = build_hubbard(
                HubbardSpec(n_sites=n_sites, u=u, boundary=boundary))
            half = n_sites // 2
            cache[key] = no_pipeline(integrals, half, half)
        return cache[key]

    return get


@pytest.fixture()
def rng():
    return np.random.default_rng(20240801)
