import numpy as np
import pytest

from gaugechain import Chain, ResonatorParams


def random_chain(rng, n, gamma_range=(0.0, 2.0), param_range=(0.5, 3.0)) -> Chain:
    """Ad-hoc chain with i.i.d. resonator parameters, used as test fodder."""
    lo, hi = param_range
    glo, ghi = gamma_range
    return Chain.from_resonators(
        ResonatorParams(
            v=rng.uniform(lo, hi),
            ell=rng.uniform(lo, hi),
            s=rng.uniform(lo, hi),
            gamma=rng.uniform(glo, ghi),
        )
        for _ in range(n)
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
