import numpy as np
import pytest

from mnpz import Instance


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_instance(rng, m, n, capacitated=False, feasible=False):
    A = rng.uniform(-0.5, 0.5, (m, n))
    u = rng.uniform(0.5, 2.0, n) if capacitated else None
    if feasible:
        x = rng.uniform(0.0, 1.0, n)
        if u is not None:
            x = np.minimum(x, u)
        b = A @ x
    else:
        b = rng.uniform(-1.0, 1.0, m)
    return Instance(A, b, u)
