import numpy as np
import pytest

import carnot_ma as cm


@pytest.fixture(scope="session")
def heis():
    return cm.heisenberg(1)


@pytest.fixture(scope="session")
def w_quartic():
    return cm.explicit_heisenberg_oracle("w_quartic")


@pytest.fixture(scope="session")
def maheis_hamiltonian():
    return cm.Hamiltonian.source(cm.explicit_heisenberg_oracle("f_144"))


def sample_koranyi(count, rng, radius=1.0):
    """Uniform rejection samples of the Koranyi ball of given radius."""
    pts = np.empty((count, 3))
    filled = 0
    while filled < count:
        cand = rng.uniform([-radius, -radius, -radius ** 2],
                           [radius, radius, radius ** 2],
                           size=(2 * count + 16, 3))
        psi = cand[:, 0] ** 2 + cand[:, 1] ** 2
        good = cand[psi ** 2 + cand[:, 2] ** 2 < radius ** 4]
        take = min(count - filled, len(good))
        pts[filled:filled + take] = good[:take]
        filled += take
    return pts
