import math

import numpy as np
import pytest

from so2deg.systems import ModelPotential, build_system


def random_orthogonal(rng, n):
    q, r = np.linalg.qr(rng.normal(size=(n, n)))
    return q * np.sign(np.diag(r))


def random_sym(rng, n, scale=4.0):
    M = rng.normal(size=(n, n)) * scale
    return (M + M.T) / 2


def random_nonsingular_hessian(rng, n):
    """Q diag(d) Q^T with |d_i| in [0.2, 3] and random signs."""
    d = rng.uniform(0.2, 3.0, n) * rng.choice([-1.0, 1.0], n)
    Q = random_orthogonal(rng, n)
    return Q @ np.diag(d) @ Q.T


def random_model_system(rng, n_max=4):
    """Consistent model system: simple qualifying eigenvalues, no boundary hits.

    Qualifying eigenvalues of V''(inf) lie in [-a^(-3/2), 0) away from both
    ends; the rest sit well outside that window.
    """
    n = int(rng.integers(1, n_max + 1))
    a = float(rng.uniform(0.2, 2.0))
    edge = a**-1.5
    eig = []
    for _ in range(n):
        kind = rng.integers(0, 3)
        if kind == 0:
            eig.append(-edge * rng.uniform(0.05, 0.95))
        elif kind == 1:
            eig.append(rng.uniform(0.1, 6.0))
        else:
            eig.append(-edge * rng.uniform(1.1, 3.0))
    eig = np.array(eig)
    # keep qualifying eigenvalues simple
    for i in range(n):
        for j in range(i):
            if abs(eig[i] - eig[j]) < 1e-3:
                eig[i] += 0.01
    Q = random_orthogonal(rng, n)
    B = Q @ np.diag(eig) @ Q.T
    B = (B + B.T) / 2
    T = float(rng.uniform(0.5, 10.0))
    return build_system(ModelPotential(B, a), T, name="random")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


TWO_PI = 2 * math.pi
