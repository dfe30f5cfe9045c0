import numpy as np
import pytest

from qnso.cubic import CubicMatrix, symmetrize


def random_sufficient_matrix(rng, m):
    """Random symmetric matrix satisfying i), ii), iii) by construction.

    Diagonal rows are random distributions; each off-diagonal row starts from
    the iii) lower bound scaled by a random factor in [0, 1] and puts the
    remaining mass (>= 1) on a random distribution.
    """
    P = np.zeros((m, m, m))
    for i in range(m):
        P[i, i] = rng.dirichlet(np.ones(m) * rng.uniform(0.2, 2.0))
    for i in range(m):
        for j in range(i + 1, m):
            lower = -np.sqrt(P[i, i] * P[j, j]) / (m - 1)
            base = lower * rng.random(m)
            if rng.random() < 0.3:
                base = lower.copy()          # sit exactly on the bound
            rest = 1.0 - base.sum()
            row = base + rest * rng.dirichlet(np.ones(m))
            P[i, j] = P[j, i] = row
    return symmetrize(P)


def random_cond_ii_matrix(rng, m, spread=0.3):
    """Diagonals in [0, 1]; off-diagonals straddling the iii') bounds. No condition i)."""
    P = np.zeros((m, m, m))
    for i in range(m):
        P[i, i] = rng.random(m)
    for i in range(m):
        for j in range(i + 1, m):
            a, c = P[i, i], P[j, j]
            lo = -np.sqrt(a * c)
            hi = 1.0 + np.sqrt((1 - a) * (1 - c))
            P[i, j] = P[j, i] = rng.uniform(lo - spread, hi + spread)
    return CubicMatrix(P)


def random_stochastic_matrix(rng, m):
    P = rng.dirichlet(np.ones(m), size=(m, m))
    return symmetrize(P)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
