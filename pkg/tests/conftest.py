"""Shared test fixtures for the cocktail test suite."""

import os
import sys

import numpy as np
import pytest

# Add src-python to path so we can import the cocktail package
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'src-python'))

from cocktail.design_space import make_space  # noqa: E402


def log_det_of(points: np.ndarray, weights: np.ndarray) -> float:
    """log det of sum_i w_i x_i x_i^T for any nonnegative (unnormalized) w."""
    matrix = points.T @ (weights[:, None] * points)
    sign, value = np.linalg.slogdet(matrix)
    return float(value) if sign > 0 else -np.inf


def random_space(rng: np.random.Generator, n: int, m: int):
    """Gaussian candidate matrix; full rank with probability one."""
    return make_space(rng.standard_normal((n, m)), source=f'random(n={n},m={m})')


def random_weights(rng: np.random.Generator, n: int, m: int) -> np.ndarray:
    """Dirichlet weights on a random support of at least m points."""
    size = int(rng.integers(m, n + 1))
    support = rng.choice(n, size=size, replace=False)
    values = np.zeros(n)
    values[support] = rng.dirichlet(np.ones(size))
    return values / values.sum()


@pytest.fixture
def diag_space():
    """Orthonormal pair {(1,0), (0,1)}; the uniform design is D-optimal."""
    return make_space([[1.0, 0.0], [0.0, 1.0]], source='diag')


@pytest.fixture
def line_space():
    """m=1 space {1, 2}; the point mass on 2 is D-optimal."""
    return make_space([[1.0], [2.0]], source='line')


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
