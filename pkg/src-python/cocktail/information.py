"""Information matrix M(w), its log-determinant and the variance function d(i, j, w).

M(w) is refactorized from scratch for every new weight vector; the d-values
come from triangular solves against the Cholesky factor, never from an
explicit inverse.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy.linalg import LinAlgError, qr, solve_triangular

from .design_space import DesignSpace
from .errors import InvalidWeights, SingularInformation

SIMPLEX_TOL = 1e-12
# A factor pivot below DEGENERACY_FLOOR * max(diag M) means M is singular.
DEGENERACY_FLOOR = 1e-12


@dataclass(frozen=True, eq=False)
class DesignWeights:
    """Probability vector over the candidates; support means w_i > 0 exactly."""

    values: np.ndarray

    @property
    def n(self) -> int:
        return int(self.values.shape[0])

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.values > 0.0)

    @property
    def support_size(self) -> int:
        return int(np.count_nonzero(self.values > 0.0))


def make_weights(
    values: Iterable[float] | np.ndarray,
    *,
    n: Optional[int] = None,
    tol: float = SIMPLEX_TOL,
) -> DesignWeights:
    """Validate a probability vector (nonnegative, summing to 1 within ``tol``)."""
    array = np.array(values, dtype=float, copy=True).reshape(-1)
    if n is not None and array.shape[0] != n:
        raise InvalidWeights('invalid-weights', f'{array.shape[0]} weights for {n} candidates')
    if array.size == 0:
        raise InvalidWeights('invalid-weights', 'empty weight vector')
    if not np.all(np.isfinite(array)):
        raise InvalidWeights('invalid-weights', 'weights must be finite')
    if np.any(array < 0.0):
        index = int(np.flatnonzero(array < 0.0)[0])
        raise InvalidWeights('invalid-weights', f'weight {index + 1} is negative ({array[index]!r})')
    total = math.fsum(array)
    if abs(total - 1.0) > tol:
        raise InvalidWeights('invalid-weights', f'weights sum to {total!r}, not 1')
    array.flags.writeable = False
    return DesignWeights(values=array)


def renormalized(values: np.ndarray) -> DesignWeights:
    """Divide by the sum; exact zeros stay exact zeros."""
    array = np.array(values, dtype=float, copy=True)
    total = math.fsum(array)
    if not total > 0.0:
        raise InvalidWeights('invalid-weights', 'weights have no mass')
    array /= total
    array.flags.writeable = False
    return DesignWeights(values=array)


class InformationState:
    """M(w) with its lower Cholesky factor and log-determinant for one weight vector."""

    def __init__(
        self,
        space: DesignSpace,
        weights: DesignWeights,
        matrix: np.ndarray,
        factor: np.ndarray,
        log_det: float,
    ) -> None:
        self.space = space
        self.weights = weights
        self.matrix = matrix
        self.factor = factor
        self.log_det = float(log_det)
        self._d_all: Optional[np.ndarray] = None

    @property
    def m(self) -> int:
        return self.space.dim_m

    @property
    def w(self) -> np.ndarray:
        return self.weights.values

    def whitened(self, indices: Optional[Sequence[int] | np.ndarray] = None) -> np.ndarray:
        """Columns L^-1 x_i for the requested candidates (all if None)."""
        points = self.space.points if indices is None else self.space.points[np.asarray(indices)]
        return solve_triangular(self.factor, points.T, lower=True, check_finite=False)

    def d_values(self, indices: Optional[Sequence[int] | np.ndarray] = None) -> np.ndarray:
        """d(i, w) for the requested candidates; the full pass is cached."""
        if indices is None:
            if self._d_all is None:
                z = self.whitened()
                self._d_all = np.einsum('ij,ij->j', z, z)
                self._d_all.flags.writeable = False
            return self._d_all
        indices = np.asarray(indices, dtype=int)
        if self._d_all is not None:
            return self._d_all[indices]
        z = self.whitened(indices)
        return np.einsum('ij,ij->j', z, z)

    def d_pair(self, j: int, k: int) -> tuple[float, float, float]:
        """(d(j, w), d(k, w), d(j, k, w)) from one pair of triangular solves."""
        z = self.whitened([j, k])
        zj, zk = z[:, 0], z[:, 1]
        return float(zj @ zj), float(zk @ zk), float(zj @ zk)


def make_state(space: DesignSpace, weights: DesignWeights) -> InformationState:
    """Factorize M(w) = sum_i w_i x_i x_i^T for a nonsingular design."""
    if weights.n != space.n:
        raise InvalidWeights('invalid-weights', f'{weights.n} weights for {space.n} candidates')
    support = weights.support
    if support.size < space.dim_m:
        raise SingularInformation(f'support of {support.size} points cannot span R^{space.dim_m}')

    points = space.points[support]
    root = np.sqrt(weights.values[support])[:, None] * points
    matrix = root.T @ root
    matrix = 0.5 * (matrix + matrix.T)
    scale = float(np.max(np.diag(matrix)))
    if not scale > 0.0:
        raise SingularInformation('information matrix is zero')

    # R of W^1/2 X equals the Cholesky factor L^T of M up to row signs.
    try:
        r = qr(root, mode='r', check_finite=False)[0][: space.dim_m]
    except LinAlgError as error:
        raise SingularInformation(f'factorization failed: {error}')
    signs = np.where(np.diag(r) < 0.0, -1.0, 1.0)
    factor = np.ascontiguousarray((signs[:, None] * r).T)

    pivots = np.diag(factor)
    if not np.all(pivots > DEGENERACY_FLOOR * scale):
        raise SingularInformation(
            f'factor pivot {float(np.min(pivots)):.3e} below floor {DEGENERACY_FLOOR * scale:.3e}'
        )

    log_det = 2.0 * float(np.sum(np.log(pivots)))
    return InformationState(space, weights, matrix, factor, log_det)


def d_value(state: InformationState, i: int) -> float:
    """d(i, w) = x_i^T M^-1(w) x_i, the partial derivative of log det M in w_i."""
    return float(state.d_values([i])[0])


def d_cross(state: InformationState, i: int, j: int) -> float:
    """d(i, j, w) = x_i^T M^-1(w) x_j."""
    return state.d_pair(i, j)[2]


def weighted_mean_d(state: InformationState) -> float:
    """sum_i w_i d(i, w); equals m analytically and serves as a self-check."""
    support = state.weights.support
    return float(np.dot(state.w[support], state.d_values(support)))
