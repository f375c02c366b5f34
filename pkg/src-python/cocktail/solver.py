"""Drive a step kernel from a starting design to the equivalence-theorem criterion."""

from __future__ import annotations

import math
import os
import time
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial.distance import pdist, squareform

from .design_space import DesignSpace, min_nonzero_spacing, nearest_candidate_spacings
from .errors import (
    DegenerateStart,
    InvalidConfig,
    InvalidWeights,
    MonotonicityViolation,
    SingularInformation,
    SolveCancelled,
)
from .information import (
    SIMPLEX_TOL,
    DesignWeights,
    InformationState,
    make_state,
    make_weights,
    renormalized,
)
from .kernels import KERNELS, converged

ALGORITHMS = ('ma', 'vdm', 'vem', 'cocktail')
INIT_UNIFORM = 'uniform'
INIT_RANDOM_SUPPORT = 'random-support'

STATUS_CONVERGED = 'CONVERGED'
STATUS_ITERATION_CAP = 'ITERATION_CAP'
STATUS_DEGENERATE_START = 'DEGENERATE_START'
STATUS_ABORTED = 'ABORTED'

# numpy.random.default_rng bit generator; pinned in every trace header.
RNG_ALGORITHM = 'PCG64'

_VERBOSE_LOGS = os.environ.get('COCKTAIL_VERBOSE_LOGS', '').strip().lower() in {
    '1',
    'true',
    'yes',
    'on',
}


def _debug_log(message: str):
    """Log a debug message if debug mode is enabled."""
    if _VERBOSE_LOGS:
        print(message)


def normalize_algorithm(value: Any) -> str:
    """Canonical algorithm name (`MA`, ` ma `, `multiplicative` -> `ma`); unknown names raise invalid-config."""
    mode = str(value or '').strip().lower()
    if mode in {'ma', 'multiplicative'}:
        return 'ma'
    if mode in {'vem', 'vertex-exchange'}:
        return 'vem'
    if mode in {'vdm', 'vertex-direction'}:
        return 'vdm'
    if mode == 'cocktail':
        return 'cocktail'
    raise InvalidConfig('invalid-config', f'unknown algorithm {value!r}; expected one of {ALGORITHMS}')


def _normalize_init(value: Any, algorithm: str) -> str:
    """Normalize an initialization strategy; None picks the algorithm's default."""
    if value is None or str(value).strip() == '':
        return INIT_UNIFORM if algorithm == 'ma' else INIT_RANDOM_SUPPORT
    mode = str(value).strip().lower().replace('_', '-')
    if mode in {'uniform', 'uniform-all'}:
        return INIT_UNIFORM
    if mode in {'random', 'random-support'}:
        return INIT_RANDOM_SUPPORT
    raise InvalidConfig('invalid-config', f'unknown init strategy {value!r}')


@dataclass(frozen=True)
class SolverConfig:
    algorithm: str = 'cocktail'
    epsilon: float = 1e-6
    max_iterations: int = 10000
    init: Optional[str] = None
    rng_seed: int = 0
    support_target: Optional[int] = None
    max_init_retries: int = 100
    monotonic_slack: float = 1e-10

    def __post_init__(self) -> None:
        algorithm = normalize_algorithm(self.algorithm)
        object.__setattr__(self, 'algorithm', algorithm)
        object.__setattr__(self, 'init', _normalize_init(self.init, algorithm))
        if algorithm == 'ma' and self.init == INIT_RANDOM_SUPPORT:
            raise InvalidConfig(
                'invalid-config', 'the multiplicative algorithm cannot revive zero weights; use init=uniform'
            )
        if not (math.isfinite(self.epsilon) and self.epsilon > 0.0):
            raise InvalidConfig('invalid-config', f'epsilon must be a positive number, got {self.epsilon!r}')
        if int(self.max_iterations) < 1:
            raise InvalidConfig('invalid-config', f'max_iterations must be >= 1, got {self.max_iterations!r}')
        if int(self.max_init_retries) < 1:
            raise InvalidConfig('invalid-config', f'max_init_retries must be >= 1, got {self.max_init_retries!r}')
        if self.support_target is not None and int(self.support_target) < 1:
            raise InvalidConfig('invalid-config', f'support_target must be >= 1, got {self.support_target!r}')
        if not 0 <= int(self.rng_seed) < 2**64:
            raise InvalidConfig('invalid-config', f'rng_seed must fit in 64 unsigned bits, got {self.rng_seed!r}')
        if not self.monotonic_slack >= 0.0:
            raise InvalidConfig('invalid-config', 'monotonic_slack must be >= 0')
        object.__setattr__(self, 'max_iterations', int(self.max_iterations))
        object.__setattr__(self, 'rng_seed', int(self.rng_seed))

    def resolved_support_target(self, space: DesignSpace) -> int:
        """support_target (default 2m), capped at n; must be at least m."""
        target = int(self.support_target) if self.support_target is not None else 2 * space.dim_m
        if target < space.dim_m:
            raise InvalidConfig(
                'invalid-config', f'support_target={target} is below the parameter dimension m={space.dim_m}'
            )
        return min(target, space.n)


@dataclass(frozen=True)
class TraceRecord:
    iteration: int
    log_det: float
    certificate: float
    support_size: int
    seconds: float


@dataclass
class SolverTrace:
    algorithm: str
    epsilon: float
    rng_seed: int
    init: str
    rng_algorithm: str = RNG_ALGORITHM
    records: List[TraceRecord] = field(default_factory=list)
    status: Optional[str] = None
    nne_revived: int = 0

    @property
    def iterations(self) -> int:
        return self.records[-1].iteration if self.records else 0

    @property
    def seconds(self) -> float:
        return self.records[-1].seconds if self.records else 0.0

    @property
    def log_dets(self) -> List[float]:
        return [record.log_det for record in self.records]


@dataclass(frozen=True)
class SupportPoint:
    index: int
    point: np.ndarray
    weight: float


@dataclass(frozen=True, eq=False)
class DesignResult:
    space: DesignSpace
    weights: DesignWeights
    log_det: float
    certificate: float
    trace: SolverTrace

    @property
    def status(self) -> Optional[str]:
        return self.trace.status

    @property
    def iterations(self) -> int:
        return self.trace.iterations

    @property
    def support(self) -> List[SupportPoint]:
        return [
            SupportPoint(index=int(i), point=self.space.points[i], weight=float(self.weights.values[i]))
            for i in self.weights.support
        ]


def init_uniform(space: DesignSpace) -> DesignWeights:
    """Uniform weights 1/n over every candidate."""
    return renormalized(np.ones(space.n))


def init_random_support(
    space: DesignSpace,
    seed: int | np.random.Generator,
    target: int,
    max_retries: int = 100,
) -> DesignWeights:
    """Uniform weights over `target` sampled candidates with det M(w) > 0."""
    target = int(target)
    if target < space.dim_m:
        raise InvalidConfig('invalid-config', f'target={target} is below m={space.dim_m}')
    target = min(target, space.n)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)

    for attempt in range(1, int(max_retries) + 1):
        chosen = np.sort(rng.choice(space.n, size=target, replace=False))
        values = np.zeros(space.n)
        values[chosen] = 1.0
        weights = renormalized(values)
        try:
            make_state(space, weights)
        except SingularInformation as error:
            _debug_log(f'[DEBUG] start attempt {attempt}: {error.detail}')
            continue
        return weights

    raise DegenerateStart(
        f'no nonsingular {target}-point support found in {max_retries} draws on {space.source}'
    )


def _starting_weights(
    space: DesignSpace,
    config: SolverConfig,
    initial_weights: Optional[DesignWeights | Sequence[float] | np.ndarray],
) -> DesignWeights:
    if initial_weights is not None:
        if isinstance(initial_weights, DesignWeights):
            if initial_weights.n != space.n:
                raise InvalidWeights(
                    'invalid-weights', f'{initial_weights.n} weights for {space.n} candidates'
                )
            return initial_weights
        return make_weights(initial_weights, n=space.n)
    if config.init == INIT_UNIFORM:
        return init_uniform(space)
    return init_random_support(
        space,
        config.rng_seed,
        config.resolved_support_target(space),
        max_retries=config.max_init_retries,
    )


def _cancel_requested(cancel_event) -> bool:
    """Return whether cooperative cancellation has been requested."""
    return bool(cancel_event is not None and cancel_event.is_set())


def solve(
    space: DesignSpace,
    config: Optional[SolverConfig] = None,
    *,
    initial_weights: Optional[DesignWeights | Sequence[float] | np.ndarray] = None,
    cancel_event=None,
    progress_callback: Optional[Callable[[TraceRecord], None]] = None,
) -> DesignResult:
    """Iterate the configured kernel until converged(epsilon) or the iteration cap."""
    config = config or SolverConfig()
    trace = SolverTrace(
        algorithm=config.algorithm,
        epsilon=config.epsilon,
        rng_seed=config.rng_seed,
        init='custom' if initial_weights is not None else str(config.init),
    )

    try:
        weights = _starting_weights(space, config, initial_weights)
        state = make_state(space, weights)
    except (DegenerateStart, SingularInformation) as error:
        trace.status = STATUS_DEGENERATE_START
        raise DegenerateStart(error.detail or str(error), trace=trace)

    if config.algorithm == 'ma' and weights.support_size < space.n:
        print(
            f'[WARN] multiplicative algorithm started with {space.n - weights.support_size} '
            'zero weights; those candidates stay out of the support'
        )

    kernel = KERNELS[config.algorithm]
    started = time.perf_counter()
    iteration = 0
    while True:
        done, certificate = converged(state, config.epsilon)
        record = TraceRecord(
            iteration=iteration,
            log_det=state.log_det,
            certificate=certificate,
            support_size=state.weights.support_size,
            seconds=time.perf_counter() - started,
        )
        trace.records.append(record)
        _debug_log(
            f'[DEBUG] {config.algorithm} it={iteration} logdet={record.log_det:.12g} '
            f'cert={certificate:.9g} support={record.support_size}'
        )
        if progress_callback is not None:
            try:
                progress_callback(record)
            except Exception as e:
                print(f'[WARN] progress_callback failed: {str(e)}')

        if done:
            trace.status = STATUS_CONVERGED
            break
        if iteration >= config.max_iterations:
            trace.status = STATUS_ITERATION_CAP
            print(
                f'[WARN] {config.algorithm} stopped at the iteration cap {config.max_iterations} '
                f'on {space.source} (certificate {certificate:.9g})'
            )
            break
        if _cancel_requested(cancel_event):
            trace.status = STATUS_ABORTED
            raise SolveCancelled(f'{config.algorithm} cancelled after {iteration} iterations', trace=trace)

        outcome = kernel(state, space)
        if outcome.new_state.log_det < state.log_det - config.monotonic_slack:
            trace.status = STATUS_ABORTED
            raise MonotonicityViolation(
                f'{config.algorithm} iteration {iteration + 1}: log det fell from '
                f'{state.log_det!r} to {outcome.new_state.log_det!r} ({outcome.detail})',
                trace=trace,
            )
        if config.algorithm == 'cocktail':
            trace.nne_revived += len(outcome.detail['nne']['revived'])
        state = outcome.new_state
        iteration += 1

    return DesignResult(
        space=space,
        weights=state.weights,
        log_det=state.log_det,
        certificate=trace.records[-1].certificate,
        trace=trace,
    )


@dataclass(frozen=True)
class CertificateReport:
    n: int
    m: int
    log_det: float
    max_ratio: float
    argmax: int
    epsilon: float
    optimal: bool
    efficiency_lower_bound: float
    violations: int
    support: Tuple[Tuple[int, float, float], ...]

    def to_dict(self) -> Dict[str, Any]:
        return {
            'n': self.n,
            'm': self.m,
            'phi': self.log_det,
            'certificate': self.max_ratio,
            'argmax': self.argmax + 1,
            'epsilon': self.epsilon,
            'optimal': self.optimal,
            'efficiencyLowerBound': self.efficiency_lower_bound,
            'violations': self.violations,
            'support': [
                {'index': index + 1, 'weight': weight, 'ratio': ratio}
                for index, weight, ratio in self.support
            ],
        }


def certify(
    space: DesignSpace,
    weights: DesignWeights | Sequence[float] | np.ndarray,
    epsilon: float = 1e-6,
    tol: float = SIMPLEX_TOL,
) -> CertificateReport:
    """Recompute M, log det M and every d-value from scratch and report max d/m."""
    if not isinstance(weights, DesignWeights):
        weights = make_weights(weights, n=space.n, tol=tol)
    elif weights.n != space.n:
        raise InvalidWeights('invalid-weights', f'{weights.n} weights for {space.n} candidates')

    state: InformationState = make_state(space, weights)
    ratios = state.d_values() / space.dim_m
    argmax = int(np.argmax(ratios))
    max_ratio = float(ratios[argmax])
    support = tuple(
        (int(i), float(weights.values[i]), float(ratios[i])) for i in weights.support
    )
    return CertificateReport(
        n=space.n,
        m=space.dim_m,
        log_det=state.log_det,
        max_ratio=max_ratio,
        argmax=argmax,
        epsilon=float(epsilon),
        optimal=max_ratio <= 1.0 + float(epsilon),
        # log det M* - log det M(w) <= max_i d(i, w) - m.
        efficiency_lower_bound=min(1.0, math.exp(1.0 - max_ratio)),
        violations=int(np.count_nonzero(ratios > 1.0 + float(epsilon))),
        support=support,
    )


@dataclass(frozen=True)
class SupportCluster:
    indices: Tuple[int, ...]
    centroid: np.ndarray
    weight: float


def cluster_support(
    result: DesignResult,
    radius: Optional[float] = None,
    *,
    local_factor: Optional[float] = None,
) -> List[SupportCluster]:
    """Merge support points within an L1 radius into (centroid, summed weight) groups.

    With ``local_factor`` two support points merge when their distance is at
    most ``local_factor`` times the larger of their nearest-candidate
    spacings; otherwise a single radius applies (default 1.5x the smallest
    nonzero spacing in the space). Clusters are single-linkage components,
    ordered by their smallest member index.
    """
    space = result.space
    support = result.weights.support
    points = space.points[support]
    masses = result.weights.values[support]

    if local_factor is not None:
        if not local_factor > 0.0:
            raise InvalidConfig('invalid-config', f'local_factor must be positive, got {local_factor!r}')
        spacing = nearest_candidate_spacings(space)[support]
        threshold = float(local_factor) * np.maximum.outer(spacing, spacing)
    else:
        if radius is None:
            radius = 1.5 * min_nonzero_spacing(space)
        if not radius >= 0.0:
            raise InvalidConfig('invalid-config', f'radius must be nonnegative, got {radius!r}')
        threshold = float(radius)

    if support.size > 1:
        distances = squareform(pdist(points, metric='cityblock'))
        adjacency = csr_matrix(distances <= threshold)
        _, labels = connected_components(adjacency, directed=False)
    else:
        labels = np.zeros(support.size, dtype=int)

    clusters: List[SupportCluster] = []
    seen: Dict[int, int] = {}
    for position, label in enumerate(labels):
        if int(label) in seen:
            continue
        seen[int(label)] = position
        members = np.flatnonzero(labels == label)
        mass = math.fsum(masses[members])
        centroid = (masses[members, None] * points[members]).sum(axis=0) / mass
        clusters.append(
            SupportCluster(
                indices=tuple(int(support[i]) for i in members),
                centroid=centroid,
                weight=mass,
            )
        )
    return clusters
