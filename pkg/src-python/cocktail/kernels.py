"""Step kernels: multiplicative (MA), vertex direction (VDM), vertex exchange
(VE, VEM), nearest-neighbour exchange (NNE) and their cocktail composition.

Every kernel maps an InformationState to a StepOutcome and never decreases
log det M. Ties are broken by the smallest index everywhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np

from .design_space import DesignSpace
from .errors import DesignError
from .information import InformationState, make_state, renormalized

# ve_delta_star: denominator is zero below DENOM_TOL * d(j) d(k),
# numerator below NUMER_TOL * max(d(j), d(k)).
DENOM_TOL = 1e-14
NUMER_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class StepOutcome:
    new_state: InformationState
    log_det_gain: float
    touched: frozenset = field(default_factory=frozenset)
    detail: Dict[str, Any] = field(default_factory=dict)


def _identity(state: InformationState, detail: Dict[str, Any]) -> StepOutcome:
    return StepOutcome(new_state=state, log_det_gain=0.0, touched=frozenset(), detail=detail)


def _advance(
    state: InformationState,
    values: np.ndarray,
    touched,
    detail: Dict[str, Any],
) -> StepOutcome:
    new_state = make_state(state.space, renormalized(values))
    return StepOutcome(
        new_state=new_state,
        log_det_gain=new_state.log_det - state.log_det,
        touched=frozenset(int(i) for i in touched),
        detail=detail,
    )


def ma_step(state: InformationState) -> StepOutcome:
    """w_i <- w_i d(i, w) / m on the support; zero weights stay zero."""
    support = state.weights.support
    d = state.d_values(support)
    values = np.array(state.w, copy=True)
    values[support] = values[support] * d / state.m
    changed = support[values[support] != state.w[support]]
    detail = {
        'kernel': 'ma',
        'support_size': int(support.size),
        'mass_before_renormalization': math.fsum(values),
    }
    if changed.size == 0:
        return _identity(state, detail)
    return _advance(state, values, changed, detail)


def vdm_select(state: InformationState) -> int:
    """Smallest index maximizing d(i, w) over all candidates."""
    return int(np.argmax(state.d_values()))


def vdm_step(state: InformationState) -> StepOutcome:
    """Mix w with the point mass at i_max using the determinant-optimal fraction."""
    i_max = vdm_select(state)
    d_max = float(state.d_values()[i_max])
    m = state.m
    if d_max <= m:
        return _identity(state, {'kernel': 'vdm', 'i_max': i_max, 'd_max': d_max, 'delta': 0.0})

    delta = min(1.0, max(0.0, (d_max / m - 1.0) / (d_max - 1.0)))
    values = (1.0 - delta) * state.w
    values[i_max] += delta
    detail = {'kernel': 'vdm', 'i_max': i_max, 'd_max': d_max, 'delta': delta}
    if delta == 0.0:
        return _identity(state, detail)
    touched = np.union1d(state.weights.support, [i_max])
    return _advance(state, values, touched, detail)


def _delta_star_from(dj: float, dk: float, djk: float) -> float:
    numerator = dk - dj
    denominator = 2.0 * (dj * dk - djk * djk)
    if denominator <= DENOM_TOL * dj * dk:
        if abs(numerator) <= NUMER_TOL * max(dj, dk):
            # x_j + x_k = 0: det M is flat along the exchange.
            return 0.0
        return math.inf if numerator > 0.0 else -math.inf
    return numerator / denominator


def ve_delta_star(state: InformationState, j: int, k: int) -> float:
    """Unclamped determinant-optimal mass moved from x_j to x_k (may be +-inf)."""
    if j == k:
        raise DesignError('invalid-exchange', f'vertex exchange needs two distinct indices, got {j}')
    return _delta_star_from(*state.d_pair(j, k))


def ve_step(state: InformationState, j: int, k: int) -> StepOutcome:
    """Optimal exchange of mass between x_j and x_k, clamped to [-w_k, w_j]."""
    if j == k:
        raise DesignError('invalid-exchange', f'vertex exchange needs two distinct indices, got {j}')
    dj, dk, djk = state.d_pair(j, k)
    delta_star = _delta_star_from(dj, dk, djk)
    wj, wk = float(state.w[j]), float(state.w[k])
    delta = min(wj, max(-wk, delta_star))
    detail: Dict[str, Any] = {
        'kernel': 've',
        'j': int(j),
        'k': int(k),
        'delta_star': delta_star,
        'delta': delta,
        'predicted_gain': 0.0,
    }
    if delta == 0.0:
        return _identity(state, detail)

    values = np.array(state.w, copy=True)
    if delta == wj:
        values[j] = 0.0
        values[k] = wk + wj
    elif delta == -wk:
        values[k] = 0.0
        values[j] = wj + wk
    else:
        values[j] = wj - delta
        values[k] = wk + delta
    ratio = 1.0 + delta * (dk - dj) - delta * delta * (dj * dk - djk * djk)
    detail['predicted_gain'] = math.log(ratio) if ratio > 0.0 else -math.inf
    return _advance(state, values, (j, k), detail)


def vem_step(state: InformationState) -> StepOutcome:
    """VE from the worst support point (min d) to the best candidate (max d)."""
    support = state.weights.support
    d = state.d_values()
    i_min = int(support[int(np.argmin(d[support]))])
    i_max = int(np.argmax(d))
    if i_min == i_max:
        return _identity(state, {'kernel': 'vem', 'i_min': i_min, 'i_max': i_max, 'delta': 0.0})
    outcome = ve_step(state, i_min, i_max)
    detail = dict(outcome.detail, kernel='vem', i_min=i_min, i_max=i_max)
    return replace(outcome, detail=detail)


def nne_pairing(state: InformationState, space: Optional[DesignSpace] = None) -> List[Tuple[int, int]]:
    """Pair each support index with its L1-nearest strictly later support index."""
    space = space or state.space
    support = state.weights.support
    points = space.points[support]
    pairs: List[Tuple[int, int]] = []
    for pos in range(support.size - 1):
        distances = np.abs(points[pos + 1 :] - points[pos]).sum(axis=1)
        nearest = pos + 1 + int(np.argmin(distances))
        pairs.append((int(support[pos]), int(support[nearest])))
    return pairs


def nne_sweep(state: InformationState, space: Optional[DesignSpace] = None) -> StepOutcome:
    """Vertex exchanges over the pairing frozen at sweep start, in order."""
    pairs = nne_pairing(state, space)
    if not pairs:
        return _identity(state, {'kernel': 'nne', 'pairs': [], 'exchanges': 0, 'revived': []})

    current = state
    touched: set = set()
    zeroed: set = set()
    revived: List[int] = []
    exchanges = 0
    for j, k in pairs:
        outcome = ve_step(current, j, k)
        if outcome.touched:
            exchanges += 1
            touched |= outcome.touched
        current = outcome.new_state
        for index in (j, k):
            # A point zeroed earlier in the sweep may take mass back in a later pair.
            if current.w[index] == 0.0:
                zeroed.add(index)
            elif index in zeroed:
                zeroed.discard(index)
                revived.append(index)

    detail = {'kernel': 'nne', 'pairs': pairs, 'exchanges': exchanges, 'revived': revived}
    return StepOutcome(
        new_state=current,
        log_det_gain=current.log_det - state.log_det,
        touched=frozenset(touched),
        detail=detail,
    )


def cocktail_step(state: InformationState, space: Optional[DesignSpace] = None) -> StepOutcome:
    """One cocktail iteration: VDM, then an NNE sweep, then MA."""
    vdm = vdm_step(state)
    nne = nne_sweep(vdm.new_state, space)
    ma = ma_step(nne.new_state)
    new_state = ma.new_state
    return StepOutcome(
        new_state=new_state,
        log_det_gain=new_state.log_det - state.log_det,
        touched=vdm.touched | nne.touched | ma.touched,
        detail={'kernel': 'cocktail', 'vdm': vdm.detail, 'nne': nne.detail, 'ma': ma.detail},
    )


def converged(state: InformationState, epsilon: float) -> Tuple[bool, float]:
    """(max_i d(i, w) / m <= 1 + epsilon, max_i d(i, w) / m) over all candidates."""
    certificate = float(np.max(state.d_values())) / state.m
    return certificate <= 1.0 + float(epsilon), certificate


KERNELS: Dict[str, Callable[[InformationState, DesignSpace], StepOutcome]] = {
    'ma': lambda state, space: ma_step(state),
    'vdm': lambda state, space: vdm_step(state),
    'vem': lambda state, space: vem_step(state),
    'cocktail': cocktail_step,
}
