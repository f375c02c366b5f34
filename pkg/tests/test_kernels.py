"""Tests for the MA, VDM, VE, VEM, NNE and cocktail step kernels."""

import math

import numpy as np
import pytest
from cocktail.design_space import build_x1, make_space
from cocktail.errors import DesignError
from cocktail.information import make_state, make_weights, renormalized
from cocktail.kernels import (
    cocktail_step,
    converged,
    ma_step,
    nne_pairing,
    nne_sweep,
    vdm_select,
    vdm_step,
    ve_delta_star,
    ve_step,
    vem_step,
)
from cocktail.solver import SolverConfig, solve
from conftest import random_space, random_weights

GRID_POINTS = 10_001


def _state(space, values):
    return make_state(space, make_weights(values))


def _random_state(rng, m_range=(2, 9), n_max=200):
    m = int(rng.integers(*m_range))
    n = int(rng.integers(m, n_max + 1))
    space = random_space(rng, n, m)
    return make_state(space, make_weights(random_weights(rng, n, m)))


def _grid_log_dets(points, w, j_or_none, k, deltas):
    """log det along w + delta (e_k - e_j), or (1 - delta) w + delta e_k when j is None."""
    base = points.T @ (w[:, None] * points)
    xk = np.outer(points[k], points[k])
    if j_or_none is None:
        matrices = (1.0 - deltas)[:, None, None] * base + deltas[:, None, None] * xk
    else:
        xj = np.outer(points[j_or_none], points[j_or_none])
        matrices = base + deltas[:, None, None] * (xk - xj)
    sign, values = np.linalg.slogdet(matrices)
    return np.where(sign > 0, values, -np.inf)


KERNEL_CASES = {
    'ma': lambda state: ma_step(state),
    'vdm': lambda state: vdm_step(state),
    'vem': lambda state: vem_step(state),
    'nne': lambda state: nne_sweep(state),
    'cocktail': lambda state: cocktail_step(state),
}


def test_ma_step_on_the_one_dimensional_space(line_space):
    outcome = ma_step(_state(line_space, [0.5, 0.5]))

    np.testing.assert_allclose(outcome.new_state.w, [0.2, 0.8], rtol=1e-14)
    assert outcome.log_det_gain > 0.0
    assert outcome.touched == frozenset({0, 1})


def test_ma_step_keeps_total_mass_before_renormalization(rng):
    for _ in range(20):
        outcome = ma_step(_random_state(rng, n_max=60))

        assert outcome.detail['mass_before_renormalization'] == pytest.approx(1.0, abs=1e-12)


def test_ma_step_never_revives_zero_weights(rng):
    state = _random_state(rng, n_max=60)
    zeros = np.flatnonzero(state.w == 0.0)

    outcome = ma_step(state)

    assert np.all(outcome.new_state.w[zeros] == 0.0)


def test_ma_step_leaves_an_optimal_design_fixed(diag_space):
    state = _state(diag_space, [0.5, 0.5])

    outcome = ma_step(state)

    np.testing.assert_allclose(outcome.new_state.w, [0.5, 0.5], rtol=1e-14)
    assert outcome.log_det_gain == pytest.approx(0.0, abs=1e-14)


def test_ma_step_near_the_optimum_barely_moves(rng):
    space = random_space(rng, 10, 3)
    result = solve(space, SolverConfig(algorithm='cocktail', epsilon=1e-10, max_iterations=5000))
    state = make_state(space, result.weights)

    outcome = ma_step(state)

    assert converged(state, 1e-9)[0]
    assert np.max(np.abs(outcome.new_state.w - state.w)) <= 1e-8


def test_ma_step_barely_separates_nearly_identical_candidates(rng):
    points = rng.standard_normal((200, 3))
    twin = points[7].copy()
    direction = rng.standard_normal(3)
    twin += 1e-3 * np.abs(points[7]).sum() * direction / np.abs(direction).sum()
    space = make_space(np.vstack([points, twin]))
    state = make_state(space, renormalized(np.ones(space.n)))

    outcome = ma_step(state)

    before = state.w[7] / state.w[200]
    after = outcome.new_state.w[7] / outcome.new_state.w[200]
    assert after / before == pytest.approx(1.0, abs=1e-2)


def test_vdm_select_breaks_ties_by_smallest_index():
    space = make_space([[1.0, 0.0], [0.0, 1.0], [0.0, 1.1], [0.0, -1.1]])
    state = _state(space, [0.5, 0.5, 0.0, 0.0])

    np.testing.assert_allclose(state.d_values(), [2.0, 2.0, 2.42, 2.42])
    assert vdm_select(state) == 2


def test_vdm_step_moves_the_closed_form_fraction():
    space = make_space([[1.0, 0.0], [0.0, 1.0], [0.0, 2.0]])
    state = _state(space, [0.5, 0.5, 0.0])

    outcome = vdm_step(state)

    assert outcome.detail['i_max'] == 2
    assert outcome.detail['d_max'] == pytest.approx(8.0)
    assert outcome.detail['delta'] == pytest.approx(3.0 / 7.0)
    np.testing.assert_allclose(outcome.new_state.w, [2.0 / 7.0, 2.0 / 7.0, 3.0 / 7.0])


def test_vdm_step_fraction_for_d_eight_in_four_dimensions(rng):
    for _ in range(10):
        state = _random_state(rng, m_range=(4, 5), n_max=40)
        outcome = vdm_step(state)
        d_max = outcome.detail['d_max']
        if d_max <= 4.0:
            continue

        assert outcome.detail['delta'] == pytest.approx((d_max / 4.0 - 1.0) / (d_max - 1.0))


def test_vdm_step_on_the_one_dimensional_space(line_space):
    state = _state(line_space, [1.0, 0.0])

    outcome = vdm_step(state)

    assert outcome.new_state.w.tolist() == [0.0, 1.0]
    assert outcome.log_det_gain == pytest.approx(math.log(4.0))
    assert converged(outcome.new_state, 0.0) == (True, pytest.approx(1.0))


def test_vdm_step_is_identity_at_the_optimum(diag_space):
    state = _state(diag_space, [0.5, 0.5])

    outcome = vdm_step(state)

    assert outcome.detail['delta'] == pytest.approx(0.0, abs=1e-14)
    np.testing.assert_allclose(outcome.new_state.w, [0.5, 0.5], rtol=1e-14)


def test_ve_delta_star_is_infinite_for_collinear_candidates():
    space = make_space([[1.0, 0.0], [0.0, 1.0], [0.0, 2.0]])
    state = _state(space, [0.5, 0.5, 0.0])

    assert ve_delta_star(state, 1, 2) == math.inf
    assert ve_delta_star(state, 2, 1) == -math.inf


def test_ve_step_moves_all_mass_to_the_longer_collinear_candidate():
    space = make_space([[1.0, 0.0], [0.0, 1.0], [0.0, 2.0]])
    state = _state(space, [0.5, 0.5, 0.0])

    outcome = ve_step(state, 1, 2)

    assert outcome.new_state.w.tolist() == [0.5, 0.0, 0.5]
    assert outcome.log_det_gain == pytest.approx(math.log(4.0))
    assert outcome.detail['delta'] == 0.5


def test_ve_delta_star_is_zero_for_opposite_candidates():
    space = make_space([[1.0, 0.0], [0.0, 1.0], [0.0, -1.0]])
    state = _state(space, [0.5, 0.25, 0.25])

    assert ve_delta_star(state, 1, 2) == 0.0
    assert ve_step(state, 1, 2).new_state is state


def test_ve_step_is_identity_between_equivalent_support_points(diag_space):
    state = _state(diag_space, [0.5, 0.5])

    outcome = ve_step(state, 0, 1)

    assert outcome.detail['delta_star'] == 0.0
    assert outcome.new_state is state


def test_ve_step_rejects_a_self_exchange(diag_space):
    with pytest.raises(DesignError, match='invalid-exchange'):
        ve_step(_state(diag_space, [0.5, 0.5]), 1, 1)


def test_ve_step_predicted_gain_matches_the_refactorized_gain(rng):
    for _ in range(20):
        state = _random_state(rng, n_max=40)
        j = int(state.weights.support[0])
        k = int(rng.integers(0, state.space.n))
        if k == j:
            continue
        outcome = ve_step(state, j, k)

        assert outcome.log_det_gain == pytest.approx(outcome.detail['predicted_gain'], abs=1e-9)


def test_vem_step_on_the_one_dimensional_space(line_space):
    state = _state(line_space, [1.0, 0.0])

    outcome = vem_step(state)

    assert outcome.detail['i_min'] == 0
    assert outcome.detail['i_max'] == 1
    assert outcome.new_state.w.tolist() == [0.0, 1.0]


def test_vem_step_is_identity_when_the_worst_support_point_is_the_best_candidate():
    space = make_space([[2.0], [1.0]])
    state = _state(space, [1.0, 0.0])

    outcome = vem_step(state)

    assert outcome.detail['i_min'] == outcome.detail['i_max'] == 0
    assert outcome.new_state is state


def test_nne_pairing_on_an_ordered_line():
    space = make_space([[1.0], [2.0], [3.0], [4.0]])
    state = _state(space, [0.25, 0.0, 0.5, 0.25])

    assert nne_pairing(state) == [(0, 2), (2, 3)]


def test_nne_pairing_breaks_distance_ties_by_smallest_index():
    space = make_space([[1.0, 0.0], [1.0, 1.0], [1.0, -1.0]])
    state = _state(space, [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0])

    assert nne_pairing(state) == [(0, 1), (1, 2)]


def test_nne_sweep_on_a_single_support_point_is_identity(line_space):
    state = _state(line_space, [0.0, 1.0])

    outcome = nne_sweep(state)

    assert outcome.new_state is state
    assert outcome.detail['pairs'] == []


def test_nne_sweep_never_grows_the_support(rng):
    for _ in range(30):
        state = _random_state(rng, n_max=60)

        outcome = nne_sweep(state)

        assert outcome.new_state.weights.support_size <= state.weights.support_size
        assert set(outcome.new_state.weights.support) <= set(state.weights.support)


def test_exchange_between_split_neighbours_beats_every_grid_step():
    space = build_x1(50)
    result = solve(space, SolverConfig(algorithm='cocktail', epsilon=1e-8))
    w = np.array(result.weights.values)
    i = next(int(i) for i in result.weights.support if i + 1 < space.n and w[i + 1] == 0.0)
    w[i + 1] = w[i] / 2.0
    w[i] -= w[i + 1]
    state = _state(space, w)

    outcome = ve_step(state, i, i + 1)

    deltas = np.linspace(-w[i + 1], w[i], GRID_POINTS)
    best = np.max(_grid_log_dets(space.points, w, i, i + 1, deltas))
    assert outcome.new_state.log_det >= best - 1e-9
    assert outcome.new_state.weights.support_size <= state.weights.support_size


@pytest.mark.parametrize('kernel', sorted(KERNEL_CASES))
def test_every_kernel_is_monotone_on_fuzzed_states(rng, kernel):
    step = KERNEL_CASES[kernel]
    for _ in range(100):
        state = _random_state(rng)

        outcome = step(state)

        assert outcome.new_state.log_det >= state.log_det - 1e-10
        assert outcome.log_det_gain == pytest.approx(
            outcome.new_state.log_det - state.log_det, abs=1e-10
        )
        assert math.fsum(outcome.new_state.w) == pytest.approx(1.0, abs=1e-12)


def test_cocktail_gains_at_least_as_much_as_its_vdm_step(rng):
    for _ in range(30):
        state = _random_state(rng, n_max=80)

        assert cocktail_step(state).log_det_gain >= vdm_step(state).log_det_gain - 1e-10


def test_ve_step_beats_a_grid_search_over_its_range(rng):
    for _ in range(50):
        m = int(rng.integers(2, 6))
        n = int(rng.integers(m + 1, 31))
        space = random_space(rng, n, m)
        w = random_weights(rng, n, m)
        state = _state(space, w)
        j = int(rng.choice(state.weights.support))
        k = int(rng.choice([i for i in range(n) if i != j]))

        outcome = ve_step(state, j, k)

        deltas = np.linspace(-w[k], w[j], GRID_POINTS)
        best = np.max(_grid_log_dets(space.points, w, j, k, deltas))
        # Relative determinant slack 1e-9 is an absolute log det slack of about 1e-9.
        assert outcome.new_state.log_det >= best - 1e-9


def test_vdm_step_beats_a_grid_search_over_its_range(rng):
    for _ in range(50):
        m = int(rng.integers(2, 6))
        n = int(rng.integers(m + 1, 31))
        space = random_space(rng, n, m)
        w = random_weights(rng, n, m)
        state = _state(space, w)

        outcome = vdm_step(state)

        deltas = np.linspace(0.0, 1.0, GRID_POINTS)
        best = np.max(_grid_log_dets(space.points, w, None, vdm_select(state), deltas))
        assert outcome.new_state.log_det >= best - 1e-9


def test_converged_reports_the_certificate(line_space):
    done, certificate = converged(_state(line_space, [0.0, 1.0]), 1e-6)

    assert done
    assert certificate == pytest.approx(1.0)

    done, certificate = converged(_state(line_space, [0.5, 0.5]), 1e-6)
    assert not done
    assert certificate == pytest.approx(1.6)
