"""Tests for result JSON, trace CSV and weight-file parsing."""

import json

import numpy as np
import pytest
from cocktail.design_space import build_x1
from cocktail.errors import InvalidWeights
from cocktail.result_io import (
    RESULT_SCHEMA,
    TRACE_COLUMNS,
    declared_dimension,
    load_weights_file,
    read_trace_csv,
    result_to_payload,
    write_json,
    write_result_json,
    write_trace_csv,
)
from cocktail.solver import SolverConfig, solve


@pytest.fixture(scope='module')
def x1_result():
    return solve(build_x1(30), SolverConfig(algorithm='cocktail', rng_seed=5))


def _write_json(tmp_path, name, payload):
    path = tmp_path / name
    path.write_text(json.dumps(payload), encoding='utf-8')
    return str(path)


def test_result_payload_uses_one_based_sparse_support(x1_result):
    payload = result_to_payload(x1_result)

    assert payload['schema'] == RESULT_SCHEMA
    assert payload['n'] == 30
    assert payload['m'] == 4
    assert payload['status'] == 'CONVERGED'
    assert payload['algorithm'] == 'cocktail'
    assert payload['seed'] == 5
    assert payload['rngAlgorithm'] == 'PCG64'
    indices = [item['index'] for item in payload['support']]
    assert indices == [int(i) + 1 for i in x1_result.weights.support]
    assert all(len(item['point']) == 4 for item in payload['support'])
    assert json.loads(json.dumps(payload)) == payload


def test_result_json_reloads_to_the_same_weights(tmp_path, x1_result):
    path = str(tmp_path / 'out' / 'result.json')

    write_result_json(x1_result, path)
    weights = load_weights_file(path, 30)

    np.testing.assert_allclose(weights.values, x1_result.weights.values, rtol=0, atol=0)
    assert declared_dimension(path) == 4


def test_trace_csv_round_trips_every_record(tmp_path, x1_result):
    path = str(tmp_path / 'trace.csv')

    write_trace_csv(x1_result.trace, path)
    rows = read_trace_csv(path)

    with open(path, 'r', encoding='utf-8') as f:
        assert f.readline().strip() == ','.join(TRACE_COLUMNS)
    assert len(rows) == len(x1_result.trace.records)
    assert [row['logdet'] for row in rows] == x1_result.trace.log_dets
    assert rows[-1]['iteration'] == x1_result.iterations


def test_write_json_sorts_keys(tmp_path):
    path = str(tmp_path / 'payload.json')

    write_json({'b': 1, 'a': 2}, path)

    text = (tmp_path / 'payload.json').read_text(encoding='utf-8')
    assert text.index('"a"') < text.index('"b"')


def test_load_weights_accepts_sparse_and_dense_forms(tmp_path):
    sparse = _write_json(tmp_path, 'sparse.json', {'n': 4, 'weights': {'1': 0.25, '4': 0.75}})
    dense = _write_json(tmp_path, 'dense.json', {'weights': [0.25, 0.0, 0.0, 0.75]})

    assert load_weights_file(sparse, 4).values.tolist() == [0.25, 0.0, 0.0, 0.75]
    assert load_weights_file(dense, 4).values.tolist() == [0.25, 0.0, 0.0, 0.75]


@pytest.mark.parametrize(
    ('payload', 'code'),
    [
        ({'weights': {'0': 1.0}}, 'invalid-weights'),
        ({'weights': {'5': 1.0}}, 'invalid-weights'),
        ({'weights': {'1': 'heavy'}}, 'invalid-weights'),
        ({'weights': [0.5, 0.5]}, 'dimension-mismatch'),
        ({'n': 3, 'weights': [0.5, 0.5, 0.0, 0.0]}, 'dimension-mismatch'),
        ({'weights': [0.5, 0.6, 0.0, 0.0]}, 'invalid-weights'),
        ({'support': [1, 2]}, 'invalid-weights'),
        ({'other': 1}, 'invalid-weights'),
    ],
)
def test_load_weights_reports_bad_files(tmp_path, payload, code):
    path = _write_json(tmp_path, 'bad.json', payload)

    with pytest.raises(InvalidWeights) as error:
        load_weights_file(path, 4)

    assert str(error.value) == code


def test_load_weights_reports_missing_and_unparsable_files(tmp_path):
    with pytest.raises(InvalidWeights, match='file-not-found'):
        load_weights_file(str(tmp_path / 'missing.json'), 4)

    path = tmp_path / 'broken.json'
    path.write_text('{not json', encoding='utf-8')
    with pytest.raises(InvalidWeights, match='invalid-weights'):
        load_weights_file(str(path), 4)


def test_declared_dimension_ignores_files_without_m(tmp_path):
    assert declared_dimension(_write_json(tmp_path, 'w.json', {'weights': [1.0]})) is None
    assert declared_dimension(str(tmp_path / 'missing.json')) is None
