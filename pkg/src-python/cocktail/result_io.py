"""Result JSON, trace CSV and weight-file parsing.

Indices are 1-based in every file and 0-based in the library.
"""

import csv
import json
import math
import os
from typing import Any, Dict, List, Optional

import numpy as np

from .errors import InvalidWeights
from .information import SIMPLEX_TOL, DesignWeights, make_weights
from .solver import DesignResult, SolverTrace

RESULT_SCHEMA = 'cocktail.design-result'
RESULT_VERSION = 1
TRACE_COLUMNS = ('iteration', 'logdet', 'certificate', 'support_size', 'seconds')


def result_to_payload(result: DesignResult) -> Dict[str, Any]:
    """Canonical JSON-ready form of a solver result (sparse support)."""
    trace = result.trace
    return {
        'schema': RESULT_SCHEMA,
        'version': RESULT_VERSION,
        'n': result.space.n,
        'm': result.space.dim_m,
        'phi': float(result.log_det),
        'certificate': float(result.certificate),
        'status': trace.status,
        'iterations': int(trace.iterations),
        'seconds': float(trace.seconds),
        'algorithm': trace.algorithm,
        'epsilon': float(trace.epsilon),
        'init': trace.init,
        'seed': int(trace.rng_seed),
        'rngAlgorithm': trace.rng_algorithm,
        'nneRevived': int(trace.nne_revived),
        'source': result.space.source,
        'support': [
            {
                'index': item.index + 1,
                'weight': item.weight,
                'point': [float(v) for v in item.point],
                'label': result.space.label(item.index),
            }
            for item in result.support
        ],
    }


def write_json(payload: Dict[str, Any], path: str) -> str:
    """Write a payload with sorted keys; parent directories are created."""
    _ensure_parent_dir(path)
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(payload, f, ensure_ascii=False, indent=2, sort_keys=True)
        f.write('\n')
    return path


def write_result_json(result: DesignResult, path: str) -> str:
    return write_json(result_to_payload(result), path)


def write_trace_csv(trace: SolverTrace, path: str) -> str:
    """One row per recorded iteration; floats use repr so they round-trip."""
    _ensure_parent_dir(path)
    with open(path, 'w', encoding='utf-8', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(TRACE_COLUMNS)
        for record in trace.records:
            writer.writerow(
                [
                    record.iteration,
                    repr(float(record.log_det)),
                    repr(float(record.certificate)),
                    record.support_size,
                    repr(float(record.seconds)),
                ]
            )
    return path


def load_weights_file(path: str, n: int, tol: float = SIMPLEX_TOL) -> DesignWeights:
    """Read weights for an n-point space from a result JSON or a weights JSON.

    Accepted shapes: ``{"support": [{"index", "weight"}, ...]}`` (result
    files), ``{"weights": {"index": weight}}`` (sparse) and
    ``{"weights": [w1, ..., wn]}`` (dense).
    """
    if not path or not os.path.isfile(path):
        raise InvalidWeights('file-not-found', str(path))
    try:
        with open(path, 'r', encoding='utf-8') as f:
            payload = json.load(f)
    except (OSError, ValueError) as error:
        raise InvalidWeights('invalid-weights', f'{path}: {error}')

    if not isinstance(payload, dict):
        raise InvalidWeights('invalid-weights', f'{path}: expected a JSON object')

    declared_n = payload.get('n')
    if declared_n is not None and _coerce_int(declared_n) != int(n):
        raise InvalidWeights('dimension-mismatch', f'{path}: file has n={declared_n}, space has n={n}')

    values = np.zeros(int(n))
    support = payload.get('support')
    weights = payload.get('weights')
    if isinstance(support, list):
        for item in support:
            if not isinstance(item, dict):
                raise InvalidWeights('invalid-weights', f'{path}: support entries must be objects')
            index = _coerce_index(item.get('index'), n, path)
            values[index] += _coerce_weight(item.get('weight'), path)
    elif isinstance(weights, dict):
        for key, weight in weights.items():
            index = _coerce_index(key, n, path)
            values[index] += _coerce_weight(weight, path)
    elif isinstance(weights, list):
        if len(weights) != int(n):
            raise InvalidWeights('dimension-mismatch', f'{path}: {len(weights)} weights for n={n}')
        values = np.array([_coerce_weight(w, path) for w in weights])
    else:
        raise InvalidWeights('invalid-weights', f'{path}: no "support" or "weights" entry')

    return make_weights(values, n=n, tol=tol)


def declared_dimension(path: str) -> Optional[int]:
    """The "m" field of a weights/result JSON, if present and numeric."""
    try:
        with open(path, 'r', encoding='utf-8') as f:
            payload = json.load(f)
    except (OSError, ValueError):
        return None
    if not isinstance(payload, dict) or payload.get('m') is None:
        return None
    value = _coerce_int(payload.get('m'))
    return value if value > 0 else None


def _ensure_parent_dir(path: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    if directory:
        os.makedirs(directory, exist_ok=True)


def _coerce_int(value: Any) -> int:
    """Coerce a value to an int, -1 when impossible."""
    try:
        number = float(value)
    except (TypeError, ValueError):
        return -1
    if not math.isfinite(number) or number != int(number):
        return -1
    return int(number)


def _coerce_index(value: Any, n: int, path: str) -> int:
    """1-based file index to a 0-based library index."""
    index = _coerce_int(value)
    if not 1 <= index <= int(n):
        raise InvalidWeights('invalid-weights', f'{path}: index {value!r} outside 1..{n}')
    return index - 1


def _coerce_weight(value: Any, path: str) -> float:
    try:
        weight = float(value)
    except (TypeError, ValueError):
        raise InvalidWeights('invalid-weights', f'{path}: weight {value!r} is not a number')
    if not math.isfinite(weight):
        raise InvalidWeights('invalid-weights', f'{path}: weight {value!r} is not finite')
    return weight


def read_trace_csv(path: str) -> List[Dict[str, float]]:
    """Parse a trace CSV back into rows keyed by column name."""
    with open(path, 'r', encoding='utf-8', newline='') as f:
        reader = csv.DictReader(f)
        return [
            {
                'iteration': int(row['iteration']),
                'logdet': float(row['logdet']),
                'certificate': float(row['certificate']),
                'support_size': int(row['support_size']),
                'seconds': float(row['seconds']),
            }
            for row in reader
        ]
