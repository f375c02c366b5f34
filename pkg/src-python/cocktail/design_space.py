"""Finite design spaces: construction, validation, CSV ingest and the builtin families."""

from __future__ import annotations

import csv
import hashlib
import math
import os
from dataclasses import dataclass
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import qr
from scipy.spatial import cKDTree

from .errors import DesignSpaceError

# Pivots below RANK_TOL * (largest pivot) count as zero.
RANK_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class DesignSpace:
    """Candidate matrix X (row i is x_i) with labels and provenance.

    Build instances through :func:`make_space` or the ``build_*`` helpers; the
    coordinate array is made read-only so one space can be shared by
    concurrent solver runs.
    """

    points: np.ndarray
    labels: Optional[Tuple[str, ...]] = None
    source: str = 'inline'

    @property
    def n(self) -> int:
        return int(self.points.shape[0])

    @property
    def dim_m(self) -> int:
        return int(self.points.shape[1])

    def label(self, index: int) -> str:
        if self.labels is None:
            return f'x{index + 1}'
        return self.labels[index]


def make_space(
    points: Iterable[Sequence[float]] | np.ndarray,
    *,
    labels: Optional[Sequence[str]] = None,
    source: str = 'inline',
    rank_tol: float = RANK_TOL,
) -> DesignSpace:
    """Validate a candidate matrix and wrap it as an immutable DesignSpace."""
    array = np.array(points, dtype=float, copy=True)
    if array.ndim == 1:
        array = array.reshape(-1, 1)
    if array.ndim != 2 or array.shape[0] == 0 or array.shape[1] == 0:
        raise DesignSpaceError('dimension-mismatch', f'expected an n x m matrix, got shape {array.shape}')

    n, m = array.shape
    if n < m:
        raise DesignSpaceError('too-few-points', f'{n} points cannot span R^{m}')

    bad = np.argwhere(~np.isfinite(array))
    if bad.size:
        row, col = (int(v) for v in bad[0])
        raise DesignSpaceError(
            'non-finite-point', f'point {row + 1}, coordinate {col + 1} is {array[row, col]!r}'
        )

    rank = matrix_rank(array, rank_tol=rank_tol)
    if rank < m:
        raise DesignSpaceError('rank-deficient', f'candidate matrix has rank {rank} < m={m}')

    if labels is not None:
        labels = tuple(str(label) for label in labels)
        if len(labels) != n:
            raise DesignSpaceError('dimension-mismatch', f'{len(labels)} labels for {n} points')

    duplicates = find_duplicate_points(array)
    if duplicates:
        shown = ', '.join(f'({a + 1},{b + 1})' for a, b in duplicates[:5])
        more = f' and {len(duplicates) - 5} more' if len(duplicates) > 5 else ''
        print(f'[WARN] {source}: duplicated candidate points {shown}{more}')

    array.flags.writeable = False
    return DesignSpace(points=array, labels=labels, source=str(source))


def matrix_rank(array: np.ndarray, rank_tol: float = RANK_TOL) -> int:
    """Numerical column rank from the pivots of a column-pivoted QR."""
    r = qr(array, mode='r', pivoting=True)[0]
    pivots = np.abs(np.diag(r))
    if pivots.size == 0 or pivots[0] == 0.0:
        return 0
    return int(np.count_nonzero(pivots > rank_tol * pivots[0]))


def find_duplicate_points(points: np.ndarray) -> List[Tuple[int, int]]:
    """Return (first, later) index pairs of exactly repeated rows."""
    _, first_index, inverse = np.unique(points, axis=0, return_index=True, return_inverse=True)
    inverse = np.asarray(inverse).reshape(-1)
    pairs: List[Tuple[int, int]] = []
    for index, group in enumerate(inverse):
        first = int(first_index[group])
        if first != index:
            pairs.append((first, index))
    return pairs


def _grid(n: int) -> np.ndarray:
    """s_i = 3i/n for i = 1..n."""
    return 3.0 * np.arange(1, n + 1, dtype=float) / n


def _check_size(family: str, value: int, minimum: int, name: str = 'n') -> int:
    try:
        value = int(value)
    except (TypeError, ValueError):
        raise DesignSpaceError('too-few-points', f'{family}: {name} must be an integer, got {value!r}')
    if value < minimum:
        raise DesignSpaceError('too-few-points', f'{family}: {name}={value} < {minimum}')
    return value


def _exponential_columns(s: np.ndarray, rates: Sequence[int]) -> np.ndarray:
    columns = []
    for rate in rates:
        decay = np.exp(-rate * s)
        columns.extend([decay, s * decay])
    return np.column_stack(columns)


def build_x1(n: int) -> DesignSpace:
    """Linearized compartmental model: (e^-s, s e^-s, e^-2s, s e^-2s)."""
    n = _check_size('x1', n, 4)
    s = _grid(n)
    return make_space(
        _exponential_columns(s, (1, 2)),
        labels=[f's={v:.6g}' for v in s],
        source=f'x1(n={n})',
    )


def build_x2(n: int) -> DesignSpace:
    """Quartic polynomial regression: (1, s, s^2, s^3, s^4)."""
    n = _check_size('x2', n, 5)
    s = _grid(n)
    return make_space(
        np.column_stack([s**power for power in range(5)]),
        labels=[f's={v:.6g}' for v in s],
        source=f'x2(n={n})',
    )


def build_x3(n: int) -> DesignSpace:
    """Eight-parameter exponential family: (e^-ks, s e^-ks) for k = 1..4."""
    n = _check_size('x3', n, 8)
    s = _grid(n)
    return make_space(
        _exponential_columns(s, (1, 2, 3, 4)),
        labels=[f's={v:.6g}' for v in s],
        source=f'x3(n={n})',
    )


def build_x4(k: int) -> DesignSpace:
    """k^2-point response surface: x_{(i-1)k+j} = (1, r_i, r_i^2, s_j, r_i s_j)."""
    k = _check_size('x4', k, 3, name='k')
    steps = np.arange(1, k + 1, dtype=float)
    s = steps / k
    r = 2.0 * steps / k - 1.0
    r_col = np.repeat(r, k)
    s_col = np.tile(s, k)
    points = np.column_stack([np.ones(k * k), r_col, r_col**2, s_col, r_col * s_col])
    return make_space(
        points,
        labels=[f'r={a:.6g},s={b:.6g}' for a, b in zip(r_col, s_col)],
        source=f'x4(k={k})',
    )


BUILTIN_FAMILIES: Dict[str, Callable[[int], DesignSpace]] = {
    'x1': build_x1,
    'x2': build_x2,
    'x3': build_x3,
    'x4': build_x4,
}


def build_space(family: str, size: int) -> DesignSpace:
    """Build a builtin family by name (size is n, or k for x4)."""
    builder = BUILTIN_FAMILIES.get(str(family or '').strip().lower())
    if builder is None:
        raise DesignSpaceError(
            'unknown-family', f'{family!r}; expected one of {sorted(BUILTIN_FAMILIES)}'
        )
    return builder(size)


def compute_file_sha256(path: str, chunk_size: int = 1024 * 1024) -> str:
    """Compute SHA256 hash of a file."""
    sha256 = hashlib.sha256()
    with open(path, 'rb') as f:
        while True:
            chunk = f.read(chunk_size)
            if not chunk:
                break
            sha256.update(chunk)
    return sha256.hexdigest()


def load_csv(path: str, has_header: bool = False) -> DesignSpace:
    """Read one design point per row from a comma-separated file."""
    if not path or not os.path.isfile(path):
        raise DesignSpaceError('file-not-found', str(path))

    rows: List[List[float]] = []
    width: Optional[int] = None
    header_pending = bool(has_header)
    with open(path, 'r', encoding='utf-8', newline='') as f:
        for line_no, raw in enumerate(csv.reader(f), start=1):
            if not raw or all(not cell.strip() for cell in raw):
                continue
            if header_pending:
                header_pending = False
                continue
            if width is None:
                width = len(raw)
            elif len(raw) != width:
                raise DesignSpaceError(
                    'ragged-row', f'row {line_no} has {len(raw)} columns, expected {width}'
                )
            rows.append([_parse_cell(cell, line_no, col) for col, cell in enumerate(raw, start=1)])

    if not rows:
        raise DesignSpaceError('empty-file', str(path))

    digest = compute_file_sha256(path)
    return make_space(rows, source=f'csv:{os.path.abspath(path)}#sha256={digest[:16]}')


def _parse_cell(cell: str, line_no: int, col: int) -> float:
    text = cell.strip()
    try:
        value = float(text)
    except ValueError:
        raise DesignSpaceError('non-numeric-cell', f'row {line_no}, column {col}: {text!r}')
    if not math.isfinite(value):
        raise DesignSpaceError(
            'non-numeric-cell', f'row {line_no}, column {col}: {text!r} is not a finite number'
        )
    return value


def save_csv(space: DesignSpace, path: str, header: bool = False) -> str:
    """Write the candidate matrix so that :func:`load_csv` reproduces it bitwise."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    with open(path, 'w', encoding='utf-8', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        if header:
            writer.writerow([f'c{col + 1}' for col in range(space.dim_m)])
        for row in space.points:
            writer.writerow([repr(float(value)) for value in row])
    return path


def l1_distance(a: int, b: int, space: DesignSpace) -> float:
    """L1 distance between candidates a and b."""
    return float(np.abs(space.points[a] - space.points[b]).sum())


def nearest_candidate_spacings(space: DesignSpace) -> np.ndarray:
    """Per-candidate L1 distance to the nearest distinct candidate (inf if none)."""
    n = space.n
    if n < 2:
        return np.full(n, np.inf)
    tree = cKDTree(space.points)
    k = 2
    while True:
        dist, _ = tree.query(space.points, k=min(k, n), p=1)
        dist = np.where(dist > 0.0, dist, np.inf).min(axis=1)
        if np.all(np.isfinite(dist)) or k >= n:
            return dist
        k *= 2


def min_nonzero_spacing(space: DesignSpace) -> float:
    """Smallest nonzero pairwise L1 distance in the space."""
    return float(np.min(nearest_candidate_spacings(space)))
