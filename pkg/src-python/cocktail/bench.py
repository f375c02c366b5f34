"""Benchmark harness: median time and iteration count per (algorithm, size) cell."""

from __future__ import annotations

import csv
import os
import statistics
import threading
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from .bench_executor import CellExecutor
from .design_space import BUILTIN_FAMILIES, DesignSpace, build_space
from .errors import DesignError, DesignSpaceError, InvalidConfig, MonotonicityViolation, SolveCancelled
from .solver import (
    STATUS_ABORTED,
    STATUS_CONVERGED,
    STATUS_ITERATION_CAP,
    SolverConfig,
    normalize_algorithm,
    solve,
)

DEFAULT_CELL_BUDGET_SECONDS = 600.0
STATUS_FAILED = 'FAILED'


def _get_cell_budget(default_seconds: float = DEFAULT_CELL_BUDGET_SECONDS) -> float:
    """Read a positive per-cell time budget from the environment."""
    try:
        value = float(os.environ.get('COCKTAIL_BENCH_CELL_BUDGET_SECONDS', default_seconds))
    except (TypeError, ValueError):
        value = default_seconds
    return value if value > 0 else default_seconds


@dataclass(frozen=True)
class BenchmarkSpec:
    family: str
    sizes: Tuple[int, ...]
    algorithms: Tuple[str, ...]
    replications: int = 3
    epsilon: float = 1e-6
    seed_base: int = 0
    max_iterations: int = 10000
    cell_budget_seconds: Optional[float] = None

    def __post_init__(self) -> None:
        family = str(self.family or '').strip().lower()
        if family not in BUILTIN_FAMILIES:
            raise DesignSpaceError(
                'unknown-family', f'{self.family!r}; expected one of {sorted(BUILTIN_FAMILIES)}'
            )
        object.__setattr__(self, 'family', family)
        sizes = tuple(int(size) for size in self.sizes or ())
        if not sizes:
            raise InvalidConfig('invalid-config', 'benchmark needs at least one size')
        object.__setattr__(self, 'sizes', sizes)
        algorithms = tuple(normalize_algorithm(name) for name in self.algorithms or ())
        if not algorithms:
            raise InvalidConfig('invalid-config', 'benchmark needs at least one algorithm')
        object.__setattr__(self, 'algorithms', tuple(dict.fromkeys(algorithms)))
        if int(self.replications) < 1:
            raise InvalidConfig('invalid-config', f'replications must be >= 1, got {self.replications!r}')
        if self.cell_budget_seconds is None:
            object.__setattr__(self, 'cell_budget_seconds', _get_cell_budget())


@dataclass(frozen=True)
class Replication:
    seed: int
    status: str
    seconds: float
    iterations: int
    log_det: float
    certificate: float


@dataclass
class BenchCell:
    algorithm: str
    size: int
    n: int
    replications: List[Replication] = field(default_factory=list)
    error: Optional[str] = None

    @property
    def status(self) -> str:
        if self.error is not None:
            return STATUS_FAILED
        statuses = {rep.status for rep in self.replications}
        if STATUS_ABORTED in statuses:
            return STATUS_ABORTED
        if STATUS_ITERATION_CAP in statuses:
            return STATUS_ITERATION_CAP
        return STATUS_CONVERGED

    @property
    def median_seconds(self) -> Optional[float]:
        if not self.replications:
            return None
        return float(statistics.median(rep.seconds for rep in self.replications))

    @property
    def median_iterations(self) -> Optional[float]:
        if not self.replications:
            return None
        return float(statistics.median(rep.iterations for rep in self.replications))

    @property
    def median_mismatch(self) -> bool:
        """True when the median time and median count come from different replications."""
        if len(self.replications) < 2:
            return False
        by_time = sorted(range(len(self.replications)), key=lambda i: self.replications[i].seconds)
        by_count = sorted(range(len(self.replications)), key=lambda i: self.replications[i].iterations)
        middle = (len(self.replications) - 1) // 2
        return self.replications[by_time[middle]].iterations != self.replications[by_count[middle]].iterations

    def cell_text(self) -> str:
        if self.status == STATUS_FAILED:
            return f'failed ({self.error})'
        seconds = self.median_seconds or 0.0
        iterations = int(round(self.median_iterations or 0))
        if self.status == STATUS_ABORTED:
            return f'{_format_seconds(seconds)}+ (aborted)'
        if self.status == STATUS_ITERATION_CAP:
            return f'{_format_seconds(seconds)}+ ({iterations}+)'
        return f'{_format_seconds(seconds)} ({iterations})'


def _format_seconds(seconds: float) -> str:
    if seconds >= 100:
        return f'{seconds:.0f}'
    if seconds >= 1:
        return f'{seconds:.3g}'
    return f'{seconds:.2f}'


@dataclass
class BenchTable:
    spec: BenchmarkSpec
    cells: Dict[Tuple[str, int], BenchCell] = field(default_factory=dict)

    def cell(self, algorithm: str, size: int) -> BenchCell:
        return self.cells[(normalize_algorithm(algorithm), int(size))]

    def size_header(self, size: int) -> str:
        return f'n={size}^2' if self.spec.family == 'x4' else f'n={size}'

    def to_text(self) -> str:
        """Algorithms as rows, sizes as columns, "time (iterations)" cells."""
        header = [f'{self.spec.family}'] + [self.size_header(size) for size in self.spec.sizes]
        rows = [header]
        for algorithm in self.spec.algorithms:
            row = [algorithm]
            for size in self.spec.sizes:
                cell = self.cells.get((algorithm, size))
                row.append(cell.cell_text() if cell is not None else '')
            rows.append(row)
        widths = [max(len(row[col]) for row in rows) for col in range(len(header))]
        lines = []
        for index, row in enumerate(rows):
            first = row[0].ljust(widths[0])
            rest = [value.rjust(widths[col + 1]) for col, value in enumerate(row[1:])]
            lines.append(' | '.join([first] + rest))
            if index == 0:
                lines.append('-+-'.join('-' * width for width in widths))
        return '\n'.join(lines) + '\n'

    def write_csv(self, path: str) -> str:
        directory = os.path.dirname(os.path.abspath(path))
        os.makedirs(directory, exist_ok=True)
        with open(path, 'w', encoding='utf-8', newline='') as f:
            writer = csv.writer(f, lineterminator='\n')
            writer.writerow(
                [
                    'family',
                    'algorithm',
                    'size',
                    'n',
                    'median_seconds',
                    'median_iterations',
                    'status',
                    'replications',
                    'median_mismatch',
                ]
            )
            for algorithm in self.spec.algorithms:
                for size in self.spec.sizes:
                    cell = self.cells.get((algorithm, size))
                    if cell is None:
                        continue
                    writer.writerow(
                        [
                            self.spec.family,
                            algorithm,
                            size,
                            cell.n,
                            '' if cell.median_seconds is None else repr(cell.median_seconds),
                            '' if cell.median_iterations is None else repr(cell.median_iterations),
                            cell.status,
                            len(cell.replications),
                            int(cell.median_mismatch),
                        ]
                    )
        return path

    def write_text(self, path: str) -> str:
        directory = os.path.dirname(os.path.abspath(path))
        os.makedirs(directory, exist_ok=True)
        with open(path, 'w', encoding='utf-8') as f:
            f.write(self.to_text())
        return path


def run_cell(
    space: DesignSpace,
    algorithm: str,
    size: int,
    spec: BenchmarkSpec,
    cancel_event=None,
) -> BenchCell:
    """Run every replication of one cell; seeds are seed_base + replication index."""
    cell = BenchCell(algorithm=algorithm, size=size, n=space.n)
    for replication in range(int(spec.replications)):
        seed = int(spec.seed_base) + replication
        config = SolverConfig(
            algorithm=algorithm,
            epsilon=spec.epsilon,
            max_iterations=spec.max_iterations,
            rng_seed=seed,
        )
        try:
            result = solve(space, config, cancel_event=cancel_event)
        except SolveCancelled as error:
            trace = error.trace
            cell.replications.append(
                Replication(
                    seed=seed,
                    status=STATUS_ABORTED,
                    seconds=trace.seconds if trace is not None else 0.0,
                    iterations=trace.iterations if trace is not None else 0,
                    log_det=trace.records[-1].log_det if trace is not None and trace.records else float('nan'),
                    certificate=trace.records[-1].certificate if trace is not None and trace.records else float('nan'),
                )
            )
            break
        cell.replications.append(
            Replication(
                seed=seed,
                status=str(result.status),
                seconds=result.trace.seconds,
                iterations=result.iterations,
                log_det=result.log_det,
                certificate=result.certificate,
            )
        )
    return cell


def run_benchmark(
    spec: BenchmarkSpec,
    workers: Optional[int] = None,
    stage_callback: Optional[Callable[[str], None]] = None,
) -> BenchTable:
    """Run all cells of a benchmark spec, optionally on several workers.

    A monotonicity violation marks a solver bug: the remaining queued and
    running cells are cancelled and reported as failed or aborted.
    """
    table = BenchTable(spec=spec)
    spaces = {size: build_space(spec.family, size) for size in spec.sizes}
    lock = threading.RLock()
    executor = CellExecutor(max_workers=workers, name_prefix='Bench')
    cell_ids: List[str] = []
    stopping = threading.Event()

    def _stop_outstanding(failed_id: str) -> None:
        stopping.set()
        with lock:
            pending = [cell_id for cell_id in cell_ids if cell_id != failed_id]
        for cell_id in pending:
            if executor.is_active(cell_id) and executor.cancel(cell_id):
                print(f'[WARN] {cell_id} cancelled after a monotonicity violation in {failed_id}')

    def _emit(stage: str) -> None:
        if stage_callback is None:
            return
        try:
            stage_callback(stage)
        except Exception as e:
            print(f'[WARN] stage_callback failed: {str(e)}')

    def _submit(algorithm: str, size: int) -> None:
        space = spaces[size]
        cell_id = f'{spec.family}:{algorithm}:{size}'

        def _run(cancel_event):
            _emit(f'{cell_id} started')
            return run_cell(space, algorithm, size, spec, cancel_event=cancel_event)

        def _done(result, error: Optional[BaseException]) -> None:
            if error is not None:
                code = str(error) if isinstance(error, DesignError) else 'internal'
                if isinstance(error, MonotonicityViolation):
                    _stop_outstanding(cell_id)
                print(f'[ERROR] {cell_id} failed: {code} {getattr(error, "detail", "")}'.rstrip())
                result = BenchCell(algorithm=algorithm, size=size, n=space.n, error=code)
            with lock:
                table.cells[(algorithm, size)] = result
            if result.status == STATUS_ABORTED:
                print(f'[WARN] {cell_id} aborted (budget {spec.cell_budget_seconds}s)')
            if result.median_mismatch:
                print(f'[WARN] {cell_id}: median time and median iterations come from different replications')
            _emit(f'{cell_id} {result.cell_text()}')

        with lock:
            if stopping.is_set():
                print(f'[WARN] {cell_id} skipped after a monotonicity violation')
                table.cells[(algorithm, size)] = BenchCell(
                    algorithm=algorithm, size=size, n=space.n, error=SolveCancelled.code
                )
                return
            cell_ids.append(cell_id)
            executor.submit(cell_id, _run, _done, budget_seconds=spec.cell_budget_seconds)

    for algorithm in spec.algorithms:
        for size in spec.sizes:
            _submit(algorithm, size)
    executor.join()
    executor.shutdown()
    return table


def qualitative_ordering_holds(table: BenchTable, fast: str = 'cocktail', slow: Sequence[str] = ('ma', 'vem')) -> bool:
    """Median iterations of `fast` below every `slow` algorithm on fully converged columns."""
    for size in table.spec.sizes:
        names = [fast, *slow]
        cells = [table.cells.get((name, size)) for name in names]
        if any(cell is None or cell.status != STATUS_CONVERGED for cell in cells):
            continue
        fast_cell, *slow_cells = cells
        if not all(fast_cell.median_iterations < cell.median_iterations for cell in slow_cells):
            return False
    return True
