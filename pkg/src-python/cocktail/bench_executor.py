"""Bounded background execution and cooperative cancellation for benchmark cells."""

from __future__ import annotations

import os
import queue
import threading
from dataclasses import dataclass
from typing import Callable, Optional

from .errors import SolveCancelled


@dataclass
class _QueuedCell:
    cell_id: str
    cancel_event: threading.Event
    cell_callable: Callable[[threading.Event], object]
    on_completion: Callable[[object, Optional[BaseException]], None]
    budget_seconds: Optional[float] = None


def _default_max_workers() -> int:
    raw_value = os.environ.get('COCKTAIL_BENCH_WORKERS', '1')
    try:
        return max(1, int(raw_value))
    except (TypeError, ValueError):
        return 1


class CellExecutor:
    """Run a bounded number of benchmark cells and expose per-cell cancel events.

    A cell's time budget starts when a worker picks it up; when it expires the
    cell's cancel event is set and the running solve stops at its next
    iteration boundary.
    """

    def __init__(self, max_workers: Optional[int] = None, name_prefix='BenchCell'):
        self.max_workers = max(1, int(max_workers or _default_max_workers()))
        self._name_prefix = str(name_prefix or 'BenchCell')
        self._queue: queue.Queue[Optional[_QueuedCell]] = queue.Queue()
        self._cells: dict[str, _QueuedCell] = {}
        self._lock = threading.RLock()
        self._workers = []

        for index in range(self.max_workers):
            worker = threading.Thread(
                target=self._worker,
                name=f'{self._name_prefix}Worker-{index + 1}',
                daemon=True,
            )
            worker.start()
            self._workers.append(worker)

    def submit(
        self,
        cell_id,
        cell_callable,
        on_completion,
        budget_seconds: Optional[float] = None,
    ) -> threading.Event:
        """Queue a cell and return the event used to cooperatively cancel it."""
        normalized_id = str(cell_id)
        cancel_event = threading.Event()
        queued_cell = _QueuedCell(
            cell_id=normalized_id,
            cancel_event=cancel_event,
            cell_callable=cell_callable,
            on_completion=on_completion,
            budget_seconds=budget_seconds,
        )
        with self._lock:
            if normalized_id in self._cells:
                raise RuntimeError('cell-already-running')
            self._cells[normalized_id] = queued_cell
        self._queue.put(queued_cell)
        return cancel_event

    def cancel(self, cell_id) -> bool:
        """Signal a queued or running cell to stop."""
        with self._lock:
            queued_cell = self._cells.get(str(cell_id))
            if queued_cell is None:
                return False
            queued_cell.cancel_event.set()
            return True

    def is_active(self, cell_id) -> bool:
        """Return whether a cell is queued or currently running."""
        with self._lock:
            return str(cell_id) in self._cells

    def join(self) -> None:
        """Block until every submitted cell has completed."""
        self._queue.join()

    def shutdown(self) -> None:
        """Stop the workers once the queue drains."""
        for _ in self._workers:
            self._queue.put(None)
        for worker in self._workers:
            worker.join()
        self._workers = []

    def _worker(self) -> None:
        while True:
            queued_cell = self._queue.get()
            if queued_cell is None:
                self._queue.task_done()
                return
            result = None
            error: Optional[BaseException] = None
            timer = None
            if queued_cell.budget_seconds is not None and queued_cell.budget_seconds > 0:
                timer = threading.Timer(queued_cell.budget_seconds, queued_cell.cancel_event.set)
                timer.daemon = True
                timer.start()
            try:
                if queued_cell.cancel_event.is_set():
                    raise SolveCancelled('cancelled before start')
                result = queued_cell.cell_callable(queued_cell.cancel_event)
            except BaseException as exc:
                error = exc
            finally:
                if timer is not None:
                    timer.cancel()

            with self._lock:
                if self._cells.get(queued_cell.cell_id) is queued_cell:
                    self._cells.pop(queued_cell.cell_id, None)

            try:
                queued_cell.on_completion(result, error)
            except Exception:
                # Callers own logging because they have the cell context.
                pass
            finally:
                self._queue.task_done()
