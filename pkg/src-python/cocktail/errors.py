"""Coded exceptions shared by the design, solver and CLI layers.

Every error's ``str()`` is a stable kebab-case code; the human-readable
explanation lives in ``detail``. The CLI maps codes to exit statuses.
"""

from __future__ import annotations

from typing import Any, Optional


class DesignError(RuntimeError):
    """Base class: ``str(error)`` is the code, ``error.detail`` the explanation."""

    code = 'internal'

    def __init__(self, code: Optional[str] = None, detail: str = '') -> None:
        self.code = str(code or type(self).code)
        self.detail = str(detail or '')
        super().__init__(self.code)


class DesignSpaceError(DesignError):
    """Invalid candidate set, unreadable space file or unknown builtin family."""

    code = 'invalid-space'


class InvalidWeights(DesignError):
    """A weight vector is not a probability vector over the candidates."""

    code = 'invalid-weights'


class InvalidConfig(DesignError):
    """Solver or benchmark settings violate their invariants."""

    code = 'invalid-config'


class SingularInformation(DesignError):
    """The information matrix is singular (the design left the set det M > 0)."""

    code = 'singular-information'

    def __init__(self, detail: str = '') -> None:
        super().__init__('singular-information', detail)


class DegenerateStart(DesignError):
    """No nonsingular starting design could be drawn."""

    code = 'degenerate-start'

    def __init__(self, detail: str = '', trace: Any = None) -> None:
        super().__init__('degenerate-start', detail)
        self.trace = trace


class MonotonicityViolation(DesignError):
    """A step decreased log det M beyond the numerical slack; always a bug."""

    code = 'monotonicity-violation'

    def __init__(self, detail: str = '', trace: Any = None) -> None:
        super().__init__('monotonicity-violation', detail)
        self.trace = trace


class SolveCancelled(DesignError):
    """Raised when a running solve observes its cancel event."""

    code = 'cancelled'

    def __init__(self, detail: str = '', trace: Any = None) -> None:
        super().__init__('cancelled', detail)
        self.trace = trace
