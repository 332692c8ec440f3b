"""Exception hierarchy shared by every module of the lab.

Two families exist. Usage errors (bad parameters, inputs or configuration) map to
exit status 2 on the command line; numerical errors map to exit status 3. Failed
verification checks are never exceptions: they are entries of a report.
"""

from __future__ import annotations

from typing import Any


class LabError(Exception):
    """Root of all errors raised by kolmogorov_lab."""

    exit_code: int = 3


class UsageError(LabError):
    exit_code = 2


class ParameterDomainError(UsageError, ValueError):
    """A parameter lies outside the range where the construction is defined."""


class InputError(UsageError, ValueError):
    pass


class ConfigurationError(UsageError):
    def __init__(self, message: str, *, admissible_dt: float | None = None):
        super().__init__(message)
        self.admissible_dt = admissible_dt


class ScenarioError(UsageError):
    def __init__(self, message: str, *, source: str | None = None, line: int | None = None):
        prefix = ""
        if source is not None:
            prefix = f"{source}:{line}: " if line is not None else f"{source}: "
        super().__init__(prefix + message)
        self.source = source
        self.line = line


class NumericalError(LabError):
    exit_code = 3


class CoefficientEvaluationError(NumericalError):
    def __init__(self, message: str, *, t: float | None = None, x: Any = None):
        location = ""
        if t is not None:
            location = f" at t={t!r}, x={x!r}"
        super().__init__(message + location)
        self.t = t
        self.x = x


class FactorizationError(NumericalError):
    def __init__(self, message: str, *, leading_minor: int | None = None):
        super().__init__(message)
        self.leading_minor = leading_minor


class SimulationError(NumericalError):
    pass


class CertificationError(NumericalError):
    pass
