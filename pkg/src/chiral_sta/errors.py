"""Exception hierarchy shared by the simulation modules."""

from __future__ import annotations


class ChiralStaError(Exception):
    """Base class for all package errors."""


class ScheduleUndefinedError(ChiralStaError):
    """The mixing angle cannot be formed because both two-photon pulses vanish."""


class SingularScheduleError(ChiralStaError):
    """Chosen-path pulse amplitude exceeded the configured ceiling."""

    def __init__(self, time: float, value: float, ceiling: float):
        self.time = float(time)
        self.value = float(value)
        self.ceiling = float(ceiling)
        super().__init__(
            f"singular schedule at t={self.time:.6g} us: |amplitude|={self.value:.6g} "
            f"exceeds ceiling {self.ceiling:.6g} rad/us"
        )


class FrameUndefinedError(ChiralStaError):
    """Adiabatic frame requested where the total Rabi frequency is zero."""


class IntegrationDivergedError(ChiralStaError):
    """Norm, trace or positivity drift beyond tolerance during time stepping."""

    def __init__(self, time: float, what: str, amount: float):
        self.time = float(time)
        self.what = what
        self.amount = float(amount)
        super().__init__(f"integration diverged at t={self.time:.6g} us: {what} off by {self.amount:.3g}")


class ScenarioError(ChiralStaError, ValueError):
    """Scenario is internally inconsistent or cannot be parsed."""

    def __init__(self, message: str, line: int | None = None, key: str | None = None):
        self.line = line
        self.key = key
        self.detail = message
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


class UnknownScenarioError(ChiralStaError, LookupError):
    pass
