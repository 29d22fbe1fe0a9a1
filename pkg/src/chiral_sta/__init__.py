"""Chiral-molecule discrimination by chosen-path shortcuts to adiabaticity."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ChiralStaError,
    FrameUndefinedError,
    IntegrationDivergedError,
    ScenarioError,
    ScheduleUndefinedError,
    SingularScheduleError,
    UnknownScenarioError,
)
from .scenario import Scenario  # noqa: E402
from .experiments import canonical_scenarios, discrimination, get_scenario, run_scenario  # noqa: E402

__all__ = [
    "ChiralStaError", "FrameUndefinedError", "IntegrationDivergedError", "Scenario", "ScenarioError",
    "ScheduleUndefinedError", "SingularScheduleError", "UnknownScenarioError", "__version__",
    "canonical_scenarios", "discrimination", "get_scenario", "run_scenario",
]
