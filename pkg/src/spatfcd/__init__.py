"""Signal phase and timing estimation from sparse floating-car trajectories."""

from .config import Settings, load_settings
from .fcd import (
    CalibrationTable,
    PhaseEstimate,
    RecalledCase,
    SignalPlanTruth,
    StartEvent,
    StopDetail,
    TrajectoryRecord,
)

__version__ = "0.1.0"

__all__ = [
    "CalibrationTable",
    "PhaseEstimate",
    "RecalledCase",
    "Settings",
    "SignalPlanTruth",
    "StartEvent",
    "StopDetail",
    "TrajectoryRecord",
    "load_settings",
    "__version__",
]
