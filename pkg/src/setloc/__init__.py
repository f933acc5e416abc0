"""Guaranteed set-membership localization with infrastructure sensors."""

from .geom2d import (AngleInterval, ConvexPolygon, Interval, Point2,
                     SectorTooWide)
from .kinematics import Control, MarkerOffset, RobotModel, RobotPose
from .sensing import Measurement, SensorModel, SensorPose
from .correspondence import (Assignment, CandidateMatrix, CapExceeded,
                             InconsistentBatch)
from .estimator import (EmptySetFault, EstimatorModels, EstimatorState,
                        RigidBodySpec)
from .scenario import ConfigError, RunRecord, ScenarioConfig, ScenarioFault

__version__ = "0.1.0"

__all__ = [
    "AngleInterval", "Assignment", "CandidateMatrix", "CapExceeded",
    "ConfigError", "Control", "ConvexPolygon", "EmptySetFault",
    "EstimatorModels", "EstimatorState", "InconsistentBatch", "Interval",
    "MarkerOffset", "Measurement", "Point2", "RigidBodySpec", "RobotModel",
    "RobotPose", "RunRecord", "ScenarioConfig", "ScenarioFault",
    "SectorTooWide", "SensorModel", "SensorPose", "__version__",
]
