"""flapsim: deterministic flight simulator and autonomy stack for a
sub-2-gram flapping-wing micro aerial vehicle.

The stack mirrors the onboard architecture: a 480 Hz fixed-step loop
running a Mahony attitude filter, scalar-unrolled 2x2 Kalman filters
for altitude (time-of-flight ranger) and lateral velocity (optical
flow), and a cascaded position/attitude controller — all available in
double precision and in the single-precision deployment mode.
"""

from .config import (PRESETS, RatesConfig, SimConfig, config_hash,
                     from_dict, load_config, preset, resolve_config,
                     save_config, to_dict)
from .controller import CascadedController, ControlCommand, ControllerGains
from .dynamics import (VehicleParams, VehicleState, accel_world,
                       resolve_ground_contact, step_dynamics)
from .environment import Bump, Flower, TerrainField, flat_terrain, mission_course
from .estimator import CascadedEstimator, EstimatedState, EstimatorConfig
from .harness import (Simulation, SimulationError, compare_precision,
                      replay_estimation_rms, replay_estimator,
                      replay_matches_log, run_experiment)
from .logbook import BUFFER_ROWS, COLUMNS, FlightLog
from .metrics import MetricsReport, evaluate_acceptance, report
from .mission import (CommandLimits, CommandMission, HighLevelCommand,
                      MissionSetpoint, TrajectoryMission, build_mission)
from .sensors import (FlowSample, ImuSample, NoiseConfig, SensorFrame,
                      SensorSuite, TofSample)

__version__ = "0.1.0"

__all__ = [
    "PRESETS", "RatesConfig", "SimConfig", "config_hash", "from_dict",
    "load_config", "preset", "resolve_config", "save_config", "to_dict",
    "CascadedController", "ControlCommand", "ControllerGains",
    "VehicleParams", "VehicleState", "accel_world",
    "resolve_ground_contact", "step_dynamics",
    "Bump", "Flower", "TerrainField", "flat_terrain", "mission_course",
    "CascadedEstimator", "EstimatedState", "EstimatorConfig",
    "Simulation", "SimulationError", "compare_precision",
    "replay_estimation_rms", "replay_estimator", "replay_matches_log",
    "run_experiment",
    "BUFFER_ROWS", "COLUMNS", "FlightLog",
    "MetricsReport", "evaluate_acceptance", "report",
    "CommandLimits", "CommandMission", "HighLevelCommand",
    "MissionSetpoint", "TrajectoryMission", "build_mission",
    "FlowSample", "ImuSample", "NoiseConfig", "SensorFrame",
    "SensorSuite", "TofSample",
    "__version__",
]
