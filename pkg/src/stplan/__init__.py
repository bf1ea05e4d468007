"""Spatio-temporal motion planning against predicted human occupancy."""

from .edge_cost import (
    EdgeAvoidance,
    EdgeTiming,
    earliest_passage,
    edge_avoidance,
    nominal_time,
    robot_tangential_speed,
    ssm_adjusted_time,
    timed_edge,
)
from .executor import ExecutionResult, execute, separation_distance
from .human import (
    HumanMotionSample,
    HumanMotionSequence,
    human_forward_kinematics,
    load_human_motion,
    save_human_motion,
)
from .occupancy import OccupancyMap, VoxelGrid, build_occupancy_map, voxelize_pose
from .planner import (
    PathSolution,
    PlanGraph,
    Planner,
    PlannerConfig,
    PlanResult,
    extract_path,
    rewire_cascade,
)
from .replay import replay_violations
from .robot import (
    RobotModel,
    discretize_edge,
    fk_points,
    jacobian_point,
    load_robot,
    swept_voxels,
)
from .ssm import SsmParams, ssm_vmax
from .synthetic import generate_synthetic_human, perturb_sequence
from .timing import (
    TimedTrajectory,
    load_trajectory,
    parameterize_fast,
    parameterize_planned,
    save_trajectory,
)

__version__ = "0.1.0"

__all__ = [
    "EdgeAvoidance",
    "EdgeTiming",
    "ExecutionResult",
    "HumanMotionSample",
    "HumanMotionSequence",
    "OccupancyMap",
    "PathSolution",
    "PlanGraph",
    "PlanResult",
    "Planner",
    "PlannerConfig",
    "RobotModel",
    "SsmParams",
    "TimedTrajectory",
    "VoxelGrid",
    "build_occupancy_map",
    "discretize_edge",
    "earliest_passage",
    "edge_avoidance",
    "execute",
    "extract_path",
    "fk_points",
    "generate_synthetic_human",
    "human_forward_kinematics",
    "jacobian_point",
    "load_human_motion",
    "load_robot",
    "load_trajectory",
    "nominal_time",
    "parameterize_fast",
    "parameterize_planned",
    "perturb_sequence",
    "replay_violations",
    "rewire_cascade",
    "robot_tangential_speed",
    "save_human_motion",
    "save_trajectory",
    "separation_distance",
    "ssm_adjusted_time",
    "ssm_vmax",
    "swept_voxels",
    "timed_edge",
    "voxelize_pose",
]
