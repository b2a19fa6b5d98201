"""Experience-accelerated optimization-based motion planning on a desk scale.

Gradient-descent trajectory optimization with explicit swept-volume
substeps, simplex-noise obstacle worlds, basis-point-set world encoding,
and a supervised path-prediction network whose training data is cleaned,
boosted, and extended using the optimizer's objective as a quality oracle.
"""

from .bps import BasisPointSet, BpsFeatures, encode_pointcloud, encode_sdf, generate_hex_bps
from .dataset import Dataset, Sample
from .errors import ConfigError, DataError, NumericError
from .multistart import MotionTask, solve_multistart
from .net import Checkpoint, Mlp, TrainConfig
from .objective import ObjectiveParams, ObjectiveValue
from .optimizer import DescentParams, DescentTrace, descend, feasibility_check
from .robots import RobotModel, forward_kinematics, load_robot
from .worlds import OccupancyGrid, SignedDistanceField, WorldSpec, compute_sdf, generate_world

__version__ = "0.1.0"

__all__ = [
    "BasisPointSet", "BpsFeatures", "Checkpoint", "ConfigError", "DataError",
    "Dataset", "DescentParams", "DescentTrace", "Mlp", "MotionTask",
    "NumericError", "ObjectiveParams", "ObjectiveValue", "OccupancyGrid",
    "RobotModel", "Sample", "SignedDistanceField", "TrainConfig", "WorldSpec",
    "compute_sdf", "descend", "encode_pointcloud", "encode_sdf",
    "feasibility_check", "forward_kinematics", "generate_hex_bps",
    "generate_world", "load_robot", "solve_multistart",
]
