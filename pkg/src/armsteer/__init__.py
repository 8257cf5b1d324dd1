"""Adaptive visual-servoing control and simulation for redundant arms.

The task-space controller drives a camera-observed feature point to a pixel
target without camera calibration, while a null-space channel lets a human
steer the arm's redundant body without disturbing the task.
"""

from .camera import (
    CameraModel,
    EstimatorState,
    TrueParams,
    estimate_depth,
    estimate_image_jacobian,
    project,
    regressor_Yk,
    regressor_Yz,
    true_image_jacobian,
)
from .controller import (
    ControllerConfig,
    ControlOutput,
    HumanIntent,
    adapt_step,
    control_step,
    lyapunov_value,
    nullspace_term,
    task_term,
)
from .errors import (
    ArmsteerError,
    BehindCameraError,
    ConfigurationError,
    DivergenceError,
    NumericalIntegrityError,
    SingularityError,
)
from .kinematics import (
    DHRow,
    JacobianBundle,
    JointState,
    RobotModel,
    forward_kinematics,
    jacobian,
    jacobian_bundle,
    null_projector,
    pseudo_inverse,
)
from .scenario import Scenario, parse_scenario, parse_scenario_dict
from .simulator import (
    CircleTarget,
    EstimatorInit,
    IntentSchedule,
    IntentSegment,
    SetpointTarget,
    SimConfig,
    Simulation,
    compare_intent_off,
    run,
)
from .telemetry import SummaryMetrics, TelemetryLog, TelemetryRecord, summarize

__version__ = "0.1.0"
