"""Robot-arm kinematic design synthesis from recorded whole-arm demonstrations."""

from .demonstration import (
    MarkerFrame,
    RecordedTask,
    link_fraction_anchors,
    load_task,
    save_task,
    sine_joint_path,
    smooth_task,
    synthesize_task,
)
from .fitness import (
    FitnessReport,
    FitnessWeights,
    IKSettings,
    SigmaAssignment,
    area_penalty,
    format_report,
    path_fitness,
    project_markers,
    robot_fitness,
    temporal_cost,
    temporal_fitness,
    validity_gate,
)
from .kinematics import (
    ArmPolyline,
    DesignLimits,
    DHLinkParams,
    EEPose,
    RobotDesign,
    arm_point,
    arm_polyline,
    check_design_limits,
    dh_transform,
    ee_euler,
    forward_kinematics,
    total_length,
)
from .optimize import (
    OptimizationResult,
    Particle,
    PSOConfig,
    SwarmState,
    inner_ik_solve,
    pso_step,
    rapso_step,
    run_design_optimization,
    sample_initial_swarm,
)

__version__ = "0.1.0"
