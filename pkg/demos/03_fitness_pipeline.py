"""The cost hierarchy, bottom to top: marker projection, per-frame cost,
multi-point IK, path fitness, area penalty, combined robot fitness.

Run:  python demos/03_fitness_pipeline.py   (about half a minute)
"""

import numpy as np

from armsynth import (
    DHLinkParams,
    FitnessWeights,
    IKSettings,
    RobotDesign,
    format_report,
    link_fraction_anchors,
    project_markers,
    robot_fitness,
    sine_joint_path,
    synthesize_task,
    temporal_cost,
    temporal_fitness,
)

truth = RobotDesign(
    (
        DHLinkParams(0.5, 0.28, 0.0),
        DHLinkParams(-0.8, 0.30, 0.0),
        DHLinkParams(0.3, 0.26, 0.0),
    )
)
path = sine_joint_path(3, 25, center=[0.1, 0.6, -0.7], amplitude=[0.4, 0.35, 0.5], cycles=0.6)
task = synthesize_task(truth, path, link_fraction_anchors(truth))

# Weights: w0 scales the hand-orientation residual, w the marker positions.
weights = FitnessWeights.scenario_i()
settings = IKSettings()

# 1. Project one frame's markers onto the arm: monotone arc coordinates.
frame = task.frames[0]
sig = project_markers(truth, path[0], frame, weights)
print(f"projected sigma at the true pose: {np.round(sig.sigma, 4)}")

# 2. Per-frame cost at those coordinates (zero here: markers lie on the arm).
g = temporal_cost(truth, path[0], frame, sig, weights)
print(f"temporal cost at the true pose: {g * 1000:.4f} mm")

# 3. Per-frame fitness = best cost over feasible joint vectors (multi-point
# IK); a wrong arm cannot fit the markers nearly as well.
other = RobotDesign(
    (
        DHLinkParams(0.1, 0.35, 0.0),
        DHLinkParams(0.9, 0.22, 0.0),
        DHLinkParams(-0.4, 0.31, 0.0),
    )
)
G_true, _ = temporal_fitness(truth, frame, None, settings, weights, rng=np.random.default_rng(0))
G_other, _ = temporal_fitness(other, frame, None, settings, weights, rng=np.random.default_rng(0))
print(f"frame fitness: true arm {G_true * 1000:.3f} mm vs other arm {G_other * 1000:.3f} mm")

# 4-6. Full evaluation: start-gate, sequential path solve, area penalty,
# combined objective (invalid designs would get an infinite sentinel).
for name, design in (("true arm", truth), ("other arm", other)):
    report = robot_fitness(design, task, settings, weights, rng=np.random.default_rng(1))
    print(f"{name}: {format_report(report)}")
