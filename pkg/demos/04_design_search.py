"""End-to-end design synthesis: hide an arm, record its motion, and let the
validity-aware swarm search recover a design that tracks the recording.

Run:  python demos/04_design_search.py   (a few minutes)
"""

import numpy as np

from armsynth import (
    DesignLimits,
    DHLinkParams,
    FitnessWeights,
    IKSettings,
    PSOConfig,
    RobotDesign,
    format_report,
    link_fraction_anchors,
    run_design_optimization,
    synthesize_task,
)

hidden = RobotDesign(
    (
        DHLinkParams(0.7, 0.30, 0.0),
        DHLinkParams(-0.5, 0.27, 0.0),
        DHLinkParams(0.9, 0.25, 0.0),
    )
)
# Start near full extension: a selective start gate, as in real recordings.
q0 = np.array([0.05, -0.1, 0.08])
path = np.linspace(q0, q0 + np.array([0.5, -0.4, 0.45]), 12)
task = synthesize_task(hidden, path, link_fraction_anchors(hidden))

cfg = PSOConfig(N=80, M=60, D=2)
settings = IKSettings(
    particles=16, iterations=24, stall_iterations=6, stall_tol=1e-6, polish_steps=8,
    gate_particles=32, gate_iterations=50,
)
result = run_design_optimization(
    task, cfg, DesignLimits(), FitnessWeights.scenario_i(), settings,
    algorithm="rapso", seed=3, n=3,
)

print(f"iterations run: {result.iterations_run}")
if result.no_solution:
    print("no valid design found")
else:
    print(f"best design: {format_report(result.report)}")
    print("rows (alpha, a, d):")
    for lk in result.design.links:
        print(f"  ({lk.alpha:+.3f}, {lk.a:.3f}, {lk.d:.3f})")
    print("hidden truth:")
    for lk in hidden.links:
        print(f"  ({lk.alpha:+.3f}, {lk.a:.3f}, {lk.d:.3f})")
    valid_curve = [h["n_valid"] for h in result.history]
    print(f"valid agents over iterations: {valid_curve[:10]} ... {valid_curve[-5:]}")
