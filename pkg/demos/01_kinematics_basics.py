"""Tour of the kinematic core: joint transforms, forward kinematics, the
arm's one-dimensional polyline, and static design checks.

Run:  python demos/01_kinematics_basics.py
"""

import numpy as np

from armsynth import (
    DesignLimits,
    DHLinkParams,
    RobotDesign,
    arm_point,
    arm_polyline,
    check_design_limits,
    dh_transform,
    forward_kinematics,
    total_length,
)

# A joint is parameterized by its constant triple (twist alpha, link length a,
# offset d); the joint angle is the only moving part.
phi = DHLinkParams(alpha=np.pi / 2, a=0.1, d=0.3)
print("transform of one joint at theta=0.7:")
print(np.round(dh_transform(phi, 0.7), 4))

# A design is an ordered chain of triples, optionally with a fixed tool tip.
# This one mirrors the shape of a compact 3-DOF pick-and-place arm.
design = RobotDesign(
    links=(
        DHLinkParams(0.515, 0.0, 0.0),
        DHLinkParams(-1.57, 0.11, 0.0),
        DHLinkParams(-0.27, 0.5, 0.0),
    ),
    tool=DHLinkParams(-1.57, 0.0, 0.1),
)
print(f"\ntotal length: {total_length(design):.3f} m")

q = np.array([0.3, -0.8, 1.1])
pose = forward_kinematics(design, q)
print(f"EE position at q={q}: {np.round(pose.position, 4)}")
print(f"EE roll/pitch/yaw:     {np.round(pose.euler, 4)}")

# The polyline runs base -> EE through every offset-then-length segment; any
# point on the arm is addressed by its normalized arc coordinate.
poly = arm_polyline(design, q)
print(f"\npolyline vertices:\n{np.round(poly.points, 4)}")
for sigma in (0.0, 0.25, 0.5, 1.0):
    print(f"arm point at sigma={sigma:4.2f}: {np.round(arm_point(design, q, sigma), 4)}")

# Static admissibility: per-parameter bounds, total-length band, and the
# non-concentric rule for consecutive joints.
limits = DesignLimits()
print(f"\nlimit violations of the demo design: {check_design_limits(design, limits) or 'none'}")

too_long = RobotDesign(tuple(DHLinkParams(0.3, 0.5, 0.2) for _ in range(3)))
print(f"violations of a 2.1 m arm: {check_design_limits(too_long, limits)}")
