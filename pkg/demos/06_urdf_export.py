"""Export a synthesized design as URDF and verify the chain closes: composing
the document's joint origins at zero joint angles reproduces the design's
forward kinematics.

Run:  python demos/06_urdf_export.py
"""

import numpy as np

from armsynth import DHLinkParams, RobotDesign, forward_kinematics
from armsynth.urdf import compose_urdf_origins, design_to_urdf

design = RobotDesign(
    links=(
        DHLinkParams(0.515, 0.0, 0.0),
        DHLinkParams(-1.57, 0.11, 0.0),
        DHLinkParams(-0.27, 0.5, 0.0),
    ),
    tool=DHLinkParams(-1.57, 0.0, 0.1),
)

xml = design_to_urdf(design, name="demo_arm")
print(xml[:600])
print("...")

T = compose_urdf_origins(xml)
fk = forward_kinematics(design, np.zeros(3))
print(f"URDF chain at q=0:  {np.round(T[:3, 3], 6)}")
print(f"forward kinematics: {np.round(fk.position, 6)}")
print(f"closure error: {np.linalg.norm(T[:3, 3] - fk.position):.2e} m")

with open("demo_arm.urdf", "w") as fh:
    fh.write(xml)
print("wrote demo_arm.urdf")
