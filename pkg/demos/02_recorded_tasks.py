"""Recorded tasks: synthesis from a known arm, noise, smoothing, file I/O.

Run:  python demos/02_recorded_tasks.py
"""

import io

import numpy as np

from armsynth import (
    DHLinkParams,
    RobotDesign,
    link_fraction_anchors,
    load_task,
    save_task,
    sine_joint_path,
    smooth_task,
    synthesize_task,
)

truth = RobotDesign(
    (
        DHLinkParams(0.4, 0.30, 0.0),
        DHLinkParams(-0.9, 0.25, 0.0),
        DHLinkParams(0.2, 0.28, 0.0),
    )
)

# A smooth joint trajectory under the 10-degree continuity bound; dense
# enough that the motion is slow against the smoothing window.
path = sine_joint_path(3, 120, center=[0.2, 0.5, -0.6], amplitude=[0.5, 0.4, 0.6], cycles=0.8)

# Markers ride at fixed arc fractions of the moving arm; link-end anchors put
# them exactly on the arm's corners, the way physical bands sit near joints.
anchors = link_fraction_anchors(truth)
print(f"marker anchors (arc fractions): {np.round(anchors, 3)}")

clean = synthesize_task(truth, path, anchors)
noisy = synthesize_task(truth, path, anchors, noise=0.004, rng=np.random.default_rng(7))
print(f"frames: {clean.T + 1}, markers per frame: {clean.m}")

# Moving-average smoothing knocks the synthetic jitter back down.
smoothed = smooth_task(noisy, window=5)
p_clean = clean.positions_array()
print(f"noisy  RMS deviation: {np.sqrt(np.mean((noisy.positions_array() - p_clean) ** 2)) * 1000:.2f} mm")
print(f"smooth RMS deviation: {np.sqrt(np.mean((smoothed.positions_array() - p_clean) ** 2)) * 1000:.2f} mm")

# Tasks round-trip through JSON (or CSV with fmt="csv").
buf = io.StringIO()
save_task(clean, buf)
again = load_task(io.StringIO(buf.getvalue()))
print(f"JSON round trip exact: {np.array_equal(again.positions_array(), p_clean)}")
print(f"document size: {len(buf.getvalue())} bytes")
