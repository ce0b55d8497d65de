"""URDF export of a synthesized arm.

Each joint row becomes one revolute joint about its frame's z axis.  The
constant part of row i, Trans_z(d).Trans_x(a).Rot_x(alpha), is the origin of
the NEXT joint, so joint 1 sits at the base with an identity origin and the
chain ends with a fixed end-effector joint carrying the last row's constants
(and the tool row, when present).  Visuals are thin cylinders along the d and
a segments.
"""

from __future__ import annotations

import math
import xml.etree.ElementTree as ET
from xml.dom import minidom

import numpy as np

from .kinematics import DesignLimits, RobotDesign, check_design_limits, rot_x, rot_z

_CYL_RADIUS = 0.01


def _origin_xml(parent, xyz=(0.0, 0.0, 0.0), rpy=(0.0, 0.0, 0.0)):
    ET.SubElement(parent, "origin", xyz=" ".join(f"{v:.12g}" for v in xyz), rpy=" ".join(f"{v:.12g}" for v in rpy))


def _cylinder_visual(link, length, along):
    """Thin cylinder of the given length along 'z' (offset) or 'x' (link)."""
    if length <= 0.0:
        return
    vis = ET.SubElement(link, "visual")
    if along == "z":
        _origin_xml(vis, xyz=(0.0, 0.0, length / 2))
    else:
        _origin_xml(vis, xyz=(length / 2, 0.0, 0.0), rpy=(0.0, math.pi / 2, 0.0))
    geom = ET.SubElement(vis, "geometry")
    ET.SubElement(geom, "cylinder", radius=f"{_CYL_RADIUS}", length=f"{length:.12g}")


def design_to_urdf(design: RobotDesign, limits: DesignLimits | None = None, name="synthesized_arm") -> str:
    """Render the design as URDF XML; raises on designs violating the limits."""
    limits = limits or DesignLimits()
    violations = check_design_limits(design, limits)
    if violations:
        raise ValueError("design violates limits: " + "; ".join(violations))

    robot = ET.Element("robot", name=name)
    ET.SubElement(robot, "link", name="base_link")
    parent = "base_link"
    prev_row = None  # constants of the previous row form this joint's origin
    for i, row in enumerate(design.links):
        child = f"link_{i + 1}"
        link = ET.SubElement(robot, "link", name=child)
        _cylinder_visual(link, row.d, "z")
        _cylinder_visual(link, row.a, "x")
        joint = ET.SubElement(robot, "joint", name=f"joint_{i + 1}", type="revolute")
        ET.SubElement(joint, "parent", link=parent)
        ET.SubElement(joint, "child", link=child)
        if prev_row is None:
            _origin_xml(joint)
        else:
            _origin_xml(joint, xyz=(prev_row.a, 0.0, prev_row.d), rpy=(prev_row.alpha, 0.0, 0.0))
        ET.SubElement(joint, "axis", xyz="0 0 1")
        ET.SubElement(
            joint,
            "limit",
            lower=f"{limits.q_min:.12g}",
            upper=f"{limits.q_max:.12g}",
            effort="100",
            velocity="3",
        )
        parent = child
        prev_row = row

    # fixed end-effector joint closing the chain with the last row's constants
    ee = ET.SubElement(robot, "link", name="ee_link")
    joint = ET.SubElement(robot, "joint", name="ee_fixed", type="fixed")
    ET.SubElement(joint, "parent", link=parent)
    ET.SubElement(joint, "child", link="ee_link")
    _origin_xml(joint, xyz=(prev_row.a, 0.0, prev_row.d), rpy=(prev_row.alpha, 0.0, 0.0))
    if design.tool is not None:
        tool_link = ET.SubElement(robot, "link", name="tool_link")
        _cylinder_visual(tool_link, design.tool.d, "z")
        _cylinder_visual(tool_link, design.tool.a, "x")
        tj = ET.SubElement(robot, "joint", name="tool_fixed", type="fixed")
        ET.SubElement(tj, "parent", link="ee_link")
        ET.SubElement(tj, "child", link="tool_link")
        _origin_xml(tj, xyz=(design.tool.a, 0.0, design.tool.d), rpy=(design.tool.alpha, 0.0, 0.0))

    raw = ET.tostring(robot, encoding="unicode")
    return minidom.parseString(raw).toprettyxml(indent="  ")


def _origin_matrix(el):
    xyz = [float(v) for v in el.get("xyz", "0 0 0").split()]
    rpy = [float(v) for v in el.get("rpy", "0 0 0").split()]
    T = np.eye(4)
    T[:3, 3] = xyz
    R = rot_z(rpy[2]) @ _rot_y4(rpy[1]) @ rot_x(rpy[0])
    T[:3, :3] = R[:3, :3]
    return T


def _rot_y4(b):
    c, s = math.cos(b), math.sin(b)
    T = np.eye(4)
    T[0, 0], T[0, 2] = c, s
    T[2, 0], T[2, 2] = -s, c
    return T


def compose_urdf_origins(urdf_xml: str) -> np.ndarray:
    """Product of all joint origin transforms in document order.

    With every revolute joint at zero this is the base-to-tool transform, so
    it must reproduce the design's forward kinematics at q = 0.
    """
    root = ET.fromstring(urdf_xml)
    T = np.eye(4)
    for joint in root.iter("joint"):
        origin = joint.find("origin")
        if origin is not None:
            T = T @ _origin_matrix(origin)
    return T
