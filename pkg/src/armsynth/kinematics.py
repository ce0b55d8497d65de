"""Serial-arm kinematics over a per-joint (twist, link length, offset) encoding.

Each revolute joint i contributes a homogeneous transform

    A_i(theta) = Rot_z(theta) . Trans_z(d_i) . Trans_x(a_i) . Rot_x(alpha_i)

(standard/distal convention) and the design of an n-joint arm is the ordered
list of the constant triples (alpha_i, a_i, d_i), optionally followed by a
fixed, non-actuated tool triple.  The module also provides the arm's
one-dimensional polyline representation (base to end-effector along the
d-then-a segments of every joint), normalized arc-length lookup on it, and
static design-limit checks.

Angles are radians, lengths are meters, everywhere.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi


def wrap_angle(x):
    """Wrap angles to the half-open interval (-pi, pi]."""
    w = np.mod(np.asarray(x, dtype=float), TWO_PI)
    w = np.where(w > math.pi, w - TWO_PI, w)
    return w if w.ndim else float(w)


@dataclass(frozen=True)
class DHLinkParams:
    """Constant design triple of one joint: twist alpha, length a, offset d."""

    alpha: float
    a: float
    d: float

    def as_array(self):
        return np.array([self.alpha, self.a, self.d], dtype=float)


@dataclass(frozen=True)
class DesignLimits:
    """Static bounds defining the admissible design box and length band."""

    alpha_min: float = -math.pi / 2
    alpha_max: float = math.pi / 2
    a_max: float = 0.5
    d_max: float = 0.5
    q_min: float = -math.pi
    q_max: float = math.pi
    L_min: float = 0.6
    L_max: float = 1.2
    epsilon_axis: float = 1e-3

    def __post_init__(self):
        if not self.L_min < self.L_max:
            raise ValueError("L_min must be smaller than L_max")

    def dimension_bounds(self, n, include_tool=False):
        """Per-dimension (low, high) arrays for an n-joint design vector."""
        rows = n + (1 if include_tool else 0)
        low = np.tile([self.alpha_min, 0.0, 0.0], rows)
        high = np.tile([self.alpha_max, self.a_max, self.d_max], rows)
        return low, high


@dataclass(frozen=True)
class RobotDesign:
    """An ordered chain of joint triples plus an optional fixed tool triple."""

    links: tuple[DHLinkParams, ...]
    tool: DHLinkParams | None = None

    def __post_init__(self):
        if len(self.links) < 1:
            raise ValueError("a design needs at least one joint")
        object.__setattr__(self, "links", tuple(self.links))

    @property
    def dof(self):
        return len(self.links)

    def to_vector(self, include_tool=False):
        """Flatten to the search vector (alpha_1, a_1, d_1, ..., [tool])."""
        rows = [lk.as_array() for lk in self.links]
        if include_tool:
            if self.tool is None:
                raise ValueError("design has no tool row to include")
            rows.append(self.tool.as_array())
        return np.concatenate(rows)

    @staticmethod
    def from_vector(vec, tool=None, includes_tool=False):
        """Rebuild a design from a flat vector; the inverse of to_vector."""
        vec = np.asarray(vec, dtype=float)
        if vec.size % 3 != 0 or vec.size == 0:
            raise ValueError(f"design vector length {vec.size} is not a positive multiple of 3")
        triples = vec.reshape(-1, 3)
        if includes_tool:
            if triples.shape[0] < 2:
                raise ValueError("vector with tool row must have at least 2 triples")
            tool = DHLinkParams(*triples[-1])
            triples = triples[:-1]
        return RobotDesign(tuple(DHLinkParams(*t) for t in triples), tool=tool)

    def to_json_dict(self):
        """Serialize as ordered rows of {alpha, a, d} plus optional tool row."""
        doc = {"rows": [{"alpha": lk.alpha, "a": lk.a, "d": lk.d} for lk in self.links]}
        if self.tool is not None:
            doc["tool"] = {"alpha": self.tool.alpha, "a": self.tool.a, "d": self.tool.d}
        return doc

    @staticmethod
    def from_json_dict(doc):
        rows = doc.get("rows")
        if not rows:
            raise ValueError("design document has no 'rows'")
        links = tuple(DHLinkParams(float(r["alpha"]), float(r["a"]), float(r["d"])) for r in rows)
        tool = None
        if doc.get("tool") is not None:
            t = doc["tool"]
            tool = DHLinkParams(float(t["alpha"]), float(t["a"]), float(t["d"]))
        return RobotDesign(links, tool=tool)

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    @staticmethod
    def load(path):
        with open(path) as fh:
            return RobotDesign.from_json_dict(json.load(fh))


@dataclass(frozen=True)
class EEPose:
    """End-effector position and (roll, pitch, yaw) orientation."""

    position: np.ndarray
    euler: np.ndarray
    gimbal_lock: bool = False


@dataclass(frozen=True)
class ArmPolyline:
    """Piecewise-linear arm representation from base to end-effector."""

    points: np.ndarray
    cumulative_lengths: np.ndarray

    @property
    def total_length(self):
        return float(self.cumulative_lengths[-1])

    def point_at(self, sigma):
        """Position at normalized arc length sigma in [0, 1]."""
        sigma = float(sigma)
        if not 0.0 <= sigma <= 1.0:
            raise ValueError(f"sigma={sigma} outside [0, 1]")
        L = self.total_length
        if L <= 0.0:
            return self.points[0].copy()
        s = sigma * L
        out = np.empty(3)
        for c in range(3):
            out[c] = np.interp(s, self.cumulative_lengths, self.points[:, c])
        return out


def rot_x(a):
    c, s = math.cos(a), math.sin(a)
    T = np.eye(4)
    T[1, 1], T[1, 2] = c, -s
    T[2, 1], T[2, 2] = s, c
    return T


def rot_z(t):
    c, s = math.cos(t), math.sin(t)
    T = np.eye(4)
    T[0, 0], T[0, 1] = c, -s
    T[1, 0], T[1, 1] = s, c
    return T


def trans_x(a):
    T = np.eye(4)
    T[0, 3] = a
    return T


def trans_z(d):
    T = np.eye(4)
    T[2, 3] = d
    return T


def dh_transform(phi: DHLinkParams, theta: float) -> np.ndarray:
    """Joint transform Rot_z(theta).Trans_z(d).Trans_x(a).Rot_x(alpha), closed form."""
    ct, st = math.cos(theta), math.sin(theta)
    ca, sa = math.cos(phi.alpha), math.sin(phi.alpha)
    a, d = phi.a, phi.d
    return np.array(
        [
            [ct, -st * ca, st * sa, a * ct],
            [st, ct * ca, -ct * sa, a * st],
            [0.0, sa, ca, d],
            [0.0, 0.0, 0.0, 1.0],
        ]
    )


def _check_q(design, q):
    q = np.asarray(q, dtype=float).reshape(-1)
    if q.size != design.dof:
        raise ValueError(f"joint vector has {q.size} entries for a {design.dof}-DOF design")
    return q


def chain_transform(design: RobotDesign, q) -> np.ndarray:
    """Base-to-end-effector homogeneous transform (tool included if present)."""
    q = _check_q(design, q)
    T = np.eye(4)
    for phi, qi in zip(design.links, q):
        T = T @ dh_transform(phi, qi)
    if design.tool is not None:
        T = T @ dh_transform(design.tool, 0.0)
    return T


def rotation_to_euler(R):
    """Extract (roll, pitch, yaw) with R = Rot_z(yaw).Rot_y(pitch).Rot_x(roll).

    Returns (euler, gimbal_lock).  At |pitch| = pi/2 the roll is set to zero
    and the flag is raised.
    """
    sy = -R[2, 0]
    if abs(sy) >= 1.0 - 1e-12:
        pitch = math.copysign(math.pi / 2, sy)
        # Only yaw - sign(sy)*roll is observable; report it all as yaw.
        yaw = math.atan2(-R[0, 1], R[1, 1])
        return np.array([0.0, pitch, wrap_angle(yaw)]), True
    pitch = math.asin(min(1.0, max(-1.0, sy)))
    roll = math.atan2(R[2, 1], R[2, 2])
    yaw = math.atan2(R[1, 0], R[0, 0])
    return wrap_angle(np.array([roll, pitch, yaw])), False


def euler_to_rotation(euler):
    """Inverse of rotation_to_euler: compose Rot_z(yaw).Rot_y(pitch).Rot_x(roll)."""
    roll, pitch, yaw = (float(v) for v in euler)
    return rot_z(yaw)[:3, :3] @ _rot_y3(pitch) @ rot_x(roll)[:3, :3]


def _rot_y3(b):
    c, s = math.cos(b), math.sin(b)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def forward_kinematics(design: RobotDesign, q) -> EEPose:
    """End-effector pose for joint vector q."""
    T = chain_transform(design, q)
    euler, locked = rotation_to_euler(T[:3, :3])
    return EEPose(position=T[:3, 3].copy(), euler=euler, gimbal_lock=locked)


def ee_euler(design: RobotDesign, q) -> np.ndarray:
    """Orientation (roll, pitch, yaw) of the end-effector, wrapped to (-pi, pi]."""
    return forward_kinematics(design, q).euler


def total_length(design: RobotDesign) -> float:
    """Sum of all a and d entries over joints and tool."""
    L = sum(lk.a + lk.d for lk in design.links)
    if design.tool is not None:
        L += design.tool.a + design.tool.d
    return float(L)


def arm_polyline(design: RobotDesign, q) -> ArmPolyline:
    """Polyline through every d-then-a segment, zero-length segments skipped."""
    q = _check_q(design, q)
    pts = _polyline_points_batch(design, q[None, :])[0]
    keep = [0]
    for i in range(1, pts.shape[0]):
        if np.linalg.norm(pts[i] - pts[keep[-1]]) > 0.0:
            keep.append(i)
    points = pts[keep]
    seg = np.linalg.norm(np.diff(points, axis=0), axis=1)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    return ArmPolyline(points=points, cumulative_lengths=cum)


def arm_point(design: RobotDesign, q, sigma) -> np.ndarray:
    """Point at normalized arc length sigma along the arm at configuration q."""
    return arm_polyline(design, q).point_at(sigma)


def check_design_limits(design: RobotDesign, limits: DesignLimits) -> list[str]:
    """All violated static constraints; an empty list means the design is admissible."""
    violations = []
    for i, lk in enumerate(design.links):
        if not limits.alpha_min <= lk.alpha <= limits.alpha_max:
            violations.append(f"alpha[{i}]={lk.alpha:.4f} outside [{limits.alpha_min:.4f}, {limits.alpha_max:.4f}]")
        if not 0.0 <= lk.a <= limits.a_max:
            violations.append(f"a[{i}]={lk.a:.4f} outside [0, {limits.a_max:.4f}]")
        if not 0.0 <= lk.d <= limits.d_max:
            violations.append(f"d[{i}]={lk.d:.4f} outside [0, {limits.d_max:.4f}]")
        if i >= 1 and abs(lk.alpha) < limits.epsilon_axis and lk.a < limits.epsilon_axis:
            violations.append(f"joints {i - 1} and {i} concentric (|alpha|, a < {limits.epsilon_axis})")
    L = total_length(design)
    if not limits.L_min < L < limits.L_max:
        violations.append(f"total length {L:.4f} outside ({limits.L_min}, {limits.L_max})")
    return violations


def joint_limits_ok(q, limits: DesignLimits) -> bool:
    q = np.asarray(q, dtype=float)
    return bool(np.all(q >= limits.q_min) and np.all(q <= limits.q_max))


# ---------------------------------------------------------------------------
# Batched internals used by the fitness evaluation and the inner IK solver.
# The polyline keeps a fixed layout of 2*(n_rows) segments (d then a for every
# joint and for the tool), zero-length segments included, so that a whole
# swarm of joint vectors can be processed with one set of array operations.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DesignArrays:
    """Design constants unpacked to arrays, precomputed for batched FK.

    Polyline segment lengths are design constants (|d_i| and |a_i|), so the
    emit flags mark which segments are nonzero and worth materializing.
    """

    alpha: np.ndarray
    a: np.ndarray
    d: np.ndarray
    has_tool: bool
    total_length: float
    emit_d: np.ndarray
    emit_a: np.ndarray

    @staticmethod
    def from_design(design: RobotDesign):
        rows = list(design.links) + ([design.tool] if design.tool is not None else [])
        a = np.array([r.a for r in rows])
        d = np.array([r.d for r in rows])
        emit_d = d != 0.0
        emit_a = a != 0.0
        if not emit_d.any() and not emit_a.any():
            emit_a = emit_a.copy()
            emit_a[-1] = True  # keep one (degenerate) segment so callers see a polyline
        return DesignArrays(
            alpha=np.array([r.alpha for r in rows]),
            a=a,
            d=d,
            has_tool=design.tool is not None,
            total_length=total_length(design),
            emit_d=emit_d,
            emit_a=emit_a,
        )

    @property
    def n_points(self):
        return 1 + int(np.sum(self.emit_d)) + int(np.sum(self.emit_a))


def _polyline_points_batch(design: RobotDesign, q_batch) -> np.ndarray:
    """Fixed-layout polyline points for a batch of joint vectors.

    Returns (B, 2*rows + 1, 3) where rows = dof (+1 with a tool); point 0 is
    the base, then per row the post-d and post-a points.
    """
    da = DesignArrays.from_design(design)
    return fk_batch(da, np.asarray(q_batch, dtype=float))[0]


def fk_batch(da: DesignArrays, q_batch, want_points=True):
    """Batched forward kinematics: polyline points and final transforms.

    Returns (points, T) with points (B, n_points, 3) covering the nonzero
    d-then-a segments of every row, and T (B, 4, 4); points is None when
    want_points is False.  The point layout is fixed across the batch.
    """
    q_batch = np.atleast_2d(np.asarray(q_batch, dtype=float))
    B = q_batch.shape[0]
    rows = da.alpha.size
    if da.has_tool:
        q_all = np.concatenate([q_batch, np.zeros((B, 1))], axis=1)
    else:
        q_all = q_batch
    if q_all.shape[1] != rows:
        raise ValueError("joint batch width does not match design")

    pts = np.empty((B, da.n_points, 3)) if want_points else None
    col = 1
    if want_points:
        pts[:, 0] = 0.0
    T = np.broadcast_to(np.eye(4), (B, 4, 4)).copy()
    for i in range(rows):
        ct, st = np.cos(q_all[:, i]), np.sin(q_all[:, i])
        ca, sa = math.cos(da.alpha[i]), math.sin(da.alpha[i])
        a, d = da.a[i], da.d[i]
        if want_points and (da.emit_d[i] or da.emit_a[i]):
            origin = T[:, :3, 3]
            if da.emit_d[i]:
                pts[:, col] = origin + d * T[:, :3, 2]
                col += 1
            if da.emit_a[i]:
                # x axis of the frame after the joint rotation
                x_rot = T[:, :3, 0] * ct[:, None] + T[:, :3, 1] * st[:, None]
                pts[:, col] = origin + d * T[:, :3, 2] + a * x_rot
                col += 1
        A = np.empty((B, 4, 4))
        A[:, 0, 0], A[:, 0, 1], A[:, 0, 2], A[:, 0, 3] = ct, -st * ca, st * sa, a * ct
        A[:, 1, 0], A[:, 1, 1], A[:, 1, 2], A[:, 1, 3] = st, ct * ca, -ct * sa, a * st
        A[:, 2, 0], A[:, 2, 1], A[:, 2, 2], A[:, 2, 3] = 0.0, sa, ca, d
        A[:, 3, :3], A[:, 3, 3] = 0.0, 1.0
        T = T @ A
    return pts, T


def ee_positions_batch(da: DesignArrays, q_batch) -> np.ndarray:
    return fk_batch(da, q_batch, want_points=False)[1][:, :3, 3]


def euler_batch(R):
    """Batched (roll, pitch, yaw) extraction from rotation blocks (B, 3, 3)."""
    sy = -R[:, 2, 0]
    locked = np.abs(sy) >= 1.0 - 1e-12
    pitch = np.arcsin(np.clip(sy, -1.0, 1.0))
    roll = np.arctan2(R[:, 2, 1], R[:, 2, 2])
    yaw = np.arctan2(R[:, 1, 0], R[:, 0, 0])
    if np.any(locked):
        yaw = np.where(locked, np.arctan2(-R[:, 0, 1], R[:, 1, 1]), yaw)
        roll = np.where(locked, 0.0, roll)
        pitch = np.where(locked, np.copysign(math.pi / 2, sy), pitch)
    return wrap_angle(np.stack([roll, pitch, yaw], axis=1))
