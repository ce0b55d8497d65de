"""Recorded whole-arm tasks: data model, file I/O, smoothing, and synthesis.

A task is an ordered sequence of frames, each holding the shoulder-relative
positions of m markers (marker m is the hand, i.e. the desired end-effector
path) and the (roll, pitch, yaw) orientation of the hand.  Tasks are stored
as JSON or CSV; see the schema in load_task/save_task.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .kinematics import DesignLimits, RobotDesign, arm_polyline, ee_euler, wrap_angle

DEFAULT_MARKER_COUNT = 3
DEFAULT_SANITY_RADIUS = DesignLimits().L_max


@dataclass(frozen=True)
class MarkerFrame:
    """One time frame: marker positions (m, 3) and hand orientation (3,)."""

    t: int
    positions: np.ndarray
    hand_euler: np.ndarray

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float)
        eul = np.asarray(self.hand_euler, dtype=float).reshape(3)
        if pos.ndim != 2 or pos.shape[1] != 3:
            raise ValueError(f"frame {self.t}: positions must be (m, 3), got {pos.shape}")
        if not np.all(np.isfinite(pos)) or not np.all(np.isfinite(eul)):
            raise ValueError(f"frame {self.t}: non-finite values")
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "hand_euler", eul)

    @property
    def m(self):
        return self.positions.shape[0]

    @property
    def hand_position(self):
        return self.positions[-1]


@dataclass(frozen=True)
class RecordedTask:
    """m marker paths plus hand orientations over T+1 frames."""

    frames: tuple[MarkerFrame, ...]
    m: int
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        frames = tuple(self.frames)
        if len(frames) < 2:
            raise ValueError("a task needs at least 2 frames (T >= 1)")
        if self.m < 1:
            raise ValueError("marker count must be >= 1")
        for fr in frames:
            if fr.m != self.m:
                raise ValueError(f"frame {fr.t} has {fr.m} markers, task declares {self.m}")
        radius = float(self.metadata.get("sanity_radius", DEFAULT_SANITY_RADIUS))
        worst = max(float(np.max(np.linalg.norm(fr.positions, axis=1))) for fr in frames)
        if worst > radius:
            raise ValueError(
                f"marker {worst:.3f} m from origin exceeds sanity radius {radius:.3f} m; "
                "check units (expected meters, shoulder-relative)"
            )
        object.__setattr__(self, "frames", frames)

    @property
    def T(self):
        return len(self.frames) - 1

    def positions_array(self):
        """All marker positions stacked, (T+1, m, 3)."""
        return np.stack([fr.positions for fr in self.frames])

    def hand_eulers(self):
        return np.stack([fr.hand_euler for fr in self.frames])

    def hand_path(self):
        """Path of the hand marker, (T+1, 3)."""
        return self.positions_array()[:, -1, :]


def _task_from_arrays(positions, eulers, metadata):
    frames = tuple(
        MarkerFrame(t=t, positions=positions[t], hand_euler=eulers[t]) for t in range(positions.shape[0])
    )
    return RecordedTask(frames=frames, m=positions.shape[1], metadata=dict(metadata))


def save_task(task: RecordedTask, dest, fmt="json"):
    """Write a task to a path or text stream as JSON or CSV."""
    if fmt == "json":
        doc = {
            "units": "m_rad",
            "m": task.m,
            "frames": [
                {
                    "t": fr.t,
                    "markers": [[float(v) for v in p] for p in fr.positions],
                    "hand_euler": [float(v) for v in fr.hand_euler],
                }
                for fr in task.frames
            ],
        }
        if task.metadata.get("scenario"):
            doc["scenario"] = task.metadata["scenario"]
        text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    elif fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf)
        header = ["t"]
        for i in range(1, task.m + 1):
            header += [f"m{i}x", f"m{i}y", f"m{i}z"]
        header += ["roll", "pitch", "yaw"]
        writer.writerow(header)
        for fr in task.frames:
            row = [fr.t] + [repr(float(v)) for v in fr.positions.reshape(-1)]
            row += [repr(float(v)) for v in fr.hand_euler]
            writer.writerow(row)
        text = buf.getvalue()
    else:
        raise ValueError(f"unknown task format {fmt!r}")

    if hasattr(dest, "write"):
        dest.write(text)
    else:
        with open(dest, "w", newline="") as fh:
            fh.write(text)


def load_task(source, fmt="json") -> RecordedTask:
    """Read and validate a task from a path, text stream, or string content.

    JSON schema: {"units": "m_rad", "m": int, "frames": [{"t": int,
    "markers": [[x, y, z], ...], "hand_euler": [roll, pitch, yaw]}]}.
    CSV: header t,m1x,m1y,m1z,...,roll,pitch,yaw, one row per frame,
    meters/radians implied.
    """
    if hasattr(source, "read"):
        text = source.read()
    else:
        source = str(source)
        if "\n" in source or source.lstrip().startswith(("{", "t,")):
            text = source
        else:
            with open(source) as fh:
                text = fh.read()

    if fmt == "json":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValueError(f"malformed task JSON: {exc}") from exc
        if "units" not in doc:
            raise ValueError("task document missing 'units' field")
        if doc["units"] != "m_rad":
            raise ValueError(f"unsupported units {doc['units']!r}, expected 'm_rad'")
        m = int(doc["m"])
        frames = []
        for k, fr in enumerate(doc["frames"]):
            markers = np.asarray(fr["markers"], dtype=float)
            if markers.ndim != 2 or markers.shape[0] != m:
                raise ValueError(f"frame {k} has {markers.shape[0] if markers.ndim == 2 else '?'} markers, expected {m}")
            frames.append(MarkerFrame(t=int(fr.get("t", k)), positions=markers, hand_euler=fr["hand_euler"]))
        meta = {"units": "m_rad"}
        if doc.get("scenario"):
            meta["scenario"] = doc["scenario"]
        return RecordedTask(frames=tuple(frames), m=m, metadata=meta)

    if fmt == "csv":
        reader = csv.reader(io.StringIO(text))
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError("empty CSV task") from None
        ncol = len(header)
        if ncol < 7 or (ncol - 4) % 3 != 0 or header[0] != "t" or header[-3:] != ["roll", "pitch", "yaw"]:
            raise ValueError("malformed CSV header; expected t,m1x,m1y,m1z,...,roll,pitch,yaw")
        m = (ncol - 4) // 3
        frames = []
        for row in reader:
            if not row:
                continue
            if len(row) != ncol:
                raise ValueError(f"CSV row has {len(row)} fields, expected {ncol}")
            vals = [float(v) for v in row[1:]]
            frames.append(
                MarkerFrame(
                    t=int(row[0]),
                    positions=np.asarray(vals[: 3 * m]).reshape(m, 3),
                    hand_euler=np.asarray(vals[3 * m :]),
                )
            )
        return RecordedTask(frames=tuple(frames), m=m, metadata={"units": "m_rad"})

    raise ValueError(f"unknown task format {fmt!r}")


def smooth_task(task: RecordedTask, window: int) -> RecordedTask:
    """Centered moving average over marker coordinates and hand orientation.

    Euler components are unwrapped over time before averaging and rewrapped
    after.  Endpoints use symmetrically shrunken windows, so window=1 is the
    identity.
    """
    if window < 1 or window % 2 == 0:
        raise ValueError("window must be a positive odd frame count")
    if window == 1:
        return task
    half = window // 2
    pos = task.positions_array()
    eul = np.unwrap(task.hand_eulers(), axis=0)
    n = pos.shape[0]
    out_pos = np.empty_like(pos)
    out_eul = np.empty_like(eul)
    for t in range(n):
        k = min(half, t, n - 1 - t)
        sl = slice(t - k, t + k + 1)
        out_pos[t] = pos[sl].mean(axis=0)
        out_eul[t] = eul[sl].mean(axis=0)
    return _task_from_arrays(out_pos, wrap_angle(out_eul), task.metadata)


def synthesize_task(
    truth: RobotDesign,
    joint_path,
    sigma_anchors,
    noise=0.0,
    rng=None,
    limits: DesignLimits | None = None,
    epsilon: float = math.radians(10.0),
    metadata=None,
) -> RecordedTask:
    """Generate a task a given arm would trace along a joint path.

    Marker i of frame t sits at normalized arc length sigma_anchors[i] of the
    arm at joint_path[t], plus optional per-coordinate uniform noise in
    [-noise, +noise]; the hand orientation is the arm's end-effector
    orientation.  The joint path must respect joint limits and the
    step-to-step continuity bound epsilon.
    """
    limits = limits or DesignLimits()
    anchors = np.asarray(sigma_anchors, dtype=float).reshape(-1)
    if anchors.size < 1 or np.any(np.diff(anchors) <= 0.0):
        raise ValueError("sigma anchors must be strictly increasing")
    if not (0.0 < anchors[0] and abs(anchors[-1] - 1.0) < 1e-12):
        raise ValueError("sigma anchors must lie in (0, 1] with the last anchor at 1 (hand = EE)")
    path = np.atleast_2d(np.asarray(joint_path, dtype=float))
    if path.shape[0] < 2:
        raise ValueError("joint path needs at least 2 frames")
    if path.shape[1] != truth.dof:
        raise ValueError(f"joint path width {path.shape[1]} does not match {truth.dof}-DOF design")
    if np.any(path < limits.q_min) or np.any(path > limits.q_max):
        raise ValueError("joint path violates joint limits")
    steps = np.linalg.norm(np.diff(path, axis=0), axis=1)
    if np.any(steps > epsilon + 1e-12):
        raise ValueError(f"joint path violates continuity bound {epsilon:.4f} rad (max step {steps.max():.4f})")

    rng = rng or np.random.default_rng(0)
    T1 = path.shape[0]
    positions = np.empty((T1, anchors.size, 3))
    eulers = np.empty((T1, 3))
    for t in range(T1):
        poly = arm_polyline(truth, path[t])
        for i, s in enumerate(anchors):
            positions[t, i] = poly.point_at(s)
        eulers[t] = ee_euler(truth, path[t])
    if noise > 0.0:
        positions = positions + rng.uniform(-noise, noise, size=positions.shape)
    meta = {"units": "m_rad"}
    if metadata:
        meta.update(metadata)
    return _task_from_arrays(positions, eulers, meta)


def link_fraction_anchors(design: RobotDesign, include_tool=True):
    """Anchors at the cumulative length fraction of each joint's link end.

    With m = dof (+ tool) markers these sit exactly at the arm's corners, so a
    task synthesized from them has marker chords lying on the links.
    """
    rows = list(design.links) + ([design.tool] if include_tool and design.tool is not None else [])
    lens = np.array([r.a + r.d for r in rows])
    total = lens.sum()
    if total <= 0:
        raise ValueError("design has zero length")
    cum = np.cumsum(lens) / total
    anchors = cum[lens > 0]
    anchors[-1] = 1.0
    return anchors


def sine_joint_path(n, frames, center=None, amplitude=0.5, cycles=1.0, phase=None, epsilon=math.radians(10.0)):
    """Smooth sinusoidal joint path scaled to honor the continuity bound."""
    center = np.zeros(n) if center is None else np.asarray(center, dtype=float)
    amplitude = np.broadcast_to(np.asarray(amplitude, dtype=float), (n,)).copy()
    phase = np.linspace(0.0, math.pi / 2, n) if phase is None else np.asarray(phase, dtype=float)
    ts = np.linspace(0.0, 2 * math.pi * cycles, frames)
    path = center[None, :] + amplitude[None, :] * np.sin(ts[:, None] + phase[None, :])
    steps = np.linalg.norm(np.diff(path, axis=0), axis=1)
    worst = steps.max()
    if worst > epsilon:
        shrink = 0.95 * epsilon / worst
        path = center[None, :] + shrink * amplitude[None, :] * np.sin(ts[:, None] + phase[None, :])
    return path
