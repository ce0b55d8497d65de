"""Cost hierarchy for evaluating an arm design against a recorded task.

From the bottom up:

* marker-to-arm association: the monotone normalized-arc coordinates sigma
  that minimize the weighted squared marker distances to the arm polyline,
  solved exactly (per-segment closed-form projections combined by an ordered
  assignment search with within-segment isotonic pooling);
* per-frame cost g: weighted RMSE of marker distances plus a weighted hand
  orientation residual;
* per-frame fitness G: the minimum of g over feasible joint vectors, i.e. a
  multi-point inverse-kinematics solve (delegated to the swarm solver in
  optimize);
* path fitness f: mean of G over all frames, solved sequentially under the
  joint-continuity bound, with a start-frame reachability gate;
* area penalty E: mean distance between the arm and the straight lines
  through consecutive recorded markers, discouraging over-long arms;
* combined robot fitness lambda_f * f + lambda_E * E, with an infinite
  sentinel for invalid designs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from .demonstration import MarkerFrame, RecordedTask
from .kinematics import (
    DesignArrays,
    DesignLimits,
    RobotDesign,
    check_design_limits,
    euler_batch,
    fk_batch,
    total_length,
    wrap_angle,
)

_TINY = 1e-15
_ZERO_WEIGHT_TIEBREAK = 1e-9


@dataclass(frozen=True)
class FitnessWeights:
    """Orientation weight w0, per-marker position weights, and the two
    combination weights of the outer objective."""

    w0: float
    w: np.ndarray
    lambda_f: float = 15.0
    lambda_E: float = 5.0

    def __post_init__(self):
        w = np.asarray(self.w, dtype=float).reshape(-1)
        object.__setattr__(self, "w", w)
        if self.w0 < 0 or np.any(w < 0) or self.lambda_f < 0 or self.lambda_E < 0:
            raise ValueError("weights must be nonnegative")
        if abs(self.w0 + w.sum() - 1.0) > 1e-9:
            raise ValueError(f"w0 + sum(w) = {self.w0 + w.sum():.12f}, expected 1")

    @property
    def m(self):
        return self.w.size

    def normalized(self):
        s = self.w0 + self.w.sum()
        return replace(self, w0=self.w0 / s, w=self.w / s)

    @staticmethod
    def scenario_i():
        """Position-only weighting used for the packaging-style task."""
        return FitnessWeights(w0=0.0, w=np.array([1 / 6, 1 / 3, 1 / 2]))

    @staticmethod
    def scenario_ii():
        """Orientation-tracking weighting used for the welding-style task."""
        return FitnessWeights(w0=0.2, w=np.array([0.0, 0.1, 0.7]))

    @staticmethod
    def uniform(m, w0=0.0):
        return FitnessWeights(w0=w0, w=np.full(m, (1.0 - w0) / m))


@dataclass(frozen=True)
class SigmaAssignment:
    """Strictly increasing normalized arc coordinates, one per marker."""

    sigma: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.sigma, dtype=float).reshape(-1)
        if np.any(s < -1e-12) or np.any(s > 1.0 + 1e-12):
            raise ValueError("sigma values must lie in [0, 1]")
        if s.size > 1 and np.any(np.diff(s) <= 0.0):
            raise ValueError("sigma values must be strictly increasing")
        object.__setattr__(self, "sigma", s)


@dataclass(frozen=True)
class IKSettings:
    """Inner multi-point IK settings: continuity bound, start gate, and the
    joint-space swarm budgets.

    The gate solver gets its own budget because its verdict decides validity
    and it runs once per design, while the frame solver runs per frame and is
    seeded by the previous solution.
    """

    epsilon: float = math.radians(10.0)
    ee_gate: float = 1e-3
    particles: int = 40
    iterations: int = 60
    stall_iterations: int = 8
    stall_tol: float = 1e-8
    polish_steps: int = 12
    continuity_norm: str = "euclidean"
    gate_particles: int = 40
    gate_iterations: int = 60
    gate_restarts: int = 2

    def __post_init__(self):
        if self.epsilon <= 0 or self.ee_gate <= 0:
            raise ValueError("epsilon and ee_gate must be positive")
        if self.continuity_norm not in ("euclidean", "per-joint"):
            raise ValueError("continuity_norm must be 'euclidean' or 'per-joint'")


@dataclass
class FitnessReport:
    """Everything one design evaluation produced."""

    valid: bool
    reason: str | None = None
    temporal: np.ndarray | None = None
    path_fitness: float | None = None
    area: float | None = None
    combined: float = math.inf
    joint_path: np.ndarray | None = None

    def to_json_dict(self):
        doc = {
            "valid": bool(self.valid),
            "reason": self.reason,
            "f_mm": None if self.path_fitness is None else 1000.0 * self.path_fitness,
            "E_mm": None if self.area is None else 1000.0 * self.area,
            "combined": None if not math.isfinite(self.combined) else self.combined,
            "temporal_mm": None if self.temporal is None else [1000.0 * float(g) for g in self.temporal],
            "joint_path": None if self.joint_path is None else [[float(v) for v in q] for q in self.joint_path],
        }
        return doc


def format_report(report: FitnessReport) -> str:
    """One-glance summary; path/area in mm, combined in the raw objective units."""
    if not report.valid:
        return f"invalid design: {report.reason}"
    return (
        f"f = {1000.0 * report.path_fitness:.2f} mm, "
        f"E = {1000.0 * report.area:.2f} mm, "
        f"combined = {report.combined:.2f}"
    )


# ---------------------------------------------------------------------------
# Marker-to-arm projection.
#
# The arm polyline makes the squared distance of a marker to the point at a
# given arc coordinate piecewise quadratic (one convex piece per segment), so
# the monotone weighted least-squares association is solved exactly by
# searching over ordered marker-to-segment assignments; markers that share a
# segment are pooled by weighted isotonic regression there (clipping the
# pooled values to the segment is exact because the box is common).  The
# m <= 3 case, the only one the evaluation loop hits with default data, is
# fully vectorized over candidate joint vectors; larger m falls back to a
# per-candidate dynamic program over (marker, segment) run decompositions.
# ---------------------------------------------------------------------------


@lru_cache(maxsize=64)
def _monotone_assignments(m, K):
    """All non-decreasing maps of m markers onto K segments, shape (R, m)."""
    out = []

    def rec(prefix, start):
        if len(prefix) == m:
            out.append(prefix)
            return
        for k in range(start, K):
            rec(prefix + (k,), k)

    rec((), 0)
    return np.array(out, dtype=np.intp)


def _segment_geometry(points):
    """Segment start/direction/length arrays for fixed-layout polylines."""
    A = points[:, :-1, :]
    U = points[:, 1:, :] - A
    len2 = np.einsum("bkc,bkc->bk", U, U)
    seg_len = np.sqrt(len2)
    cum = np.concatenate([np.zeros((points.shape[0], 1)), np.cumsum(seg_len, axis=1)], axis=1)
    return A, U, len2, seg_len, cum


def _marker_quadratics(A, U, len2, markers):
    """Per (candidate, marker, segment): unclamped parameter y, clamped
    squared distance d2_seg, and squared distance to the infinite line."""
    rel = markers[None, :, None, :] - A[:, None, :, :]
    dot = np.einsum("bmkc,bkc->bmk", rel, U)
    y = dot / np.maximum(len2, _TINY)[:, None, :]
    tc = np.clip(y, 0.0, 1.0)
    diff = rel - tc[..., None] * U[:, None, :, :]
    d2_seg = np.einsum("bmkc,bmkc->bmk", diff, diff)
    d2_line = np.maximum(d2_seg - len2[:, None, :] * (tc - y) ** 2, 0.0)
    return y, d2_seg, d2_line


def _pava2(y1, y2, u1, u2):
    viol = y1 > y2
    p = (u1 * y1 + u2 * y2) / np.maximum(u1 + u2, _TINY)
    return np.where(viol, p, y1), np.where(viol, p, y2)


def _pava3(y1, y2, y3, u1, u2, u3):
    p12 = (u1 * y1 + u2 * y2) / np.maximum(u1 + u2, _TINY)
    p23 = (u2 * y2 + u3 * y3) / np.maximum(u2 + u3, _TINY)
    p123 = (u1 * y1 + u2 * y2 + u3 * y3) / np.maximum(u1 + u2 + u3, _TINY)
    m12 = y1 > y2
    # branch y1 <= y2
    m23 = y2 > y3
    need123a = m23 & (p23 < y1)
    t1a = np.where(need123a, p123, y1)
    t2a = np.where(m23, np.where(need123a, p123, p23), y2)
    t3a = np.where(m23, np.where(need123a, p123, p23), y3)
    # branch y1 > y2 (1 and 2 pooled first)
    m3 = y3 < p12
    t1b = np.where(m3, p123, p12)
    t2b = t1b
    t3b = np.where(m3, p123, y3)
    return (
        np.where(m12, t1b, t1a),
        np.where(m12, t2b, t2a),
        np.where(m12, t3b, t3a),
    )


def _project_batch_small(y, d2_line, len2, seg_len, cum, w_true, w_eff):
    """Exact monotone projection for m <= 3, vectorized over candidates.

    Returns (sigma (B, m), weighted position SSE (B,)).
    """
    B, m, K = y.shape
    asg = _monotone_assignments(m, K)
    ys = [np.take(y[:, i, :], asg[:, i], axis=1) for i in range(m)]
    l2 = [np.take(len2, asg[:, i], axis=1) for i in range(m)]
    dl = [np.take(d2_line[:, i, :], asg[:, i], axis=1) for i in range(m)]
    u = [w_eff[i] * l2[i] for i in range(m)]

    if m == 1:
        ts = [np.clip(ys[0], 0.0, 1.0)]
    elif m == 2:
        same = (asg[:, 0] == asg[:, 1])[None, :]
        t1p, t2p = _pava2(ys[0], ys[1], u[0], u[1])
        t1 = np.where(same, t1p, ys[0])
        t2 = np.where(same, t2p, ys[1])
        ts = [np.clip(t1, 0.0, 1.0), np.clip(t2, 0.0, 1.0)]
    else:
        g12 = (asg[:, 0] == asg[:, 1])[None, :]
        g23 = (asg[:, 1] == asg[:, 2])[None, :]
        pav1, pav2, pav3 = _pava3(ys[0], ys[1], ys[2], u[0], u[1], u[2])
        c2t1, c2t2 = _pava2(ys[0], ys[1], u[0], u[1])
        c3t2, c3t3 = _pava2(ys[1], ys[2], u[1], u[2])
        t1 = np.where(g12, np.where(g23, pav1, c2t1), ys[0])
        t2 = np.where(g12, np.where(g23, pav2, c2t2), np.where(g23, c3t2, ys[1]))
        t3 = np.where(g23, np.where(g12, pav3, c3t3), ys[2])
        ts = [np.clip(t1, 0.0, 1.0), np.clip(t2, 0.0, 1.0), np.clip(t3, 0.0, 1.0)]

    cost = np.zeros_like(ts[0])
    for i in range(m):
        cost += w_true[i] * (l2[i] * (ts[i] - ys[i]) ** 2 + dl[i])
    best = np.argmin(cost, axis=1)
    rows = np.arange(B)
    L = np.maximum(cum[:, -1], _TINY)
    sigma = np.empty((B, m))
    for i in range(m):
        k = asg[best, i]
        sigma[:, i] = (cum[rows, k] + ts[i][rows, best] * seg_len[rows, k]) / L
    return sigma, cost[rows, best]


def _pava(y, w):
    """Weighted isotonic regression (nondecreasing) by pool-adjacent-violators."""
    vals, wts, cnts = [], [], []
    for yi, wi in zip(y, w):
        vals.append(yi)
        wts.append(max(wi, _TINY))
        cnts.append(1)
        while len(vals) > 1 and vals[-2] > vals[-1]:
            wtot = wts[-2] + wts[-1]
            vals[-2] = (vals[-2] * wts[-2] + vals[-1] * wts[-1]) / wtot
            wts[-2] = wtot
            cnts[-2] += cnts[-1]
            vals.pop(), wts.pop(), cnts.pop()
    out = []
    for v, c in zip(vals, cnts):
        out.extend([v] * c)
    return out


def _project_reference(y, d2_line, len2, seg_len, cum, w_true, w_eff):
    """Exact monotone projection for one candidate and any m.

    Dynamic program over runs of consecutive markers sharing a segment;
    y/d2_line are (m, K), len2/seg_len (K,), cum (K+1,).
    """
    m, K = y.shape
    INF = math.inf

    def run_cost(g, i, k):
        ys = y[g : i + 1, k]
        us = [w_eff[j] * len2[k] for j in range(g, i + 1)]
        ts = np.clip(_pava(list(ys), us), 0.0, 1.0)
        c = 0.0
        for idx, j in enumerate(range(g, i + 1)):
            c += w_true[j] * (len2[k] * (ts[idx] - ys[idx]) ** 2 + d2_line[j, k])
        return c, ts

    dp = np.full((m, K), INF)
    back = {}
    for i in range(m):
        for k in range(K):
            for g in range(i + 1):
                if g == 0:
                    prev = 0.0
                else:
                    prev = _prefix_min(dp[g - 1], k)
                if not math.isfinite(prev):
                    continue
                c, ts = run_cost(g, i, k)
                if prev + c < dp[i, k]:
                    dp[i, k] = prev + c
                    back[(i, k)] = (g, ts)
    k_best = int(np.argmin(dp[m - 1]))
    total = dp[m - 1, k_best]
    sigma = np.empty(m)
    L = max(cum[-1], _TINY)
    i, k = m - 1, k_best
    while i >= 0:
        g, ts = back[(i, k)]
        for idx, j in enumerate(range(g, i + 1)):
            sigma[j] = (cum[k] + ts[idx] * seg_len[k]) / L
        i = g - 1
        if i >= 0:
            k = int(np.argmin(np.where(np.arange(K) < k, dp[i], INF)))
    return sigma, float(total)


def _prefix_min(row, k):
    return float(np.min(row[:k])) if k > 0 else math.inf


def _strictify(sigma, eps=1e-12):
    """Nudge a nondecreasing sigma row-set into strictly increasing order."""
    s = np.array(sigma, dtype=float, copy=True)
    if s.ndim == 1:
        s = s[None, :]
    m = s.shape[1]
    for i in range(1, m):
        s[:, i] = np.maximum(s[:, i], s[:, i - 1] + eps)
    overshoot = s[:, -1] > 1.0
    if np.any(overshoot):
        s[overshoot, -1] = 1.0
        for i in range(m - 2, -1, -1):
            s[overshoot, i] = np.minimum(s[overshoot, i], s[overshoot, i + 1] - eps)
    return s


def project_markers_batch(points, markers, w_true, w_eff=None):
    """Monotone projection of one frame's markers onto a batch of polylines.

    points: (B, P, 3) fixed-layout polylines; markers: (m, 3).
    Returns (sigma (B, m) strictly increasing, weighted position SSE (B,)).
    """
    markers = np.asarray(markers, dtype=float)
    w_true = np.asarray(w_true, dtype=float)
    if w_eff is None:
        w_eff = np.where(w_true > 0.0, w_true, _ZERO_WEIGHT_TIEBREAK)
    A, U, len2, seg_len, cum = _segment_geometry(points)
    y, _, d2_line = _marker_quadratics(A, U, len2, markers)
    m = markers.shape[0]
    if m <= 3:
        sigma, sse = _project_batch_small(y, d2_line, len2, seg_len, cum, w_true, w_eff)
    else:
        B = points.shape[0]
        sigma = np.empty((B, m))
        sse = np.empty(B)
        for b in range(B):
            sigma[b], sse[b] = _project_reference(
                y[b], d2_line[b], len2[b], seg_len[b], cum[b], w_true, w_eff
            )
    return _strictify(sigma), sse


def project_markers(design: RobotDesign, q, frame: MarkerFrame, weights: FitnessWeights | None = None) -> SigmaAssignment:
    """Monotone arc coordinates minimizing the weighted squared marker distances."""
    weights = weights or FitnessWeights.uniform(frame.m)
    da = DesignArrays.from_design(design)
    pts, _ = fk_batch(da, np.asarray(q, dtype=float)[None, :])
    sigma, _ = project_markers_batch(pts, frame.positions, weights.w)
    return SigmaAssignment(sigma=sigma[0])


# ---------------------------------------------------------------------------
# Frame-level costs.
# ---------------------------------------------------------------------------


def frame_cost_batch(da: DesignArrays, q_batch, frame: MarkerFrame, weights: FitnessWeights):
    """Per-frame cost g for a batch of joint vectors; returns (g (B,), sigma (B, m))."""
    q_batch = np.atleast_2d(np.asarray(q_batch, dtype=float))
    want_euler = weights.w0 > 0.0
    pts, T = fk_batch(da, q_batch)
    sigma, sse = project_markers_batch(pts, frame.positions, weights.w)
    g = np.sqrt(sse) / frame.m
    if want_euler:
        eul = euler_batch(T[:, :3, :3])
        resid = wrap_angle(eul - frame.hand_euler[None, :])
        g = g + weights.w0 * np.linalg.norm(resid, axis=1)
    return g, sigma


def temporal_cost(design: RobotDesign, q, frame: MarkerFrame, sigma, weights: FitnessWeights) -> float:
    """Weighted RMSE of marker distances at the given arc coordinates, plus the
    orientation residual term."""
    s = sigma.sigma if isinstance(sigma, SigmaAssignment) else np.asarray(sigma, dtype=float)
    if s.size != frame.m:
        raise ValueError("sigma length must equal the marker count")
    from .kinematics import arm_polyline

    poly = arm_polyline(design, q)
    sse = 0.0
    for i in range(frame.m):
        diff = poly.point_at(s[i]) - frame.positions[i]
        sse += weights.w[i] * float(diff @ diff)
    g = math.sqrt(sse) / frame.m
    if weights.w0 > 0.0:
        from .kinematics import ee_euler

        resid = wrap_angle(ee_euler(design, q) - frame.hand_euler)
        g += weights.w0 * float(np.linalg.norm(resid))
    return g


def temporal_fitness(
    design: RobotDesign,
    frame: MarkerFrame,
    q_prev,
    settings: IKSettings,
    weights: FitnessWeights,
    limits: DesignLimits | None = None,
    rng=None,
    seeds=(),
):
    """Best per-frame cost over feasible joint vectors; the multi-point IK solve.

    With q_prev given, the search is restricted to the continuity
    neighborhood around it (and seeded there); at the first frame (q_prev is
    None) the full joint box is searched.  Returns (G, q).
    """
    from . import optimize

    limits = limits or DesignLimits()
    rng = rng if rng is not None else np.random.default_rng(0)
    cost, q = optimize.inner_ik_solve(design, frame, q_prev, settings, rng, weights=weights, limits=limits, seeds=seeds)
    if not math.isfinite(cost):
        raise ArithmeticError("inner IK solver diverged to a non-finite cost")
    return cost, q


def path_fitness(
    design: RobotDesign,
    task: RecordedTask,
    settings: IKSettings,
    weights: FitnessWeights,
    limits: DesignLimits | None = None,
    rng=None,
) -> FitnessReport:
    """Mean per-frame fitness over the whole task, solved sequentially.

    Frame 0 is gated: if the arm cannot place its end-effector at the hand's
    first position within the gate tolerance, the rest of the path is not
    computed and the report is invalid with reason 'unreachable-start'.
    """
    from . import optimize

    limits = limits or DesignLimits()
    rng = rng if rng is not None else np.random.default_rng(0)

    hand0 = task.frames[0].hand_position
    reach_dist, q_reach = optimize.reach_ik(design, hand0, settings, rng, limits=limits)
    if reach_dist > settings.ee_gate:
        return FitnessReport(valid=False, reason="unreachable-start")

    T1 = task.T + 1
    temporal = np.empty(T1)
    joint_path = np.empty((T1, design.dof))
    q_prev = None
    # the free t=0 solve picks the branch the whole path commits to, so it
    # gets double effort
    start_settings = replace(settings, particles=2 * settings.particles, polish_steps=2 * settings.polish_steps)
    for t, frame in enumerate(task.frames):
        seeds = (q_reach,) if t == 0 else ()
        frame_settings = start_settings if t == 0 else settings
        try:
            G, q = temporal_fitness(design, frame, q_prev, frame_settings, weights, limits=limits, rng=rng, seeds=seeds)
        except ArithmeticError:
            return FitnessReport(valid=False, reason="solver-divergence")
        temporal[t] = G
        joint_path[t] = q
        q_prev = q
    f = float(temporal.mean())
    return FitnessReport(valid=True, temporal=temporal, path_fitness=f, joint_path=joint_path)


def _point_line_distances(samples, p0, p1):
    u = p1 - p0
    nu2 = float(u @ u)
    rel = samples - p0
    if nu2 < _TINY:
        return np.linalg.norm(rel, axis=1)
    proj = (rel @ u) / nu2
    return np.linalg.norm(rel - proj[:, None] * u[None, :], axis=1)


def area_penalty(
    design: RobotDesign,
    task: RecordedTask,
    joint_path,
    delta_m: float = 0.01,
    weights: FitnessWeights | None = None,
) -> float:
    """Mean arm-to-marker-line distance, sampled every delta_m along the arm.

    Per frame the arm is split at the solved arc coordinates into one part
    per marker; samples in part i are measured against the infinite line
    through markers i-1 and i, with the base origin acting as marker 0 and a
    point-distance fallback when the two bounding markers coincide.
    """
    joint_path = np.atleast_2d(np.asarray(joint_path, dtype=float))
    if joint_path.shape[0] != task.T + 1:
        raise ValueError("joint path must have one configuration per frame")
    weights = weights or FitnessWeights.uniform(task.m)
    da = DesignArrays.from_design(design)

    frame_means = []
    for t, frame in enumerate(task.frames):
        pts, _ = fk_batch(da, joint_path[t][None, :])
        sigma, _ = project_markers_batch(pts, frame.positions, weights.w)
        sigma = sigma[0]
        poly = pts[0]
        seg = np.linalg.norm(np.diff(poly, axis=0), axis=1)
        cum = np.concatenate([[0.0], np.cumsum(seg)])
        L = cum[-1]
        if L < _TINY:
            continue
        bounds = np.concatenate([[0.0], np.clip(sigma, 0.0, 1.0) * L])
        acc_dist = 0.0
        acc_len = 0.0
        anchors = np.vstack([np.zeros(3), frame.positions])
        for i in range(task.m):
            lo, hi = bounds[i], bounds[i + 1]
            plen = hi - lo
            if plen < _TINY:
                continue
            nseg = max(1, int(math.ceil(plen / delta_m)))
            mids = lo + (np.arange(nseg) + 0.5) * (plen / nseg)
            samples = np.column_stack([np.interp(mids, cum, poly[:, c]) for c in range(3)])
            dists = _point_line_distances(samples, anchors[i], anchors[i + 1])
            acc_dist += float(dists.sum()) * (plen / nseg)
            acc_len += plen
        if acc_len > 0.0:
            frame_means.append(acc_dist / acc_len)
    return float(np.mean(frame_means)) if frame_means else 0.0


def hand_path_within_reach(design: RobotDesign, task: RecordedTask) -> bool:
    """Necessary reach condition: every hand marker inside the arm's sphere."""
    L = total_length(design)
    return bool(np.max(np.linalg.norm(task.hand_path(), axis=1)) <= L)


def validity_gate(
    design: RobotDesign,
    limits: DesignLimits,
    task: RecordedTask,
    settings: IKSettings | None = None,
    rng=None,
):
    """Design-space validity verdict: static limits, the necessary reach
    condition, and (when settings are given) the start-frame gate.

    Returns (ok, reason); reason is None when ok.
    """
    violations = check_design_limits(design, limits)
    if violations:
        return False, "design-limits: " + "; ".join(violations)
    if not hand_path_within_reach(design, task):
        return False, "hand-path-beyond-reach"
    if settings is not None:
        from . import optimize

        rng = rng if rng is not None else np.random.default_rng(0)
        dist, _ = optimize.reach_ik(design, task.frames[0].hand_position, settings, rng, limits=limits)
        if dist > settings.ee_gate:
            return False, "unreachable-start"
    return True, None


def robot_fitness(
    design: RobotDesign,
    task: RecordedTask,
    settings: IKSettings,
    weights: FitnessWeights,
    limits: DesignLimits | None = None,
    rng=None,
    delta_m: float = 0.01,
) -> FitnessReport:
    """Full design evaluation: validity gates, path fitness, area penalty, and
    the combined objective; invalid designs get an infinite combined value."""
    limits = limits or DesignLimits()
    violations = check_design_limits(design, limits)
    if violations:
        return FitnessReport(valid=False, reason="design-limits: " + "; ".join(violations))
    if not hand_path_within_reach(design, task):
        return FitnessReport(valid=False, reason="hand-path-beyond-reach")
    report = path_fitness(design, task, settings, weights, limits=limits, rng=rng)
    if not report.valid:
        return report
    report.area = area_penalty(design, task, report.joint_path, delta_m=delta_m, weights=weights)
    report.combined = weights.lambda_f * report.path_fitness + weights.lambda_E * report.area
    return report
