"""Swarm optimizers: the joint-space solver behind the per-frame multi-point
IK, and the design-space search in its standard and validity-aware variants.

The standard update is

    v <- w*v + beta1*c1*(bp - x) + beta2*c2*(x* - x);  x <- x + v

with per-particle beta draws and box clamping.  The validity-aware variant
treats particles whose design currently passes the validity gates
differently: instead of the attraction terms they receive a small
range-scaled random velocity nudge per dimension, and the angular (twist)
dimensions of every particle are only updated every D-th iteration, so
different link lengths are explored against a held set of twists.

All randomness derives from one integer seed through keyed substreams, so a
run is reproducible bit for bit regardless of evaluation order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .demonstration import MarkerFrame, RecordedTask
from .fitness import (
    FitnessReport,
    FitnessWeights,
    IKSettings,
    frame_cost_batch,
    robot_fitness,
)
from .kinematics import DesignArrays, DesignLimits, RobotDesign, ee_positions_batch


def substream(seed, *key):
    """Deterministic generator for (seed, key...) independent of draw order."""
    return np.random.default_rng(np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key)))


_INIT_STREAM = 0
_STEP_STREAM = 1


@dataclass(frozen=True)
class PSOConfig:
    """Swarm size, iteration budget, update constants, and the convergence rule."""

    N: int = 400
    M: int = 200
    w: float = 0.8
    c1: float = 0.4
    c2: float = 0.6
    c_min: float = -0.5
    c_max: float = 0.5
    D: int = 2
    stall_iterations: int = 20
    stall_tol: float = 1e-4

    def __post_init__(self):
        if self.N < 1 or self.M < 1 or self.D < 1:
            raise ValueError("N, M and D must be >= 1")
        if self.c_min > self.c_max:
            raise ValueError("c_min must not exceed c_max")


@dataclass
class Particle:
    """Read-only view of one swarm member, for inspection and tests."""

    position: np.ndarray
    velocity: np.ndarray
    personal_best: np.ndarray | None
    personal_best_fitness: float
    valid: bool
    last_report: FitnessReport | None


@dataclass
class SwarmState:
    """Positions, velocities, bests, validity flags, and run bookkeeping."""

    positions: np.ndarray
    velocities: np.ndarray
    low: np.ndarray
    high: np.ndarray
    angular_mask: np.ndarray
    rng_seed: int
    pbest_positions: np.ndarray = None
    pbest_fitness: np.ndarray = None
    has_pbest: np.ndarray = None
    valid: np.ndarray = None
    gbest_position: np.ndarray | None = None
    gbest_fitness: float = math.inf
    gbest_report: FitnessReport | None = None
    iteration: int = 0
    history: list = field(default_factory=list)
    last_reports: list = None

    def __post_init__(self):
        N = self.positions.shape[0]
        if self.pbest_positions is None:
            self.pbest_positions = self.positions.copy()
        if self.pbest_fitness is None:
            self.pbest_fitness = np.full(N, math.inf)
        if self.has_pbest is None:
            self.has_pbest = np.zeros(N, dtype=bool)
        if self.valid is None:
            self.valid = np.zeros(N, dtype=bool)
        if self.last_reports is None:
            self.last_reports = [None] * N

    @property
    def N(self):
        return self.positions.shape[0]

    @property
    def dim(self):
        return self.positions.shape[1]

    def particle(self, i) -> Particle:
        return Particle(
            position=self.positions[i].copy(),
            velocity=self.velocities[i].copy(),
            personal_best=self.pbest_positions[i].copy() if self.has_pbest[i] else None,
            personal_best_fitness=float(self.pbest_fitness[i]),
            valid=bool(self.valid[i]),
            last_report=self.last_reports[i],
        )

    def record_evaluation(self, i, report: FitnessReport):
        self.last_reports[i] = report
        self.valid[i] = report.valid
        if report.valid and report.combined < self.pbest_fitness[i]:
            self.pbest_fitness[i] = report.combined
            self.pbest_positions[i] = self.positions[i].copy()
            self.has_pbest[i] = True
            if report.combined < self.gbest_fitness:
                self.gbest_fitness = float(report.combined)
                self.gbest_position = self.positions[i].copy()
                self.gbest_report = report

    def append_history(self):
        self.history.append(
            {"iter": self.iteration, "best": float(self.gbest_fitness), "n_valid": int(np.sum(self.valid))}
        )


def _vectorized_limit_ok(batch, limits: DesignLimits, n_rows):
    """Length-band and concentricity acceptance for (B, 3*rows) design batches."""
    tri = batch.reshape(batch.shape[0], n_rows, 3)
    L = tri[:, :, 1].sum(axis=1) + tri[:, :, 2].sum(axis=1)
    ok = (L > limits.L_min) & (L < limits.L_max)
    if n_rows >= 2:
        conc = (np.abs(tri[:, 1:, 0]) < limits.epsilon_axis) & (tri[:, 1:, 1] < limits.epsilon_axis)
        ok &= ~np.any(conc, axis=1)
    return ok


def sample_initial_swarm(
    limits: DesignLimits,
    n: int,
    N: int,
    seed: int,
    include_tool: bool = False,
    max_batches: int = 10_000,
) -> SwarmState:
    """Uniform swarm over the per-dimension boxes, rejection-sampled against
    the length band and the concentricity rule; velocities start at zero."""
    low, high = limits.dimension_bounds(n, include_tool)
    dim = low.size
    n_rows = dim // 3
    rng = substream(seed, _INIT_STREAM)
    accepted = []
    count = 0
    for _ in range(max_batches):
        batch = rng.uniform(low, high, size=(N, dim))
        ok = _vectorized_limit_ok(batch, limits, n_rows)
        if np.any(ok):
            accepted.append(batch[ok])
            count += int(np.sum(ok))
        if count >= N:
            break
    if count < N:
        raise RuntimeError(
            f"could not sample {N} admissible designs in {max_batches} batches; limits look infeasible"
        )
    positions = np.concatenate(accepted)[:N]
    angular_mask = np.zeros(dim, dtype=bool)
    angular_mask[0::3] = True
    return SwarmState(
        positions=positions,
        velocities=np.zeros_like(positions),
        low=low,
        high=high,
        angular_mask=angular_mask,
        rng_seed=int(seed),
    )


def _default_rng_factory(state: SwarmState):
    def factory(i, iteration):
        return substream(state.rng_seed, _STEP_STREAM, i, iteration)

    return factory


def _move_and_clamp(state, i, v):
    """Velocity clamp, position update, box clamp with velocity zeroing."""
    span = state.high - state.low
    v = np.clip(v, -span, span)
    pos = state.positions[i] + v
    below = pos < state.low
    above = pos > state.high
    if np.any(below) or np.any(above):
        pos = np.clip(pos, state.low, state.high)
        v = np.where(below | above, 0.0, v)
    return pos, v


def pso_step(state: SwarmState, cfg: PSOConfig, oracle, rng_factory=None) -> SwarmState:
    """One standard PSO iteration: update every particle, evaluate, track bests."""
    rng_factory = rng_factory or _default_rng_factory(state)
    it = state.iteration + 1
    for i in range(state.N):
        rng = rng_factory(i, it)
        b1 = rng.uniform()
        b2 = rng.uniform()
        pos = state.positions[i]
        bp = state.pbest_positions[i] if state.has_pbest[i] else pos
        gb = state.gbest_position if state.gbest_position is not None else pos
        v = cfg.w * state.velocities[i] + b1 * cfg.c1 * (bp - pos) + b2 * cfg.c2 * (gb - pos)
        new_pos, v = _move_and_clamp(state, i, v)
        state.positions[i] = new_pos
        state.velocities[i] = v
        state.record_evaluation(i, oracle(new_pos, rng))
    state.iteration = it
    state.append_history()
    return state


def rapso_step(state: SwarmState, cfg: PSOConfig, oracle, rng_factory=None) -> SwarmState:
    """One validity-aware iteration.

    Invalid particles move exactly as in pso_step; valid ones get a per
    dimension uniform velocity nudge in [c_min, c_max] scaled by the box
    width.  Angular dimensions of every particle (position and velocity) are
    held except on iterations divisible by D.
    """
    rng_factory = rng_factory or _default_rng_factory(state)
    it = state.iteration + 1
    angular_held = (it % cfg.D) != 0
    span = state.high - state.low
    mask = state.angular_mask
    for i in range(state.N):
        rng = rng_factory(i, it)
        pos = state.positions[i]
        if state.valid[i]:
            u = rng.uniform(cfg.c_min, cfg.c_max, size=state.dim)
            v = state.velocities[i] + u * span
        else:
            b1 = rng.uniform()
            b2 = rng.uniform()
            bp = state.pbest_positions[i] if state.has_pbest[i] else pos
            gb = state.gbest_position if state.gbest_position is not None else pos
            v = cfg.w * state.velocities[i] + b1 * cfg.c1 * (bp - pos) + b2 * cfg.c2 * (gb - pos)
        new_pos, v = _move_and_clamp(state, i, v)
        if angular_held:
            new_pos = new_pos.copy()
            v = v.copy()
            new_pos[mask] = pos[mask]
            v[mask] = state.velocities[i][mask]
        state.positions[i] = new_pos
        state.velocities[i] = v
        state.record_evaluation(i, oracle(new_pos, rng))
    state.iteration = it
    state.append_history()
    return state


_STEPPERS = {"pso": pso_step, "rapso": rapso_step}


@dataclass
class OptimizationResult:
    """Best design found plus everything needed to audit the run."""

    algorithm: str
    seed: int
    n: int
    D: int
    design: RobotDesign | None
    report: FitnessReport | None
    history: list
    iterations_run: int
    no_solution: bool

    def to_json_dict(self):
        return {
            "algorithm": self.algorithm,
            "seed": self.seed,
            "n": self.n,
            "D": self.D,
            "no_solution": self.no_solution,
            "design": None if self.design is None else self.design.to_json_dict(),
            "report": None if self.report is None else self.report.to_json_dict(),
            "iterations_run": self.iterations_run,
            "history": self.history,
        }


def make_design_oracle(
    task: RecordedTask,
    limits: DesignLimits,
    weights: FitnessWeights,
    settings: IKSettings,
    tool=None,
    search_tool: bool = False,
    delta_m: float = 0.01,
):
    """Fitness oracle mapping a design vector (and rng) to a FitnessReport."""

    def oracle(vec, rng) -> FitnessReport:
        design = RobotDesign.from_vector(vec, tool=tool, includes_tool=search_tool)
        return robot_fitness(design, task, settings, weights, limits=limits, rng=rng, delta_m=delta_m)

    return oracle


def run_design_optimization(
    task: RecordedTask,
    cfg: PSOConfig,
    limits: DesignLimits,
    weights: FitnessWeights,
    settings: IKSettings,
    algorithm: str,
    seed: int,
    n: int,
    tool=None,
    search_tool: bool = False,
    delta_m: float = 0.01,
) -> OptimizationResult:
    """Sample a swarm, iterate the chosen stepper, and return the best design.

    Stops early once the best fitness has improved by less than stall_tol for
    stall_iterations consecutive iterations.  The returned history carries one
    {iter, best, n_valid} row per iteration including the initial evaluation
    (iter 0), which is what the effort metric consumes.
    """
    if algorithm not in _STEPPERS:
        raise ValueError(f"unknown algorithm {algorithm!r}; expected one of {sorted(_STEPPERS)}")
    step = _STEPPERS[algorithm]
    oracle = make_design_oracle(task, limits, weights, settings, tool=tool, search_tool=search_tool, delta_m=delta_m)
    state = sample_initial_swarm(limits, n, cfg.N, seed, include_tool=search_tool)

    for i in range(state.N):
        rng = substream(seed, _STEP_STREAM, i, 0)
        state.record_evaluation(i, oracle(state.positions[i], rng))
    init_record = {"iter": 0, "best": float(state.gbest_fitness), "n_valid": int(np.sum(state.valid))}

    stall = 0
    prev_best = state.gbest_fitness
    for _ in range(cfg.M):
        step(state, cfg, oracle)
        best = state.gbest_fitness
        improvement = 0.0 if (math.isinf(prev_best) and math.isinf(best)) else prev_best - best
        stall = stall + 1 if improvement < cfg.stall_tol else 0
        prev_best = best
        if stall >= cfg.stall_iterations:
            break

    history = [init_record] + state.history
    if state.gbest_position is None:
        return OptimizationResult(
            algorithm=algorithm,
            seed=int(seed),
            n=n,
            D=cfg.D,
            design=None,
            report=None,
            history=history,
            iterations_run=state.iteration,
            no_solution=True,
        )
    design = RobotDesign.from_vector(state.gbest_position, tool=tool, includes_tool=search_tool)
    return OptimizationResult(
        algorithm=algorithm,
        seed=int(seed),
        n=n,
        D=cfg.D,
        design=design,
        report=state.gbest_report,
        history=history,
        iterations_run=state.iteration,
        no_solution=False,
    )


# ---------------------------------------------------------------------------
# Joint-space solver used per frame (multi-point IK) and for the start gate.
# ---------------------------------------------------------------------------


def _ball_project(q_batch, center, radius):
    d = q_batch - center[None, :]
    norms = np.linalg.norm(d, axis=1)
    over = norms > radius
    if np.any(over):
        q_batch = q_batch.copy()
        q_batch[over] = center[None, :] + d[over] * (radius / norms[over])[:, None]
    return q_batch


def _sample_ball(rng, center, radius, count):
    d = center.size
    direction = rng.normal(size=(count, d))
    direction /= np.maximum(np.linalg.norm(direction, axis=1, keepdims=True), 1e-300)
    r = radius * rng.uniform(size=(count, 1)) ** (1.0 / d)
    return center[None, :] + direction * r


def _pso_minimize(
    objective,
    low,
    high,
    init,
    rng,
    iterations,
    stall_iterations,
    stall_tol,
    target=None,
    ball=None,
    w=0.729,
    c1=1.494,
    c2=1.494,
    polish_steps=0,
):
    """Generic batched PSO over a box, optionally intersected with a ball.

    objective maps (B, dim) to (B,); init rows must already be feasible.
    Returns (best cost, best position).
    """
    pos = init.copy()
    B, dim = pos.shape
    vel = np.zeros_like(pos)
    span = high - low
    costs = objective(pos)
    pbest = pos.copy()
    pcost = costs.copy()
    k = int(np.argmin(costs))
    gbest = pos[k].copy()
    gcost = float(costs[k])
    stall = 0
    for _ in range(iterations):
        if target is not None and gcost <= target:
            break
        b1 = rng.uniform(size=(B, 1))
        b2 = rng.uniform(size=(B, 1))
        vel = w * vel + c1 * b1 * (pbest - pos) + c2 * b2 * (gbest[None, :] - pos)
        np.clip(vel, -span, span, out=vel)
        pos = pos + vel
        clipped_low = pos < low
        clipped_high = pos > high
        np.clip(pos, low, high, out=pos)
        vel[clipped_low | clipped_high] = 0.0
        if ball is not None:
            pos = _ball_project(pos, ball[0], ball[1])
        costs = objective(pos)
        better = costs < pcost
        pbest[better] = pos[better]
        pcost[better] = costs[better]
        k = int(np.argmin(pcost))
        if pcost[k] < gcost - stall_tol:
            stall = 0
        else:
            stall += 1
        if pcost[k] < gcost:
            gcost = float(pcost[k])
            gbest = pbest[k].copy()
        if stall >= stall_iterations:
            break
    if polish_steps > 0:
        gcost, gbest = _pattern_polish(objective, gbest, gcost, low, high, ball, polish_steps)
    return gcost, gbest


def _pattern_polish(objective, center, cost, low, high, ball, steps, h_min=1e-8):
    """Shrinking coordinate-probe refinement around the swarm's best point."""
    dim = center.size
    h = 0.05 * float(np.max(high - low))
    eye = np.eye(dim)
    for _ in range(steps):
        probes = np.concatenate([center[None, :] + h * eye, center[None, :] - h * eye])
        np.clip(probes, low, high, out=probes)
        if ball is not None:
            probes = _ball_project(probes, ball[0], ball[1])
        costs = objective(probes)
        k = int(np.argmin(costs))
        if costs[k] < cost:
            cost = float(costs[k])
            center = probes[k].copy()
        else:
            h *= 0.5
            if h < h_min:
                break
    return cost, center


def inner_ik_solve(
    design: RobotDesign,
    frame: MarkerFrame,
    q_prev,
    settings: IKSettings,
    rng,
    weights: FitnessWeights | None = None,
    limits: DesignLimits | None = None,
    seeds=(),
):
    """Multi-point IK for one frame by joint-space PSO.

    With q_prev the search runs inside the continuity neighborhood around it
    (Euclidean ball or per-joint box, per settings) and the seeded population
    includes q_prev verbatim; otherwise the full joint box is searched.
    Returns (cost, q).
    """
    limits = limits or DesignLimits()
    weights = weights or FitnessWeights.uniform(frame.m)
    da = DesignArrays.from_design(design)
    n = design.dof
    low = np.full(n, limits.q_min)
    high = np.full(n, limits.q_max)
    ball = None

    def objective(q_batch):
        return frame_cost_batch(da, q_batch, frame, weights)[0]

    B = max(2, settings.particles)
    seed_rows = [np.asarray(s, dtype=float) for s in seeds]
    if q_prev is not None:
        q_prev = np.asarray(q_prev, dtype=float)
        if settings.continuity_norm == "per-joint":
            low = np.maximum(low, q_prev - settings.epsilon)
            high = np.minimum(high, q_prev + settings.epsilon)
        else:
            ball = (q_prev, settings.epsilon)
        seed_rows = [q_prev] + seed_rows
    free = max(0, B - len(seed_rows))
    if q_prev is not None and ball is not None:
        rand = _sample_ball(rng, q_prev, settings.epsilon, free)
        np.clip(rand, low, high, out=rand)
        rand = _ball_project(rand, q_prev, settings.epsilon)
    else:
        rand = rng.uniform(low, high, size=(free, n))
    init = np.vstack(seed_rows + [rand]) if seed_rows else rand
    init = init[:B]
    return _pso_minimize(
        objective,
        low,
        high,
        init,
        rng,
        iterations=settings.iterations,
        stall_iterations=settings.stall_iterations,
        stall_tol=settings.stall_tol,
        ball=ball,
        polish_steps=settings.polish_steps,
    )


def _dls_refine(da, point, starts, low, high, target, iterations=40, fd_step=1e-5):
    """Damped-least-squares IK refinement, batched over start configurations.

    The end-effector distance is smooth in q, so Levenberg-Marquardt steps on
    the position residual converge orders of magnitude tighter than swarm
    sampling.  Returns (best distance, best q).
    """
    Q = np.atleast_2d(np.asarray(starts, dtype=float)).copy()
    S, n = Q.shape
    lam = np.full(S, 1e-3)
    err = ee_positions_batch(da, Q) - point[None, :]
    dist = np.linalg.norm(err, axis=1)
    for _ in range(iterations):
        if dist.min() <= target:
            break
        # central-difference Jacobians for the whole batch in one FK call
        probes = np.repeat(Q, 2 * n, axis=0)
        for j in range(n):
            probes[2 * j :: 2 * n, j] += fd_step
            probes[2 * j + 1 :: 2 * n, j] -= fd_step
        ee = ee_positions_batch(da, probes).reshape(S, n, 2, 3)
        J = (ee[:, :, 0, :] - ee[:, :, 1, :]).transpose(0, 2, 1) / (2 * fd_step)  # (S, 3, n)
        JJt = J @ J.transpose(0, 2, 1)
        A = JJt + (lam**2)[:, None, None] * np.eye(3)[None, :, :]
        try:
            y = np.linalg.solve(A, err[:, :, None])
        except np.linalg.LinAlgError:
            break
        step = -(J.transpose(0, 2, 1) @ y)[:, :, 0]
        Q_new = np.clip(Q + step, low, high)
        err_new = ee_positions_batch(da, Q_new) - point[None, :]
        dist_new = np.linalg.norm(err_new, axis=1)
        improved = dist_new < dist
        Q[improved] = Q_new[improved]
        err[improved] = err_new[improved]
        dist[improved] = dist_new[improved]
        lam = np.where(improved, np.maximum(lam * 0.5, 1e-6), np.minimum(lam * 4.0, 1e3))
    k = int(np.argmin(dist))
    return float(dist[k]), Q[k].copy()


def reach_ik(design: RobotDesign, point, settings: IKSettings, rng, limits: DesignLimits | None = None):
    """Closest end-effector approach to a point over the joint box.

    Used by the start-frame gate, so precision matters more than speed: a
    uniform multistart pool picks the most promising basins and batched
    damped-least-squares refinement drives them down; a swarm pass backs the
    result up when the target is still out of tolerance.  Returns
    (distance, q).
    """
    limits = limits or DesignLimits()
    da = DesignArrays.from_design(design)
    point = np.asarray(point, dtype=float)
    n = design.dof
    low = np.full(n, limits.q_min)
    high = np.full(n, limits.q_max)

    pool = rng.uniform(low, high, size=(max(64, 8 * settings.gate_particles), n))
    dists = np.linalg.norm(ee_positions_batch(da, pool) - point[None, :], axis=1)
    starts = pool[np.argsort(dists)[: max(4, settings.gate_restarts * 4)]]
    best = _dls_refine(da, point, starts, low, high, target=0.25 * settings.ee_gate)
    if best[0] <= settings.ee_gate or best[0] > 20.0 * settings.ee_gate:
        # clearly inside or clearly hopeless; the swarm backup only earns its
        # cost in the borderline band
        return best

    def objective(q_batch):
        return np.linalg.norm(ee_positions_batch(da, q_batch) - point[None, :], axis=1)

    for _ in range(max(1, settings.gate_restarts)):
        init = rng.uniform(low, high, size=(max(2, settings.gate_particles), n))
        dist, q = _pso_minimize(
            objective,
            low,
            high,
            init,
            rng,
            iterations=settings.gate_iterations,
            stall_iterations=max(settings.stall_iterations, 10),
            stall_tol=settings.stall_tol,
            target=0.5 * settings.ee_gate,
            polish_steps=20,
        )
        refined = _dls_refine(da, point, q[None, :], low, high, target=0.25 * settings.ee_gate, iterations=20)
        if refined[0] < best[0]:
            best = refined
        if best[0] <= settings.ee_gate:
            break
    return best
