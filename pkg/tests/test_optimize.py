import math

import numpy as np
import pytest

from armsynth.demonstration import MarkerFrame, link_fraction_anchors, sine_joint_path, synthesize_task
from armsynth.fitness import FitnessReport, FitnessWeights, IKSettings
from armsynth.kinematics import DesignLimits, DHLinkParams, RobotDesign
from armsynth.optimize import (
    PSOConfig,
    SwarmState,
    inner_ik_solve,
    make_design_oracle,
    pso_step,
    rapso_step,
    run_design_optimization,
    sample_initial_swarm,
    substream,
)

from conftest import random_config, random_valid_design


def quadratic_oracle(target):
    """Toy design oracle: always-valid quadratic bowl around a target vector."""

    def oracle(vec, rng):
        c = float(np.sum((vec - target) ** 2))
        return FitnessReport(valid=True, combined=c, path_fitness=c, area=0.0)

    return oracle


def never_valid_oracle(vec, rng):
    return FitnessReport(valid=False, reason="forced", combined=math.inf)


class FixedRng:
    """Stub generator: uniform() returns a fixed scalar, arrays of it otherwise."""

    def __init__(self, value):
        self.value = value

    def uniform(self, low=0.0, high=1.0, size=None):
        if size is None:
            return self.value
        return np.full(size, self.value)


class TestSampling:
    def test_deterministic_per_seed(self, limits):
        s1 = sample_initial_swarm(limits, 3, 50, seed=7)
        s2 = sample_initial_swarm(limits, 3, 50, seed=7)
        assert np.array_equal(s1.positions, s2.positions)
        s3 = sample_initial_swarm(limits, 3, 50, seed=8)
        assert not np.array_equal(s1.positions, s3.positions)

    def test_all_samples_admissible(self, limits):
        from armsynth.kinematics import check_design_limits

        state = sample_initial_swarm(limits, 3, 200, seed=1)
        for vec in state.positions:
            assert check_design_limits(RobotDesign.from_vector(vec), limits) == []

    def test_velocities_zero(self, limits):
        state = sample_initial_swarm(limits, 2, 20, seed=1)
        assert np.all(state.velocities == 0.0)

    def test_conditional_mean_matches_rejection_oracle(self, limits):
        # acceptance-conditioned per-dimension means against an independently
        # written rejection sampler
        N = 8000
        state = sample_initial_swarm(limits, 2, N, seed=3)
        rng = np.random.default_rng(1234)
        low, high = limits.dimension_bounds(2)
        accepted = []
        while sum(a.shape[0] for a in accepted) < N:
            batch = rng.uniform(low, high, size=(N, 6))
            L = batch[:, 1] + batch[:, 2] + batch[:, 4] + batch[:, 5]
            conc = (np.abs(batch[:, 3]) < limits.epsilon_axis) & (batch[:, 4] < limits.epsilon_axis)
            keep = (L > limits.L_min) & (L < limits.L_max) & ~conc
            accepted.append(batch[keep])
        oracle = np.concatenate(accepted)[:N]
        se = oracle.std(axis=0) / math.sqrt(N) + state.positions.std(axis=0) / math.sqrt(N)
        assert np.all(np.abs(state.positions.mean(axis=0) - oracle.mean(axis=0)) < 4 * se)

    def test_infeasible_limits_raise(self):
        tight = DesignLimits(L_min=0.99, L_max=1.0, a_max=0.01, d_max=0.01)
        with pytest.raises(RuntimeError, match="infeasible"):
            sample_initial_swarm(tight, 1, 10, seed=0, max_batches=50)

    def test_tool_dimension(self, limits):
        state = sample_initial_swarm(limits, 2, 10, seed=0, include_tool=True)
        assert state.positions.shape == (10, 9)
        assert state.angular_mask.tolist() == [True, False, False] * 3


class TestPsoStep:
    def test_stationary_fixed_point(self, limits):
        state = sample_initial_swarm(limits, 2, 4, seed=0)
        target = state.positions[1].copy()
        oracle = quadratic_oracle(target)
        # evaluate once so bests exist, then freeze: v=0, bp=gb=own position
        for i in range(4):
            state.record_evaluation(i, oracle(state.positions[i], None))
        state.pbest_positions = state.positions.copy()
        state.gbest_position = state.positions[1].copy()
        before = state.positions[1].copy()
        pso_step(state, PSOConfig(N=4, M=1), oracle, rng_factory=lambda i, it: FixedRng(1.0))
        assert np.allclose(state.positions[1], before, atol=1e-12)

    def test_velocity_arithmetic(self, limits):
        # scalar case: v = w*v + b1*c1*(bp-x) + b2*c2*(g-x) with b1=b2=1,
        # w=0.8, c1=0.4, c2=0.6, v=0, bp-x=1, g-x=2 -> v=1.6
        low = np.array([-10.0])
        high = np.array([10.0])
        state = SwarmState(
            positions=np.array([[0.0]]),
            velocities=np.array([[0.0]]),
            low=low,
            high=high,
            angular_mask=np.array([False]),
            rng_seed=0,
        )
        state.has_pbest[0] = True
        state.pbest_positions = np.array([[1.0]])
        state.gbest_position = np.array([2.0])
        state.gbest_fitness = 0.5
        oracle = quadratic_oracle(np.array([100.0]))  # far target: no best updates interfere
        pso_step(state, PSOConfig(N=1, M=1, w=0.8, c1=0.4, c2=0.6), oracle, rng_factory=lambda i, it: FixedRng(1.0))
        assert state.velocities[0, 0] == pytest.approx(1.6)
        assert state.positions[0, 0] == pytest.approx(1.6)

    def test_global_best_monotone(self, limits):
        state = sample_initial_swarm(limits, 2, 12, seed=2)
        oracle = quadratic_oracle(state.positions[0] * 0.9)
        for i in range(12):
            state.record_evaluation(i, oracle(state.positions[i], None))
        bests = [state.gbest_fitness]
        for _ in range(15):
            pso_step(state, PSOConfig(N=12, M=1), oracle)
            bests.append(state.gbest_fitness)
        assert all(b2 <= b1 + 1e-12 for b1, b2 in zip(bests, bests[1:]))

    def test_positions_stay_in_box(self, limits):
        state = sample_initial_swarm(limits, 2, 10, seed=3)
        oracle = quadratic_oracle(np.zeros(6))
        for _ in range(10):
            pso_step(state, PSOConfig(N=10, M=1), oracle)
            assert np.all(state.positions >= state.low - 1e-12)
            assert np.all(state.positions <= state.high + 1e-12)

    def test_never_valid_keeps_inf_best(self, limits):
        state = sample_initial_swarm(limits, 2, 6, seed=4)
        for _ in range(5):
            pso_step(state, PSOConfig(N=6, M=1), never_valid_oracle)
        assert math.isinf(state.gbest_fitness)
        assert state.gbest_position is None
        assert not state.has_pbest.any()


class TestRapsoStep:
    def test_zero_perturbation_keeps_velocity(self, limits):
        state = sample_initial_swarm(limits, 2, 4, seed=5)
        oracle = quadratic_oracle(state.positions[2].copy())
        for i in range(4):
            state.record_evaluation(i, oracle(state.positions[i], None))
        assert state.valid.all()
        v_before = state.velocities.copy()
        cfg = PSOConfig(N=4, M=1, c_min=0.0, c_max=0.0, D=1)
        rapso_step(state, cfg, oracle)
        assert np.allclose(state.velocities, v_before)

    def test_valid_particle_fixed_point_with_zero_velocity(self, limits):
        state = sample_initial_swarm(limits, 2, 3, seed=6)
        oracle = quadratic_oracle(state.positions[0].copy())
        for i in range(3):
            state.record_evaluation(i, oracle(state.positions[i], None))
        pos_before = state.positions.copy()
        cfg = PSOConfig(N=3, M=1, c_min=0.0, c_max=0.0, D=1)
        rapso_step(state, cfg, oracle)
        assert np.allclose(state.positions, pos_before)

    def test_angular_freeze_rule(self, limits):
        cfg = PSOConfig(N=8, M=1, D=3)
        state = sample_initial_swarm(limits, 3, 8, seed=7)
        oracle = quadratic_oracle(np.zeros(9))
        for i in range(8):
            state.record_evaluation(i, oracle(state.positions[i], None))
        mask = state.angular_mask
        for _ in range(6):
            alphas_before = state.positions[:, mask].copy()
            rapso_step(state, cfg, oracle)
            if state.iteration % cfg.D != 0:
                assert np.array_equal(state.positions[:, mask], alphas_before)
            else:
                assert not np.allclose(state.positions[:, mask], alphas_before)

    def test_invalid_updated_as_standard_pso(self, limits):
        # with a never-valid gate the two steppers produce identical state
        cfg = PSOConfig(N=6, M=1, D=10**9)  # freeze never triggers within the horizon
        s1 = sample_initial_swarm(limits, 2, 6, seed=8)
        s2 = sample_initial_swarm(limits, 2, 6, seed=8)
        for _ in range(4):
            pso_step(s1, cfg, never_valid_oracle)
            rapso_step(s2, cfg, never_valid_oracle)
        # angular dims of s2 are frozen (iteration % D != 0), others match PSO
        free = ~s2.angular_mask
        assert np.allclose(s1.positions[:, free], s2.positions[:, free])

    def test_step_bound_for_valid_particles(self, limits):
        cfg = PSOConfig(N=5, M=1, D=1)
        state = sample_initial_swarm(limits, 2, 5, seed=9)
        oracle = quadratic_oracle(state.positions[0].copy())
        for i in range(5):
            state.record_evaluation(i, oracle(state.positions[i], None))
        span = state.high - state.low
        v_prev = np.abs(state.velocities).copy()
        pos_before = state.positions.copy()
        rapso_step(state, cfg, oracle)
        delta = np.abs(state.positions - pos_before)
        bound = v_prev + cfg.c_max * span[None, :]
        assert np.all(delta <= bound + 1e-12)


class TestRunOptimization:
    def small_problem(self, frames=5):
        rng = np.random.default_rng(11)
        truth = random_valid_design(rng, n=2, single_segment=True)
        path = sine_joint_path(2, frames, center=[0.3, 0.6], amplitude=0.3, cycles=0.5)
        task = synthesize_task(truth, path, link_fraction_anchors(truth))
        weights = FitnessWeights.uniform(2)
        settings = IKSettings(particles=10, iterations=12, stall_iterations=4, polish_steps=4)
        return truth, task, weights, settings

    def test_degenerate_single_particle(self, limits):
        truth, task, weights, settings = self.small_problem()
        cfg = PSOConfig(N=1, M=1, stall_iterations=5)
        res = run_design_optimization(task, cfg, limits, weights, settings, algorithm="pso", seed=3, n=2)
        state = sample_initial_swarm(limits, 2, 1, seed=3)
        oracle = make_design_oracle(task, limits, weights, settings)
        rep = oracle(state.positions[0], substream(3, 1, 0, 0))
        if rep.valid:
            assert res.history[0]["best"] == pytest.approx(rep.combined)
        else:
            assert math.isinf(res.history[0]["best"])

    def test_determinism_bit_identical(self, limits):
        truth, task, weights, settings = self.small_problem()
        cfg = PSOConfig(N=8, M=4, stall_iterations=10)
        r1 = run_design_optimization(task, cfg, limits, weights, settings, algorithm="rapso", seed=5, n=2)
        r2 = run_design_optimization(task, cfg, limits, weights, settings, algorithm="rapso", seed=5, n=2)
        assert r1.history == r2.history
        if not r1.no_solution:
            assert r1.design == r2.design

    def test_history_shape_and_iteration_invariant(self, limits):
        truth, task, weights, settings = self.small_problem()
        cfg = PSOConfig(N=6, M=3, stall_iterations=10)
        res = run_design_optimization(task, cfg, limits, weights, settings, algorithm="pso", seed=1, n=2)
        assert [h["iter"] for h in res.history] == list(range(res.iterations_run + 1))

    def test_unknown_algorithm(self, limits):
        truth, task, weights, settings = self.small_problem()
        with pytest.raises(ValueError, match="unknown algorithm"):
            run_design_optimization(task, PSOConfig(N=2, M=1), limits, weights, settings, algorithm="annealing", seed=0, n=2)

    def test_solved_paths_satisfy_constraints(self, limits):
        truth, task, weights, settings = self.small_problem()
        cfg = PSOConfig(N=12, M=6, stall_iterations=10)
        res = run_design_optimization(task, cfg, limits, weights, settings, algorithm="rapso", seed=2, n=2)
        if not res.no_solution:
            Q = res.report.joint_path
            steps = np.linalg.norm(np.diff(Q, axis=0), axis=1)
            assert np.all(steps <= settings.epsilon + 1e-9)
            assert np.all(Q >= limits.q_min) and np.all(Q <= limits.q_max)


class TestInnerIK:
    def test_seed_hits_optimum(self):
        rng = np.random.default_rng(21)
        truth = random_valid_design(rng, n=3, single_segment=True)
        q_star = random_config(rng, 3) * 0.4
        task = synthesize_task(truth, np.vstack([q_star, q_star]), link_fraction_anchors(truth))
        settings = IKSettings(particles=8, iterations=5, polish_steps=0)
        cost, q = inner_ik_solve(truth, task.frames[0], q_star, settings, np.random.default_rng(0), weights=FitnessWeights.scenario_i())
        assert cost <= 1e-6

    def test_continuity_ball_respected(self):
        rng = np.random.default_rng(22)
        truth = random_valid_design(rng, n=3)
        frame = MarkerFrame(t=0, positions=rng.uniform(-0.4, 0.4, (3, 3)), hand_euler=np.zeros(3))
        settings = IKSettings(particles=12, iterations=10)
        q_prev = random_config(rng, 3) * 0.2
        cost, q = inner_ik_solve(truth, frame, q_prev, settings, np.random.default_rng(0), weights=FitnessWeights.scenario_i())
        assert np.linalg.norm(q - q_prev) <= settings.epsilon + 1e-9

    def test_against_dense_grid_oracle(self):
        # planar 3-DOF arm, single marker: dense joint-space grid search
        design = RobotDesign((DHLinkParams(0, 0.3, 0), DHLinkParams(0, 0.25, 0), DHLinkParams(0, 0.2, 0)))
        rng = np.random.default_rng(23)
        weights = FitnessWeights.uniform(1)
        settings = IKSettings(particles=40, iterations=60, polish_steps=20)
        from armsynth.fitness import frame_cost_batch
        from armsynth.kinematics import DesignArrays

        da = DesignArrays.from_design(design)
        grid_1d = np.linspace(-math.pi, math.pi, 60)
        Q_grid = np.stack(np.meshgrid(grid_1d, grid_1d, grid_1d, indexing="ij"), axis=-1).reshape(-1, 3)
        for _ in range(3):
            target = rng.uniform(-0.5, 0.5, 3) * np.array([1, 1, 0])  # planar reachable-ish point
            frame = MarkerFrame(t=0, positions=target[None, :], hand_euler=np.zeros(3))
            grid_cost = frame_cost_batch(da, Q_grid, frame, weights)[0].min()
            cost, _ = inner_ik_solve(design, frame, None, settings, np.random.default_rng(1), weights=weights)
            assert cost <= grid_cost + 0.002

    def test_mean_cost_order_of_magnitude(self):
        # random designs against frames recorded from other random designs
        # land in the tens-of-millimeter regime
        rng = np.random.default_rng(29)
        weights = FitnessWeights.scenario_i()
        settings = IKSettings(particles=20, iterations=25, polish_steps=6)
        costs = []
        for k in range(10):
            truth = random_valid_design(rng, n=3, single_segment=True)
            other = random_valid_design(rng, n=3)
            q = random_config(rng, 3)
            task = synthesize_task(truth, np.vstack([q, q]), link_fraction_anchors(truth))
            cost, _ = inner_ik_solve(other, task.frames[0], None, settings, np.random.default_rng(k), weights=weights)
            costs.append(cost)
        mean = float(np.mean(costs))
        assert 0.001 < mean < 0.3


class TestSubstream:
    def test_keyed_reproducibility(self):
        a = substream(7, 1, 2, 3).uniform(size=5)
        b = substream(7, 1, 2, 3).uniform(size=5)
        c = substream(7, 1, 2, 4).uniform(size=5)
        assert np.array_equal(a, b)
        assert not np.array_equal(a, c)
