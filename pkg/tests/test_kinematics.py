import json
import math

import numpy as np
import pytest

from armsynth.kinematics import (
    DesignArrays,
    DesignLimits,
    DHLinkParams,
    RobotDesign,
    arm_point,
    arm_polyline,
    check_design_limits,
    dh_transform,
    ee_euler,
    euler_to_rotation,
    fk_batch,
    forward_kinematics,
    rot_x,
    rot_z,
    total_length,
    trans_x,
    trans_z,
    wrap_angle,
)

from conftest import random_config, random_valid_design


def elementary_dh(phi, theta):
    """Oracle: explicit product of the four elementary transforms."""
    return rot_z(theta) @ trans_z(phi.d) @ trans_x(phi.a) @ rot_x(phi.alpha)


class TestDHTransform:
    def test_identity(self):
        assert np.allclose(dh_transform(DHLinkParams(0, 0, 0), 0.0), np.eye(4))

    def test_planar_offset_rotation(self):
        T = dh_transform(DHLinkParams(0, 0.5, 0), math.pi / 2)
        assert np.allclose(T[:3, 3], [0.0, 0.5, 0.0], atol=1e-15)
        assert np.allclose(T[:3, :3], rot_z(math.pi / 2)[:3, :3])

    def test_matches_elementary_composition(self):
        phi = DHLinkParams(math.pi / 2, 0.1, 0.3)
        assert np.allclose(dh_transform(phi, 0.7), elementary_dh(phi, 0.7), atol=1e-15)

    def test_random_against_oracle(self):
        rng = np.random.default_rng(101)
        for _ in range(300):
            phi = DHLinkParams(*rng.uniform(-math.pi, math.pi, 3))
            theta = rng.uniform(-math.pi, math.pi)
            assert np.allclose(dh_transform(phi, theta), elementary_dh(phi, theta), atol=1e-12)

    def test_rotation_block_orthonormal(self):
        rng = np.random.default_rng(7)
        for _ in range(100):
            R = dh_transform(DHLinkParams(*rng.uniform(-3, 3, 3)), rng.uniform(-3, 3))[:3, :3]
            assert np.allclose(R @ R.T, np.eye(3), atol=1e-12)
            assert abs(np.linalg.det(R) - 1.0) < 1e-12


class TestForwardKinematics:
    def test_straight_planar_chain(self):
        d = RobotDesign((DHLinkParams(0, 0.5, 0), DHLinkParams(0, 0.5, 0)))
        assert np.allclose(forward_kinematics(d, [0, 0]).position, [1.0, 0, 0])

    def test_bent_planar_chain(self):
        d = RobotDesign((DHLinkParams(0, 0.5, 0), DHLinkParams(0, 0.5, 0)))
        pose = forward_kinematics(d, [math.pi / 2, -math.pi / 2])
        assert np.allclose(pose.position, [0.5, 0.5, 0.0], atol=1e-15)

    def test_revolute_periodicity(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            design = random_valid_design(rng, n=3)
            q = random_config(rng, 3)
            k = rng.integers(0, 3)
            q2 = q.copy()
            q2[k] += 2 * math.pi
            assert np.allclose(forward_kinematics(design, q).position, forward_kinematics(design, q2).position, atol=1e-9)

    def test_dimension_mismatch(self):
        d = RobotDesign((DHLinkParams(0, 0.5, 0),))
        with pytest.raises(ValueError):
            forward_kinematics(d, [0.0, 0.0])

    def test_chain_matches_elementary_oracle(self):
        rng = np.random.default_rng(13)
        for _ in range(100):
            n = int(rng.integers(1, 7))
            design = random_valid_design(rng, n=n, tool=bool(rng.integers(0, 2)))
            q = random_config(rng, n)
            T = np.eye(4)
            for phi, qi in zip(design.links, q):
                T = T @ elementary_dh(phi, qi)
            if design.tool is not None:
                T = T @ elementary_dh(design.tool, 0.0)
            assert np.allclose(forward_kinematics(design, q).position, T[:3, 3], atol=1e-9)


class TestPolyline:
    def test_single_link(self):
        p = arm_polyline(RobotDesign((DHLinkParams(0, 0.5, 0),)), [0.0])
        assert np.allclose(p.points, [[0, 0, 0], [0.5, 0, 0]])
        assert p.total_length == pytest.approx(0.5)

    def test_d_then_a(self):
        p = arm_polyline(RobotDesign((DHLinkParams(0, 0.3, 0.4),)), [0.0])
        assert np.allclose(p.points, [[0, 0, 0], [0, 0, 0.4], [0.3, 0, 0.4]])
        assert p.total_length == pytest.approx(0.7)

    def test_endpoint_equals_fk(self):
        rng = np.random.default_rng(17)
        for _ in range(50):
            n = int(rng.integers(1, 6))
            design = random_valid_design(rng, n=n, tool=bool(rng.integers(0, 2)))
            q = random_config(rng, n)
            p = arm_polyline(design, q)
            assert np.allclose(p.points[-1], forward_kinematics(design, q).position, atol=1e-12)
            assert p.total_length == pytest.approx(total_length(design), abs=1e-12)

    def test_prefix_origins_match_partial_products(self):
        rng = np.random.default_rng(19)
        design = random_valid_design(rng, n=4)
        q = random_config(rng, 4)
        poly = arm_polyline(design, q)
        T = np.eye(4)
        for phi, qi in zip(design.links, q):
            T = T @ dh_transform(phi, qi)
            origin = T[:3, 3]
            dists = np.linalg.norm(poly.points - origin[None, :], axis=1)
            assert dists.min() < 1e-12  # every joint origin is a polyline vertex

    def test_zero_length_segments_skipped(self):
        p = arm_polyline(RobotDesign((DHLinkParams(0.3, 0.5, 0.0), DHLinkParams(0.2, 0.0, 0.4))), [0.1, -0.2])
        seg = np.linalg.norm(np.diff(p.points, axis=0), axis=1)
        assert np.all(seg > 0)


class TestArmPoint:
    def test_base_and_ee(self):
        rng = np.random.default_rng(23)
        design = random_valid_design(rng, n=3)
        q = random_config(rng, 3)
        assert np.allclose(arm_point(design, q, 0.0), [0, 0, 0])
        assert np.allclose(arm_point(design, q, 1.0), forward_kinematics(design, q).position, atol=1e-12)

    def test_linear_interpolation(self):
        d = RobotDesign((DHLinkParams(0, 0.5, 0),))
        assert np.allclose(arm_point(d, [0.0], 0.4), [0.2, 0, 0])

    def test_sigma_out_of_range(self):
        d = RobotDesign((DHLinkParams(0, 0.5, 0),))
        with pytest.raises(ValueError):
            arm_point(d, [0.0], 1.2)

    def test_continuity_in_sigma(self):
        rng = np.random.default_rng(29)
        design = random_valid_design(rng, n=3)
        q = random_config(rng, 3)
        poly = arm_polyline(design, q)
        sigmas = np.linspace(0, 1, 400)
        pts = np.array([poly.point_at(s) for s in sigmas])
        jumps = np.linalg.norm(np.diff(pts, axis=0), axis=1)
        assert jumps.max() <= poly.total_length / 399 + 1e-9


class TestEuler:
    def test_identity(self):
        d = RobotDesign((DHLinkParams(0, 0.5, 0),))
        assert np.allclose(ee_euler(d, [0.0]), [0, 0, 0])

    def test_pure_z_rotation(self):
        d = RobotDesign((DHLinkParams(0, 0.5, 0),))
        eul = ee_euler(d, [math.pi / 2])
        assert eul[2] == pytest.approx(math.pi / 2)  # yaw
        assert eul[0] == pytest.approx(0.0)  # roll
        assert eul[1] == pytest.approx(0.0)  # pitch

    def test_round_trip_recomposition(self):
        rng = np.random.default_rng(31)
        for _ in range(200):
            n = int(rng.integers(1, 6))
            design = random_valid_design(rng, n=n)
            q = random_config(rng, n)
            pose = forward_kinematics(design, q)
            from armsynth.kinematics import chain_transform

            R = chain_transform(design, q)[:3, :3]
            if pose.gimbal_lock:
                continue
            assert np.allclose(euler_to_rotation(pose.euler), R, atol=1e-9)

    def test_gimbal_lock_flagged(self):
        # alpha_1 = pi/2 then q_2 = pi/2 pitches the frame by exactly pi/2
        d = RobotDesign((DHLinkParams(math.pi / 2, 0.3, 0.0), DHLinkParams(0.0, 0.4, 0.0)))
        pose = forward_kinematics(d, [0.0, math.pi / 2])
        assert pose.gimbal_lock
        assert abs(pose.euler[1]) == pytest.approx(math.pi / 2)
        assert pose.euler[0] == 0.0

    def test_wrapped_range(self):
        rng = np.random.default_rng(37)
        for _ in range(100):
            design = random_valid_design(rng, n=4)
            eul = ee_euler(design, random_config(rng, 4))
            assert np.all(eul > -math.pi - 1e-12) and np.all(eul <= math.pi + 1e-12)


class TestWrapAngle:
    def test_half_open_interval(self):
        assert wrap_angle(math.pi) == pytest.approx(math.pi)
        assert wrap_angle(-math.pi) == pytest.approx(math.pi)
        assert wrap_angle(3 * math.pi / 2) == pytest.approx(-math.pi / 2)
        assert wrap_angle(0.0) == 0.0


class TestTotalLength:
    def test_table_style_design(self):
        design = RobotDesign(
            (DHLinkParams(0.515, 0, 0), DHLinkParams(-1.57, 0.11, 0), DHLinkParams(-0.27, 0.5, 0)),
            tool=DHLinkParams(-1.57, 0, 0.1),
        )
        L = total_length(design)
        assert L == pytest.approx(0.71)
        assert DesignLimits().L_min < L < DesignLimits().L_max

    def test_zero_lengths_violate_minimum(self, limits):
        d = RobotDesign((DHLinkParams(0.4, 0, 0), DHLinkParams(0.4, 0, 0)))
        assert total_length(d) == 0.0
        assert any("total length" in v for v in check_design_limits(d, limits))

    def test_three_max_links_violate_maximum(self, limits):
        d = RobotDesign(tuple(DHLinkParams(0.3, 0.5, 0) for _ in range(3)))
        assert total_length(d) == pytest.approx(1.5)
        assert any("total length" in v for v in check_design_limits(d, limits))

    def test_independent_of_q(self):
        rng = np.random.default_rng(41)
        design = random_valid_design(rng, n=4)
        L = total_length(design)
        for _ in range(10):
            assert arm_polyline(design, random_config(rng, 4)).total_length == pytest.approx(L, abs=1e-12)


class TestCheckDesignLimits:
    def test_concentric_consecutive_joints(self, limits):
        d = RobotDesign((DHLinkParams(0.5, 0.4, 0), DHLinkParams(0.0, 0.0, 0.3)))
        assert any("concentric" in v for v in check_design_limits(d, limits))

    def test_bound_violation(self, limits):
        d = RobotDesign((DHLinkParams(0.2, 0.6, 0), DHLinkParams(0.4, 0.3, 0)))
        assert any("a[0]" in v for v in check_design_limits(d, limits))

    def test_valid_design_empty_report(self, limits):
        d = RobotDesign(
            (DHLinkParams(0.515, 0, 0), DHLinkParams(-1.57, 0.11, 0), DHLinkParams(-0.27, 0.5, 0)),
            tool=DHLinkParams(-1.57, 0, 0.1),
        )
        assert check_design_limits(d, limits) == []

    def test_first_joint_exempt_from_concentricity(self, limits):
        d = RobotDesign((DHLinkParams(0.0, 0.0, 0.4), DHLinkParams(0.5, 0.4, 0)))
        assert not any("concentric" in v for v in check_design_limits(d, limits))


class TestDesignSerialization:
    def test_round_trip(self):
        rng = np.random.default_rng(43)
        design = random_valid_design(rng, n=3, tool=True)
        doc = design.to_json_dict()
        again = RobotDesign.from_json_dict(json.loads(json.dumps(doc)))
        assert again == design

    def test_vector_round_trip(self):
        rng = np.random.default_rng(47)
        design = random_valid_design(rng, n=4)
        vec = design.to_vector()
        assert vec.shape == (12,)
        assert RobotDesign.from_vector(vec) == design

    def test_vector_with_tool(self):
        rng = np.random.default_rng(53)
        design = random_valid_design(rng, n=2, tool=True)
        vec = design.to_vector(include_tool=True)
        assert vec.shape == (9,)
        again = RobotDesign.from_vector(vec, includes_tool=True)
        assert again == design


class TestBatchInternals:
    def test_batch_matches_scalar_path(self):
        rng = np.random.default_rng(59)
        for _ in range(30):
            n = int(rng.integers(1, 6))
            design = random_valid_design(rng, n=n, tool=bool(rng.integers(0, 2)))
            da = DesignArrays.from_design(design)
            Q = rng.uniform(-math.pi, math.pi, (8, n))
            pts, T = fk_batch(da, Q)
            for b in range(8):
                pose = forward_kinematics(design, Q[b])
                assert np.allclose(T[b, :3, 3], pose.position, atol=1e-12)
                assert np.allclose(pts[b, -1], pose.position, atol=1e-12)
                seg = np.linalg.norm(np.diff(pts[b], axis=0), axis=1)
                assert seg.sum() == pytest.approx(total_length(design), abs=1e-12)
