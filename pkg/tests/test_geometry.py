import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from capvar.errors import NotOnSurface, RankDeficient
from capvar.geometry import (
    Plane,
    ball,
    check_container,
    constant_angle,
    halfspace,
    normal_and_tangent,
    plane_from_frame,
    project,
    project_perp,
)

from oracles import fd_hessian_sdf

RNG = np.random.default_rng(20260819)


def hand_projector(vectors):
    """Projector via the normal-equations formula P = V^T (V V^T)^-1 V."""
    V = np.atleast_2d(np.asarray(vectors, dtype=float))
    return V.T @ np.linalg.solve(V @ V.T, V)


class TestPlane:
    def test_matches_normal_equations_projector(self):
        for m, d in [(1, 2), (1, 3), (2, 3), (2, 4), (3, 5)]:
            V = RNG.standard_normal((m, d))
            plane = plane_from_frame(V)
            assert np.allclose(plane.proj, hand_projector(V), atol=1e-12)
            assert plane.m == m and plane.dim == d

    def test_gauge_freedom(self):
        V = RNG.standard_normal((2, 4))
        A = np.array([[2.0, 1.0], [0.5, -3.0]])
        assert plane_from_frame(V).equals(plane_from_frame(A @ V))

    def test_apply_perp_split(self):
        plane = plane_from_frame(RNG.standard_normal((2, 5)))
        v = RNG.standard_normal((7, 5))
        assert np.allclose(plane.apply(v) + plane.perp(v), v, atol=1e-14)
        assert np.allclose(project(plane, v), plane.apply(v))
        assert np.allclose(project_perp(plane, v), plane.perp(v))
        # projected part is a fixed point, perp part annihilates
        assert np.allclose(plane.apply(plane.apply(v)), plane.apply(v), atol=1e-13)
        assert np.max(np.abs(plane.apply(plane.perp(v)))) < 1e-13

    def test_frame_orthonormal_and_spanning(self):
        plane = plane_from_frame(RNG.standard_normal((3, 6)))
        F = plane.frame()
        assert F.shape == (3, 6)
        assert np.allclose(F @ F.T, np.eye(3), atol=1e-12)
        assert np.allclose(F.T @ F, plane.proj, atol=1e-12)

    def test_frame_sign_fix_is_deterministic(self):
        plane = plane_from_frame(RNG.standard_normal((2, 4)))
        F1, F2 = plane.frame(), plane.frame()
        assert F1.tobytes() == F2.tobytes()
        for row in F1:
            nz = np.nonzero(np.abs(row) > 1e-12)[0]
            assert row[nz[0]] > 0

    def test_distance_between_axes(self):
        e1 = plane_from_frame([[1.0, 0.0]])
        e2 = plane_from_frame([[0.0, 1.0]])
        assert e1.distance(e2) == pytest.approx(1.0, abs=1e-14)
        assert e1.distance(e1) == 0.0
        assert not e1.equals(e2)

    def test_rotated_line_distance_is_sine(self):
        # |P_theta - P_0|_op = |sin theta| for lines in the plane
        for theta in [0.1, 0.4, math.pi / 3]:
            line = plane_from_frame([[math.cos(theta), math.sin(theta)]])
            base = plane_from_frame([[1.0, 0.0]])
            assert line.distance(base) == pytest.approx(abs(math.sin(theta)), abs=1e-12)

    def test_rejects_bad_projectors(self):
        with pytest.raises(ValueError):
            Plane(proj=np.array([[1.0, 0.1], [0.0, 0.0]]), m=1)
        with pytest.raises(ValueError):
            Plane(proj=np.diag([0.5, 0.5]), m=1)
        with pytest.raises(ValueError):
            Plane(proj=np.eye(2), m=1)
        with pytest.raises(ValueError):
            Plane(proj=np.eye(3)[:2], m=1)

    def test_proj_is_read_only(self):
        plane = plane_from_frame([[1.0, 0.0, 0.0]])
        with pytest.raises(ValueError):
            plane.proj[0, 0] = 2.0

    def test_rank_deficient_frames_rejected(self):
        with pytest.raises(RankDeficient):
            plane_from_frame([[1.0, 0.0], [1.0, 1e-9]])
        with pytest.raises(RankDeficient):
            plane_from_frame(np.zeros((1, 3)))

    @given(
        arrays(np.float64, (2, 4), elements=st.floats(-10, 10, allow_nan=False)),
    )
    @settings(max_examples=50, deadline=None)
    def test_projector_laws_hold_whenever_construction_succeeds(self, V):
        try:
            plane = plane_from_frame(V)
        except RankDeficient:
            return
        P = plane.proj
        assert np.max(np.abs(P - P.T)) <= 1e-12
        assert np.max(np.abs(P @ P - P)) <= 1e-10
        assert abs(np.trace(P) - 2.0) <= 1e-10


class TestContainers:
    def test_halfspace_sdf_is_last_coordinate(self):
        H = halfspace(3)
        x = RNG.standard_normal((20, 3))
        assert np.array_equal(H.sdf(x), x[:, -1])
        g = H.grad_sdf(x)
        assert np.array_equal(g[:, :2], np.zeros((20, 2)))
        assert np.array_equal(g[:, 2], np.ones(20))
        assert not H.hess_sdf(x).any()
        assert H.tubular_radius == np.inf

    def test_ball_sdf_sign_convention(self):
        B = ball(2.0, [1.0, 0.0, 0.0])
        assert B.sdf(np.array([1.0, 0.0, 0.0])) == 2.0
        assert B.sdf(np.array([3.0, 0.0, 0.0])) == 0.0
        assert B.sdf(np.array([4.0, 0.0, 0.0])) == -1.0
        # inward normal on the wall points back toward the center
        nu = B.grad_sdf(np.array([3.0, 0.0, 0.0]))
        assert np.allclose(nu, [-1.0, 0.0, 0.0], atol=1e-15)

    def test_ball_hessian_matches_finite_differences(self):
        B = ball(1.5, [0.0, -0.5])
        x = RNG.standard_normal((10, 2)) * 2.0
        x = x[np.abs(B.sdf(x)) < 1.0]
        H = B.hess_sdf(x)
        assert np.allclose(H, fd_hessian_sdf(B, x), atol=1e-6)

    def test_ball_rejects_nonpositive_radius(self):
        with pytest.raises(ValueError):
            ball(0.0, [0.0, 0.0])
        with pytest.raises(ValueError):
            ball(-1.0, [0.0, 0.0])

    def test_check_container_unit_gradient(self):
        probes = RNG.standard_normal((50, 3))
        assert check_container(halfspace(3), probes) <= 1e-12
        assert check_container(ball(3.0, np.zeros(3)), probes) <= 1e-12
        far = np.full((4, 3), 100.0)
        assert check_container(ball(1.0, np.zeros(3)), far) == 0.0

    def test_normal_and_tangent_on_wall(self):
        H = halfspace(3)
        nu, T = normal_and_tangent(H, np.array([0.3, -0.7, 0.0]))
        assert np.array_equal(nu, [0.0, 0.0, 1.0])
        assert np.allclose(T, np.diag([1.0, 1.0, 0.0]), atol=1e-15)
        assert np.allclose(T @ nu, 0.0, atol=1e-15)

    def test_normal_and_tangent_off_wall_raises(self):
        with pytest.raises(NotOnSurface):
            normal_and_tangent(halfspace(2), np.array([0.0, 1e-6]))


class TestContactAngle:
    def test_constant_angle_values_and_gradient(self):
        field = constant_angle(math.pi / 3, 3)
        x = RNG.standard_normal((6, 3))
        assert np.allclose(field.beta(x), math.pi / 3)
        assert not field.grad_beta(x).any()

    @pytest.mark.parametrize("bad", [0.0, math.pi, -0.1, 3.5])
    def test_angle_domain_is_open_interval(self, bad):
        with pytest.raises(ValueError):
            constant_angle(bad, 3)
