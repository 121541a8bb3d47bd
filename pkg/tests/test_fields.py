import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from capvar.errors import FieldClassError
from capvar import fields as fields_mod
from capvar.fields import (
    PlateauBump,
    check_jacobian,
    check_tangential,
    interior_field,
    plateau_field,
    plateau_profile,
    plateau_profile_d,
    plateau_weight,
    standard_general_battery,
    standard_tangential_battery,
    unit_weight,
)
from capvar.geometry import halfspace

from oracles import fd_jacobian

RNG = np.random.default_rng(31)


class TestPlateauProfile:
    def test_plateau_regions(self):
        t = np.array([-4.0, -3.0, -1.0, 0.0, 0.5, 1.0, 2.0, 3.0, 5.0])
        c = plateau_profile(t, 1.0, 3.0)
        assert np.array_equal(c[np.abs(t) <= 1.0], np.ones(4))
        assert np.array_equal(c[np.abs(t) >= 3.0], np.zeros(4))
        assert 0.0 < c[np.abs(t) == 2.0][0] < 1.0

    def test_profile_is_even_and_monotone_on_taper(self):
        t = np.linspace(1.0, 3.0, 200)
        c = plateau_profile(t, 1.0, 3.0)
        assert np.all(np.diff(c) <= 0)
        assert np.allclose(plateau_profile(-t, 1.0, 3.0), c)

    def test_derivative_matches_finite_differences(self):
        t = np.linspace(-3.5, 3.5, 141)
        t = t[np.abs(np.abs(t) - 1.0) > 1e-3]  # skip the joint itself
        step = 1e-6
        fd = (plateau_profile(t + step, 1.0, 3.0) - plateau_profile(t - step, 1.0, 3.0)) / (2 * step)
        assert np.allclose(plateau_profile_d(t, 1.0, 3.0), fd, atol=1e-7)

    def test_smooth_joints(self):
        # C-infinity glue: derivative tends to 0 at both ends of the taper
        eps = np.array([1e-3, 1e-4])
        assert np.max(np.abs(plateau_profile_d(1.0 + eps, 1.0, 3.0))) < 1e-2
        assert np.max(np.abs(plateau_profile_d(3.0 - eps, 1.0, 3.0))) < 1e-2


class TestPlateauBump:
    def test_tensor_product_structure(self):
        bump = PlateauBump(np.zeros(3), 1.0, 3.0)
        x = RNG.uniform(-4, 4, size=(50, 3))
        want = np.prod(plateau_profile(x, 1.0, 3.0), axis=1)
        assert np.allclose(bump.value(x), want, atol=1e-15)

    def test_gradient_matches_finite_differences(self):
        bump = PlateauBump(np.array([0.5, -0.25]), 0.7, 2.0)
        x = RNG.uniform(-2.5, 3.0, size=(40, 2))
        g = bump.grad(x)
        step = 1e-6
        for j in range(2):
            e = np.zeros(2)
            e[j] = step
            fd = (bump.value(x + e) - bump.value(x - e)) / (2 * step)
            assert np.allclose(g[:, j], fd, atol=1e-6)

    def test_rejects_bad_radii(self):
        with pytest.raises(ValueError):
            PlateauBump(np.zeros(2), 3.0, 1.0)
        with pytest.raises(ValueError):
            PlateauBump(np.zeros(2), 0.0, 1.0)


class TestBatteries:
    @pytest.mark.parametrize("dim", [2, 3])
    def test_tangential_battery_size_and_kinds(self, dim):
        battery = standard_tangential_battery(halfspace(dim))
        if dim == 3:
            assert len(battery) == 20
        assert all(f.kind in ("tangential", "interior") for f in battery)
        assert len({f.name for f in battery}) == len(battery)

    @pytest.mark.parametrize("dim", [2, 3])
    def test_jacobians_match_finite_differences(self, dim):
        probes = RNG.uniform(-4.5, 4.5, size=(120, dim))
        for field in standard_tangential_battery(halfspace(dim)):
            assert check_jacobian(field, probes) < 1e-6, field.name

    def test_jacobians_against_independent_fd(self):
        probes = RNG.uniform(-4.0, 4.0, size=(40, 3))
        for field in standard_tangential_battery(halfspace(3))[:6]:
            J = field.jacobian(probes)
            assert np.allclose(J, fd_jacobian(field, probes), atol=1e-5), field.name

    def test_tangential_fields_vanish_normally_on_wall(self):
        H = halfspace(3)
        wall = RNG.uniform(-4.5, 4.5, size=(200, 3))
        wall[:, 2] = 0.0
        for field in standard_tangential_battery(H):
            assert check_tangential(field, H, wall) <= 1e-15, field.name

    def test_general_battery_has_normal_components(self):
        H = halfspace(3)
        wall = RNG.uniform(-3.0, 3.0, size=(100, 3))
        wall[:, 2] = 0.0
        battery = standard_general_battery(3)
        assert any(check_tangential(f, H, wall) > 1e-3 for f in battery)
        probes = RNG.uniform(-4.5, 4.5, size=(60, 3))
        for field in battery:
            assert check_jacobian(field, probes) < 1e-6, field.name

    def test_support_mask_implies_zero_value(self):
        x = RNG.uniform(-6, 6, size=(400, 3))
        for field in standard_tangential_battery(halfspace(3)):
            outside = ~field.support_mask(x)
            if np.any(outside):
                assert not field.value(x[outside]).any(), field.name

    def test_rank_one_factorization_consistent(self):
        x = RNG.uniform(-4, 4, size=(80, 3))
        seen = 0
        for field in standard_tangential_battery(halfspace(3)):
            if field.rank_one is None:
                continue
            seen += 1
            v, grad_amp = field.rank_one
            J = np.einsum("i,kj->kij", v, grad_amp(x))
            assert np.allclose(J, field.jacobian(x), atol=1e-13), field.name
        assert seen > 0


class TestFieldConstructors:
    def test_interior_field_vanishes_near_wall(self):
        field = interior_field(3, [0.0, 0.0, 2.0], 0.5, 1.0, [1.0, 0.0, 0.0])
        assert field.kind == "interior"
        near_wall = RNG.uniform(-4, 4, size=(100, 3))
        near_wall[:, 2] = RNG.uniform(0.0, 0.5, size=100)
        assert not field.value(near_wall).any()

    def test_plateau_field_is_amplitude_times_direction(self):
        bump = PlateauBump(np.zeros(2), 1.0, 2.0)
        direction = np.array([0.6, 0.8])
        field = plateau_field("probe", bump, direction, "general")
        x = RNG.uniform(-2.5, 2.5, size=(30, 2))
        assert np.allclose(field.value(x), bump.value(x)[:, None] * direction, atol=1e-15)

    def test_unknown_kind_rejected(self):
        with pytest.raises(FieldClassError):
            fields_mod.TestField(
                name="bad",
                kind="sideways",
                value=lambda x: x,
                jacobian=lambda x: x,
                support_radius=1.0,
            )

    def test_weights_are_nonnegative_with_exact_gradients(self):
        w = plateau_weight("w", PlateauBump(np.zeros(2), 1.0, 2.0))
        x = RNG.uniform(-3, 3, size=(50, 2))
        assert np.all(w.value(x) >= 0)
        step = 1e-6
        for j in range(2):
            e = np.zeros(2)
            e[j] = step
            fd = (w.value(x + e) - w.value(x - e)) / (2 * step)
            assert np.allclose(w.gradient(x)[:, j], fd, atol=1e-6)
        u = unit_weight(3)
        y = RNG.standard_normal((5, 3))
        assert np.array_equal(u.value(y), np.ones(5))
        assert not u.gradient(y).any()


@given(st.floats(0.1, 2.0), st.floats(2.1, 5.0))
@settings(max_examples=40, deadline=None)
def test_profile_stays_in_unit_interval(a, b):
    t = np.linspace(-b - 1, b + 1, 101)
    c = plateau_profile(t, a, b)
    assert np.all(c >= 0.0) and np.all(c <= 1.0)
