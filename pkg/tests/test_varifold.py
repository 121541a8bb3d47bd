import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from capvar.capillary import conormal
from capvar.errors import FieldClassError, FormatError
from capvar.fields import standard_general_battery, standard_tangential_battery
from capvar.gallery import make_plane_pair
from capvar.geometry import halfspace, plane_from_frame
from capvar.varifold import (
    DiscreteVarifold,
    VariationDecomposition,
    ball_mass,
    capillary_residual,
    first_variation,
    load_varifold,
    pushforward_dilation,
    restrict,
    save_varifold,
    weighted_pairing,
)

from oracles import brute_ball_mass, dense_first_variation, fsum_mass

RNG = np.random.default_rng(101)
BETA = math.pi / 3


def boundary_conormals(fix):
    nu = fix.container.grad_sdf(fix.boundary.x)
    return conormal(fix.boundary.P, nu)


def random_varifold(k=60, d=3, m=2, seed=5):
    rng = np.random.default_rng(seed)
    x = rng.uniform(-3.5, 3.5, size=(k, d))
    P = np.stack([plane_from_frame(rng.standard_normal((m, d))).proj for _ in range(k)])
    w = rng.uniform(0.1, 2.0, size=k)
    return DiscreteVarifold(x=x, P=P, w=w, m=m)


class TestConstruction:
    def test_shapes_and_masks(self):
        V = random_varifold()
        assert V.dim == 3 and V.size == 60 and V.m == 2
        with pytest.raises(ValueError):
            V.x[0, 0] = 1.0

    def test_rejects_misaligned_arrays(self):
        V = random_varifold(k=4)
        with pytest.raises(ValueError):
            DiscreteVarifold(x=V.x, P=V.P[:3], w=V.w, m=2)
        with pytest.raises(ValueError):
            DiscreteVarifold(x=V.x, P=V.P, w=V.w[:3], m=2)
        with pytest.raises(ValueError):
            DiscreteVarifold(x=V.x[:, :2], P=V.P, w=V.w, m=2)

    def test_rejects_bad_weights_and_planes(self):
        V = random_varifold(k=4)
        w = V.w.copy()
        w[1] = 0.0
        with pytest.raises(ValueError):
            DiscreteVarifold(x=V.x, P=V.P, w=w, m=2)
        w[1] = np.nan
        with pytest.raises(ValueError):
            DiscreteVarifold(x=V.x, P=V.P, w=w, m=2)
        P = np.array(V.P)
        P[2] *= 0.5
        with pytest.raises(ValueError):
            DiscreteVarifold(x=V.x, P=P, w=V.w, m=2)
        with pytest.raises(ValueError):
            DiscreteVarifold(x=V.x, P=V.P, w=V.w, m=3)

    def test_empty_varifold_is_legal(self):
        V = DiscreteVarifold(x=np.zeros((0, 2)), P=np.zeros((0, 2, 2)), w=np.zeros(0), m=1)
        assert V.mass() == 0.0


class TestMeasureOperations:
    def test_mass_matches_fsum(self):
        V = random_varifold(k=999)
        assert V.mass() == pytest.approx(fsum_mass(V.w), rel=1e-15)

    def test_restrict_and_ball_mass(self):
        V = random_varifold(k=200)
        c = np.array([0.5, -0.5, 0.0])
        inside = np.linalg.norm(V.x - c, axis=1) <= 1.5
        sub = restrict(V, inside)
        assert sub.size == int(np.sum(inside))
        assert ball_mass(V, c, 1.5) == pytest.approx(brute_ball_mass(V, c, 1.5), rel=1e-14)
        assert ball_mass(V, c, 1.5) == pytest.approx(sub.mass(), rel=1e-14)

    def test_dilation_rescales_mass_by_power_law(self):
        V = random_varifold(k=120, m=2)
        c = np.array([0.25, 0.0, 0.0])
        r = 0.5
        W = pushforward_dilation(V, c, r)
        # dyadic radius: the map is bit-exact
        assert np.array_equal(W.x, (V.x - c) / r)
        assert np.array_equal(W.w, V.w / r**2)
        assert np.array_equal(W.P, V.P)
        with pytest.raises(ValueError):
            pushforward_dilation(V, c, 0.0)

    def test_dilation_preserves_density_ratio(self):
        V = random_varifold(k=300, m=2, seed=11)
        c = np.zeros(3)
        r = 0.25
        # mass_W(B_1) = r^-m mass_V(B_r) is the blow-up bookkeeping identity
        W = pushforward_dilation(V, c, r)
        assert ball_mass(W, c, 1.0) == pytest.approx(ball_mass(V, c, r) / r**2, rel=1e-13)


class TestFirstVariation:
    def test_matches_dense_jacobian_oracle(self):
        V = random_varifold(k=150, seed=23)
        for field in standard_tangential_battery(halfspace(3)):
            got = first_variation(V, field)
            want = dense_first_variation(V, field)
            assert got == pytest.approx(want, rel=1e-12, abs=1e-13), field.name

    def test_vanishes_for_translation_invariant_flat_sheet(self):
        # a full flat sheet has zero first variation against interior bumps
        fix = make_plane_pair(BETA)
        for field in standard_tangential_battery(halfspace(3)):
            if field.kind == "interior":
                assert abs(first_variation(fix.V, field)) < 1e-10, field.name

    def test_weighted_pairing_is_inner_product_sum(self):
        V = random_varifold(k=40, seed=3)
        vec = RNG.standard_normal((40, 3))
        field = standard_tangential_battery(halfspace(3))[0]
        vals = field.value(V.x)
        want = fsum_mass(V.w * np.sum(vec * vals, axis=1))
        assert weighted_pairing(V.w, V.x, vec, field) == pytest.approx(want, rel=1e-13)

    def test_worker_count_never_changes_bits(self):
        fix = make_plane_pair(BETA)
        field = standard_tangential_battery(halfspace(3))[4]
        base = first_variation(fix.V, field, workers=1)
        assert first_variation(fix.V, field, workers=2) == base
        assert first_variation(fix.V, field, workers=8) == base


class TestResidualIdentity:
    def test_rejects_general_fields(self):
        fix = make_plane_pair(BETA)
        battery = standard_general_battery(3)
        with pytest.raises(FieldClassError):
            capillary_residual(
                fix.V,
                np.zeros_like(fix.V.x),
                fix.boundary.x,
                boundary_conormals(fix),
                fix.boundary.sigma,
                battery,
            )

    def test_misaligned_curvature_rejected(self):
        fix = make_plane_pair(BETA)
        with pytest.raises(ValueError):
            capillary_residual(
                fix.V,
                np.zeros((3, 3)),
                fix.boundary.x,
                boundary_conormals(fix),
                fix.boundary.sigma,
                standard_tangential_battery(halfspace(3)),
            )

    def test_report_carries_one_row_per_field(self):
        fix = make_plane_pair(BETA)
        battery = standard_tangential_battery(halfspace(3))
        rep = capillary_residual(
            fix.V,
            np.zeros_like(fix.V.x),
            fix.boundary.x,
            boundary_conormals(fix),
            fix.boundary.sigma,
            battery,
        )
        assert rep.field_names == tuple(f.name for f in battery)
        assert rep.absolute.shape == rep.relative.shape == (len(battery),)
        assert rep.max_rel >= 0.0 and rep.max_abs >= 0.0


class TestFileFormat:
    def test_round_trip_is_bit_exact(self, tmp_path):
        V = random_varifold(k=25, seed=9)
        path = tmp_path / "sheet.vfd"
        save_varifold(path, V)
        W, B = load_varifold(path)
        assert B is None
        assert W.m == V.m
        assert np.array_equal(W.x, V.x)
        assert np.array_equal(W.P, V.P)
        assert np.array_equal(W.w, V.w)

    def test_round_trip_with_curvature_block(self, tmp_path):
        V = random_varifold(k=8, seed=2)
        B = RNG.standard_normal((8, 3, 3, 3))
        path = tmp_path / "curved.vfd"
        save_varifold(path, V, B=B)
        W, B2 = load_varifold(path)
        assert np.array_equal(B2, B)
        assert np.array_equal(W.x, V.x)

    def test_header_format(self, tmp_path):
        V = random_varifold(k=3, seed=1)
        path = tmp_path / "v.vfd"
        save_varifold(path, V)
        header = path.read_text().splitlines()[0]
        assert header == "varifold m=2 n1=3 atoms=3"

    def test_curvature_shape_must_match(self, tmp_path):
        V = random_varifold(k=4)
        with pytest.raises(ValueError):
            save_varifold(tmp_path / "bad.vfd", V, B=np.zeros((4, 2, 2, 2)))

    @pytest.mark.parametrize(
        "text",
        [
            "nonsense m=2 n1=3 atoms=1\n0 0 0 | 1 0 0 0 0 0 0 0 0 | 1\n",
            "varifold m=2 n1=3\n",
            "varifold m=2 n1=3 atoms=2\n0 0 0 | 1 0 0 0 1 0 0 0 0 | 1\n",
            "varifold m=1 n1=2 atoms=1\n0 0 | 1 0 0 0 | 1\nextra | 1 0 0 0 | 1\n",
            "varifold m=1 n1=2 atoms=1\n0 0 0 | 1 0 0 0 | 1\n",
            "varifold m=1 n1=2 atoms=1\nB: 1 2 3 4 5 6 7 8\n",
            "varifold m=1 n1=2 atoms=1\n0 0 | 1 0 0 0 | 1\nB: 1 2 3\n",
            "varifold m=1 n1=2 atoms=1\n0 0 ; 1 0 0 0 ; 1\n",
        ],
    )
    def test_malformed_files_raise_format_error(self, text, tmp_path):
        path = tmp_path / "broken.vfd"
        path.write_text(text)
        with pytest.raises(FormatError):
            load_varifold(path)

    def test_cap_survives_round_trip(self, tmp_path, cap):
        path = tmp_path / "cap.vfd"
        save_varifold(path, cap.V)
        W, _ = load_varifold(path)
        assert np.array_equal(W.x, cap.V.x)
        assert np.array_equal(W.P, cap.V.P)
        assert np.array_equal(W.w, cap.V.w)

    @given(
        st.integers(1, 12),
        st.floats(1e-3, 1e3),
        st.integers(0, 2**31 - 1),
    )
    @settings(max_examples=25, deadline=None)
    def test_round_trip_survives_any_scale(self, k, scale, seed, tmp_path):
        rng = np.random.default_rng(seed)
        x = rng.standard_normal((k, 2)) * scale
        P = np.stack([plane_from_frame(rng.standard_normal((1, 2))).proj for _ in range(k)])
        w = rng.uniform(0.5, 1.5, size=k) * scale
        V = DiscreteVarifold(x=x, P=P, w=w, m=1)
        path = tmp_path / f"h{seed % 977}.vfd"
        save_varifold(path, V)
        W, _ = load_varifold(path)
        assert np.array_equal(W.x, V.x) and np.array_equal(W.w, V.w)


class TestDecomposition:
    def test_alignment_flags_bad_vectors(self):
        fix = make_plane_pair(BETA)
        bad_h, bad_ht = fix.dec.check_alignment(fix.V, fix.container)
        assert bad_h <= 1e-10 and bad_ht <= 1e-10

    def test_rejects_negative_perp_weights(self):
        with pytest.raises(ValueError):
            VariationDecomposition(
                H=np.zeros((2, 3)),
                H_tilde=np.zeros((2, 3)),
                perp_points=np.zeros((1, 3)),
                perp_weights=np.array([-1.0]),
            )

    def test_rejects_mismatched_shapes(self):
        with pytest.raises(ValueError):
            VariationDecomposition(
                H=np.zeros((2, 3)),
                H_tilde=np.zeros((3, 3)),
                perp_points=np.zeros((0, 3)),
                perp_weights=np.zeros(0),
            )

    def test_cap_decomposition_aligns(self, cap):
        bad_h, bad_ht = cap.dec.check_alignment(cap.V, cap.container)
        assert bad_h <= 1e-8 and bad_ht <= 1e-8
