"""Reference configurations with known capillary structure.

Every fixture builds four aligned objects: the interior varifold, its
boundary measure on the wall, the declared splitting of the first variation,
and a record of closed-form expectations that tests compare against.  Flat
fixtures are exact coordinate lattices (midpoint rule), the spherical ones
are coordinate or geodesic-polar samplings, and two synthetic cone fixtures
use dyadic ring radii so that dilations and ball-mass ratios are exact in
floating point, not merely accurate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from .capillary import BoundaryVarifold
from .errors import AngleIsOrthogonal, DegenerateChart
from .geometry import (
    ContactAngleField,
    Container,
    constant_angle,
    halfspace,
)
from .varifold import DiscreteVarifold, VariationDecomposition

ORTHO_TOL = 1e-4
CONSTRUCTION_TOL = 1e-8


@dataclass(frozen=True)
class ExampleFixture:
    """A varifold, its boundary data, and the expectations they satisfy."""

    name: str
    V: DiscreteVarifold
    boundary: BoundaryVarifold
    dec: VariationDecomposition
    container: Container
    angle: ContactAngleField
    h: float
    expected: dict = dc_field(default_factory=dict)

    def basic_checks(self) -> dict[str, float]:
        """Construction-time consistency: bundle gaps and splitting alignment."""
        sd, g1, g2 = self.boundary.bundle_gap(self.container, self.angle)
        bad_h, bad_ht = self.dec.check_alignment(self.V, self.container)
        return {
            "wall_distance": sd,
            "angle_gap": g1,
            "orthogonality_gap": g2,
            "h_tangency": bad_h,
            "ht_normality": bad_ht,
        }


def _finish(fix: ExampleFixture) -> ExampleFixture:
    checks = fix.basic_checks()
    worst = max(checks.values())
    if worst > CONSTRUCTION_TOL:
        raise AssertionError(f"fixture {fix.name} inconsistent: {checks}")
    return fix


def _midpoints(extent: float, h: float) -> np.ndarray:
    n = int(round(2 * extent / h))
    return -extent + (np.arange(n) + 0.5) * h


def _midpoints_pos(extent: float, h: float) -> np.ndarray:
    n = int(round(extent / h))
    return (np.arange(n) + 0.5) * h


def _nodes(extent: float, h: float) -> np.ndarray:
    n = int(round(extent / h))
    return np.arange(-n, n + 1) * h


def _check_angle(beta0: float) -> None:
    if not 0.0 < beta0 < np.pi:
        raise ValueError("contact angle must lie in (0, pi)")
    if abs(math.cos(beta0)) < ORTHO_TOL:
        raise AngleIsOrthogonal(
            "angle within 1e-4 of pi/2: the two planar sheets coincide"
        )


def _half_plane_atoms(
    v: np.ndarray, taus: np.ndarray, shift: np.ndarray, extent: float, h: float
) -> tuple[np.ndarray, np.ndarray]:
    """Lattice atoms of {shift + t v + sum_a s_a tau_a : t > 0} with cell h^m."""
    d = v.size
    m = 1 + taus.shape[0]
    t = _midpoints_pos(extent, h)
    grids = [t] + [_midpoints(extent, h) for _ in range(m - 1)]
    mesh = np.meshgrid(*grids, indexing="ij")
    coords = np.stack([g.ravel() for g in mesh], axis=1)
    x = shift + coords[:, :1] * v
    for a in range(m - 1):
        x = x + coords[:, a + 1 : a + 2] * taus[a]
    P = v[:, None] * v[None, :]
    for a in range(m - 1):
        P = P + taus[a][:, None] * taus[a][None, :]
    return x, np.broadcast_to(P, (x.shape[0], d, d)).copy()


def _line_sites(
    taus: np.ndarray, shift: np.ndarray, extent: float, h: float, lattice: str
) -> np.ndarray:
    grids = [
        (_midpoints if lattice == "mid" else _nodes)(extent, h) for _ in range(taus.shape[0])
    ]
    if not grids:
        return shift[None, :].copy()
    mesh = np.meshgrid(*grids, indexing="ij")
    coords = np.stack([g.ravel() for g in mesh], axis=1)
    x = np.broadcast_to(shift, (coords.shape[0], shift.size)).copy()
    for a in range(taus.shape[0]):
        x += coords[:, a : a + 1] * taus[a]
    return x


def _pair_directions(beta0: float, d: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    c, s = math.cos(beta0), math.sin(beta0)
    e = np.eye(d)
    v_plus = c * e[0] + s * e[d - 1]
    v_minus = -c * e[0] + s * e[d - 1]
    taus = e[1 : d - 1]
    return v_plus, v_minus, taus


def _weighted_pair(
    beta0: float,
    weights: tuple[float, float],
    separation: float,
    m: int,
    h: float,
    extent: float,
    name: str,
) -> ExampleFixture:
    """Common body of the planar-pair family.

    Two half-planes rising from wall lines at +/- separation along e1, with
    the given mass fractions.  separation = 0 collapses both lines onto the
    e2 axis and the fractions control the fiber there.
    """
    _check_angle(beta0)
    d = m + 1
    v_plus, v_minus, taus = _pair_directions(beta0, d)
    e1 = np.eye(d)[0]
    sgn = 1.0 if math.cos(beta0) > 0 else -1.0
    shifts = (separation * sgn * e1, -separation * sgn * e1)
    xs, Ps, ws = [], [], []
    bx, bP, bs = [], [], []
    px, pw = [], []
    for (frac, vdir, shift) in zip(weights, (v_plus, v_minus), shifts):
        if frac == 0.0:
            continue
        x, P = _half_plane_atoms(vdir, taus, shift, extent, h)
        xs.append(x)
        Ps.append(P)
        ws.append(np.full(x.shape[0], frac * h**m))
        sites = _line_sites(taus, shift, extent, h, "mid")
        bx.append(sites)
        proj = vdir[:, None] * vdir[None, :]
        for a in range(m - 1):
            proj = proj + taus[a][:, None] * taus[a][None, :]
        bP.append(np.broadcast_to(proj, (sites.shape[0], d, d)).copy())
        bs.append(np.full(sites.shape[0], frac * h ** (m - 1)))
        px.append(sites)
        pw.append(np.full(sites.shape[0], frac * math.sin(beta0) * h ** (m - 1)))
    x = np.concatenate(xs)
    V = DiscreteVarifold(x=x, P=np.concatenate(Ps), w=np.concatenate(ws), m=m)
    boundary = BoundaryVarifold(
        x=np.concatenate(bx), P=np.concatenate(bP), sigma=np.concatenate(bs), m=m
    )
    dec = VariationDecomposition(
        H=np.zeros_like(x),
        H_tilde=np.zeros_like(x),
        perp_points=np.concatenate(px),
        perp_weights=np.concatenate(pw),
    )
    container = halfspace(d)
    angle = constant_angle(beta0, d)
    eps = weights[0] - weights[1]
    nv = math.sin(beta0) * np.eye(d)[d - 1] + eps * math.cos(beta0) * e1
    fix = ExampleFixture(
        name=name,
        V=V,
        boundary=boundary,
        dec=dec,
        container=container,
        angle=angle,
        h=h,
        expected={
            "beta0": beta0,
            "extent": extent,
            "density_origin": (weights[0] + weights[1]) / 2.0 if separation == 0.0 else None,
            "nv": nv,
            "wall_norm": abs(eps),
            "line_distance": 2.0 * separation,
            "perp_density": math.sin(beta0),
        },
    )
    return _finish(fix)


def make_plane_pair(beta0: float, m: int = 2, h: float = 0.02, extent: float = 4.0) -> ExampleFixture:
    """Two half-planes over a common wall line, each carrying half mass.

    The mean fiber conormal is vertical: the wall-tangential part cancels
    exactly, the wall density at the shared line is one half, and the first
    variation against tangential fields vanishes identically.
    """
    return _weighted_pair(beta0, (0.5, 0.5), 0.0, m, h, extent, "plane-pair")


def make_separated_pair(
    beta0: float, s: float, m: int = 2, h: float = 0.02, extent: float = 4.0
) -> ExampleFixture:
    """The pair with its sheets pulled apart along the wall by s each.

    At s = 0 this reproduces the plane pair atom for atom.  For s > 0 each
    wall line is a genuine contact line with a one-sided conormal, and the
    family loses the cancellation that the merged pair enjoys: the vanishing
    wall term reappears in the limit s -> 0 only after the two lines merge.
    """
    if s < 0:
        raise ValueError("separation must be nonnegative")
    fix = _weighted_pair(beta0, (0.5, 0.5), s, m, h, extent, "separated-pair")
    fix.expected["separation"] = s
    return fix


def make_perturbed_pair(
    beta0: float, eps: float, m: int = 2, h: float = 0.02, extent: float = 4.0
) -> ExampleFixture:
    """The pair with mass fractions (1 +/- eps)/2.

    The mean fiber conormal tilts: its wall part has length eps |cos beta|,
    so the induced wall direction carries weight eps.  At eps = 1 the lighter
    sheet disappears and the fiber is a single plane with unit mean conormal.
    """
    if not 0.0 <= eps <= 1.0:
        raise ValueError("eps must lie in [0, 1]")
    fix = _weighted_pair(
        beta0, ((1 + eps) / 2.0, (1 - eps) / 2.0), 0.0, m, h, extent, "perturbed-pair"
    )
    fix.expected["wall_norm"] = eps
    return fix


def make_half_plane(
    beta0: float, offset: float = 0.0, m: int = 2, h: float = 0.02, extent: float = 4.0
) -> ExampleFixture:
    """A single half-plane rising at the contact angle from an offset wall line.

    The one-sided counterpart of the separated pair: its conormal has nothing
    to cancel against, so the wall-tangential boundary term survives any
    limit the offset family takes.
    """
    if offset < 0:
        raise ValueError("offset must be nonnegative")
    fix = _weighted_pair(beta0, (1.0, 0.0), offset, m, h, extent, "half-plane")
    fix.expected["offset"] = offset
    return fix


def make_distinct_pair(beta0: float, h: float = 0.02, extent: float = 4.0) -> ExampleFixture:
    """Two unit-mass half-planes whose wall lines cross at the origin.

    One sheet rises from the e2 axis, the other from the e1 axis.  The
    boundary measure uses node lattices so both lines carry a site exactly
    at the crossing, where the fiber splits half and half between the two
    planes; every other site is a pure Dirac.
    """
    _check_angle(beta0)
    d, m = 3, 2
    c, s = math.cos(beta0), math.sin(beta0)
    e = np.eye(d)
    v1 = c * e[0] + s * e[2]
    v2 = c * e[1] + s * e[2]
    comps = ((v1, e[1]), (v2, e[0]))
    xs, Ps, ws, bx, bP, bs, px, pw = [], [], [], [], [], [], [], []
    for vdir, tau in comps:
        x, P = _half_plane_atoms(vdir, tau[None, :], np.zeros(d), extent, h)
        xs.append(x)
        Ps.append(P)
        ws.append(np.full(x.shape[0], h**m))
        sites = _line_sites(tau[None, :], np.zeros(d), extent, h, "node")
        bx.append(sites)
        proj = vdir[:, None] * vdir[None, :] + tau[:, None] * tau[None, :]
        bP.append(np.broadcast_to(proj, (sites.shape[0], d, d)).copy())
        bs.append(np.full(sites.shape[0], h))
        px.append(sites)
        pw.append(np.full(sites.shape[0], s * h))
    x = np.concatenate(xs)
    fix = ExampleFixture(
        name="distinct-pair",
        V=DiscreteVarifold(x=x, P=np.concatenate(Ps), w=np.concatenate(ws), m=m),
        boundary=BoundaryVarifold(
            x=np.concatenate(bx), P=np.concatenate(bP), sigma=np.concatenate(bs), m=m
        ),
        dec=VariationDecomposition(
            H=np.zeros_like(x),
            H_tilde=np.zeros_like(x),
            perp_points=np.concatenate(px),
            perp_weights=np.concatenate(pw),
        ),
        container=halfspace(d),
        angle=constant_angle(beta0, d),
        h=h,
        expected={
            "beta0": beta0,
            "extent": extent,
            "crossing": np.zeros(d),
            "cross_probs": (0.5, 0.5),
        },
    )
    return _finish(fix)


def _cap_interior(beta0: float, h: float, center: np.ndarray) -> tuple[np.ndarray, ...]:
    nu_cells = max(2, int(round(beta0 / h)))
    du = beta0 / nu_cells
    nv_cells = max(4, int(round(2 * np.pi * math.sin(beta0) / h)))
    dv = 2 * np.pi / nv_cells
    u = (np.arange(nu_cells) + 0.5) * du
    v = (np.arange(nv_cells) + 0.5) * dv
    U, Vv = np.meshgrid(u, v, indexing="ij")
    U, Vv = U.ravel(), Vv.ravel()
    su, cu, sv, cv = np.sin(U), np.cos(U), np.sin(Vv), np.cos(Vv)
    x = center + np.stack([su * cv, su * sv, cu], axis=1)
    e_u = np.stack([cu * cv, cu * sv, -su], axis=1)
    e_v = np.stack([-sv, cv, np.zeros_like(sv)], axis=1)
    P = e_u[:, :, None] * e_u[:, None, :] + e_v[:, :, None] * e_v[:, None, :]
    w = su * du * dv
    H = -2.0 * (x - center)
    return x, P, w, H


def _cap_rim(beta0: float, v: np.ndarray, widths: np.ndarray) -> tuple[np.ndarray, ...]:
    """Rim atoms at circle angles v with angular bin widths."""
    sb, cb = math.sin(beta0), math.cos(beta0)
    sv, cv = np.sin(v), np.cos(v)
    x = np.stack([sb * cv, sb * sv, np.zeros_like(v)], axis=1)
    e_u = np.stack([cb * cv, cb * sv, np.full_like(v, -sb)], axis=1)
    e_v = np.stack([-sv, cv, np.zeros_like(v)], axis=1)
    P = e_u[:, :, None] * e_u[:, None, :] + e_v[:, :, None] * e_v[:, None, :]
    sigma = sb * widths
    return x, P, sigma


def make_spherical_cap(
    beta0: float, m: int = 2, h: float = 0.02, mode: str = "uniform"
) -> ExampleFixture:
    """Spherical cap meeting the wall at angle beta0.

    The unit sphere centered at depth -cos(beta0) intersects the wall in a
    circle of radius sin(beta0); the part above the wall is a cap with mean
    curvature magnitude m and inward rim conormal rising at the contact
    angle.  mode "uniform" samples latitude strips (the workhorse for
    residual checks); mode "focused" places geodesic-polar rings around the
    rim point (sin beta0, 0, 0) with dyadically shrinking radii, resolving
    the fixture down to scales ~1e-4 for blow-up and monotonicity studies.
    m = 1 builds the circular-arc analogue in the plane.
    """
    if not 0.0 < beta0 < np.pi / 2 + 0.2:
        raise ValueError("cap construction expects an angle in (0, ~pi/2]")
    sb, cb = math.sin(beta0), math.cos(beta0)
    if m == 1:
        return _make_arc(beta0, h)
    if m != 2:
        raise ValueError("spherical cap supports m = 1 and m = 2")
    center = np.array([0.0, 0.0, -cb])
    if mode == "uniform":
        x, P, w, H = _cap_interior(beta0, h, center)
        nb = max(4, int(round(2 * np.pi * sb / h)))
        dvb = 2 * np.pi / nb
        vb = (np.arange(nb) + 0.5) * dvb
        bx, bP, bs = _cap_rim(beta0, vb, np.full(nb, dvb))
        perp_x, perp_w = bx, sb * bs
    elif mode == "focused":
        x, P, w, H, bx, bP, bs = _focused_cap(beta0, center)
        perp_x, perp_w = bx, sb * bs
    else:
        raise ValueError("mode must be 'uniform' or 'focused'")
    V = DiscreteVarifold(x=x, P=P, w=w, m=2)
    boundary = BoundaryVarifold(x=bx, P=bP, sigma=bs, m=2)
    dec = VariationDecomposition(
        H=H, H_tilde=np.zeros_like(x), perp_points=perp_x, perp_weights=perp_w
    )
    fix = ExampleFixture(
        name="cap",
        V=V,
        boundary=boundary,
        dec=dec,
        container=halfspace(3),
        angle=constant_angle(beta0, 3),
        h=h,
        expected={
            "beta0": beta0,
            "rim_radius": sb,
            "boundary_total": 2 * np.pi * sb,
            "mean_curv_norm": 2.0,
            "area": 2 * np.pi * (1 - cb),
            "rim_point": np.array([sb, 0.0, 0.0]),
            "center": center,
        },
    )
    if mode == "focused":
        fix.expected["band_chords"] = _band_chords()
    return _finish(fix)


def _make_arc(beta0: float, h: float) -> ExampleFixture:
    sb, cb = math.sin(beta0), math.cos(beta0)
    center = np.array([0.0, -cb])
    n = max(2, int(round(2 * beta0 / h)))
    du = 2 * beta0 / n
    u = -beta0 + (np.arange(n) + 0.5) * du
    x = center + np.stack([np.sin(u), np.cos(u)], axis=1)
    tau = np.stack([np.cos(u), -np.sin(u)], axis=1)
    P = tau[:, :, None] * tau[:, None, :]
    w = np.full(n, du)
    H = -(x - center)
    ub = np.array([beta0, -beta0])
    bx = center + np.stack([np.sin(ub), np.cos(ub)], axis=1)
    taub = np.stack([np.cos(ub), -np.sin(ub)], axis=1)
    bP = taub[:, :, None] * taub[:, None, :]
    bs = np.ones(2)
    fix = ExampleFixture(
        name="arc",
        V=DiscreteVarifold(x=x, P=P, w=w, m=1),
        boundary=BoundaryVarifold(x=bx, P=bP, sigma=bs, m=1),
        dec=VariationDecomposition(
            H=H,
            H_tilde=np.zeros_like(x),
            perp_points=bx,
            perp_weights=np.full(2, sb),
        ),
        container=halfspace(2),
        angle=constant_angle(beta0, 2),
        h=h,
        expected={
            "beta0": beta0,
            "boundary_total": 2.0,
            "mean_curv_norm": 1.0,
            "length": 2 * beta0,
            "center": center,
            "rim_point": np.array([sb, 0.0]),
        },
    )
    return _finish(fix)


_RING_RATIO = 2.0 ** (-0.125)
_PSI_MIN = 2.0**-14
_N_OMEGA = 192
_RIM_LEVELS = 26


def _ring_psis() -> np.ndarray:
    n = int(np.ceil(np.log(np.pi / _PSI_MIN) / -np.log(_RING_RATIO)))
    return np.pi * _RING_RATIO ** np.arange(n + 1)


def _band_chords() -> np.ndarray:
    return 2.0 * np.sin(_ring_psis() / 2.0)


def _focused_cap(beta0: float, center: np.ndarray) -> tuple[np.ndarray, ...]:
    """Geodesic-polar sampling of the cap around the rim point.

    Rings of geodesic radius psi around the pole x0 shrink geometrically by
    2^(-1/4), so every atom ring maps onto a deeper one under dyadic
    dilation up to the slowly varying angular clipping.  Each ring holds a
    fixed count of equal-width angular cells over the admissible arc (the
    part of the geodesic circle above the wall).
    """
    sb, cb = math.sin(beta0), math.cos(beta0)
    x0 = np.array([sb, 0.0, 0.0])
    p = x0 - center
    a = np.array([cb, 0.0, -sb])
    b = np.array([0.0, 1.0, 0.0])
    psis = _ring_psis()
    xs, ws = [], []
    for j in range(len(psis) - 1):
        hi, lo = psis[j], psis[j + 1]
        psi = 0.5 * (hi + lo)
        # admissible arc: points of the geodesic circle with x3 >= 0
        cos_bound = cb * (math.cos(psi) - 1.0) / (sb * math.sin(psi))
        if cos_bound >= 1.0:
            om_lo, om_hi = 0.0, 2 * np.pi
        elif cos_bound <= -1.0:
            continue
        else:
            w_lo = math.acos(cos_bound)
            om_lo, om_hi = w_lo, 2 * np.pi - w_lo
        dom = (om_hi - om_lo) / _N_OMEGA
        om = om_lo + (np.arange(_N_OMEGA) + 0.5) * dom
        ring = (
            center
            + math.cos(psi) * p
            + math.sin(psi) * (np.cos(om)[:, None] * a + np.sin(om)[:, None] * b)
        )
        xs.append(ring)
        ws.append(np.full(_N_OMEGA, math.sin(psi) * (hi - lo) * dom))
    x = np.concatenate(xs)
    w = np.concatenate(ws)
    rel = x - center
    e3 = rel[:, 2]
    # drop roundoff stragglers below the wall; the clipping bound is exact only
    # in exact arithmetic
    keep = x[:, 2] >= -1e-12
    x, w, rel = x[keep], w[keep], rel[keep]
    P = np.eye(3)[None] - rel[:, :, None] * rel[:, None, :]
    H = -2.0 * rel
    bx, bP, bs = _focused_rim(beta0)
    return x, P, w, H, bx, bP, bs


def _focused_rim(beta0: float) -> tuple[np.ndarray, ...]:
    v_max = np.pi / 2
    edges = [v_max * 2.0**-i for i in range(_RIM_LEVELS + 1)]
    mids, widths = [], []
    for i in range(_RIM_LEVELS):
        mids.append(0.5 * (edges[i] + edges[i + 1]))
        widths.append(edges[i] - edges[i + 1])
    mids.append(0.5 * edges[-1])
    widths.append(edges[-1])
    mids = np.array(mids)
    widths = np.array(widths)
    v = np.concatenate([mids, -mids])
    wid = np.concatenate([widths, widths])
    n_far = 64
    far_w = (2 * np.pi - 2 * v_max) / n_far
    far = v_max + (np.arange(n_far) + 0.5) * far_w
    v = np.concatenate([v, far])
    wid = np.concatenate([wid, np.full(n_far, far_w)])
    return _cap_rim(beta0, v, wid)


def make_cap_union(beta0: float, h: float = 0.02) -> ExampleFixture:
    """A capillary cap next to a hemisphere meeting the wall orthogonally.

    The hemisphere's rim planes project the wall normal to full length, so
    they lie outside the angle-beta0 bundle and carry no boundary measure:
    the fixture's boundary data lives over the cap's rim alone, while the
    wall-normal part of the splitting sees both rims.
    """
    _check_angle(beta0)
    sb, cb = math.sin(beta0), math.cos(beta0)
    cap_center = np.array([0.0, 0.0, -cb])
    x1, P1, w1, H1 = _cap_interior(beta0, h, cap_center)
    hemi_center = np.array([2.5, 0.0, 0.0])
    x2, P2, w2, H2 = _cap_interior(np.pi / 2, h, hemi_center)
    nb = max(4, int(round(2 * np.pi * sb / h)))
    dvb = 2 * np.pi / nb
    vb = (np.arange(nb) + 0.5) * dvb
    bx, bP, bs = _cap_rim(beta0, vb, np.full(nb, dvb))
    nb2 = max(4, int(round(2 * np.pi / h)))
    dv2 = 2 * np.pi / nb2
    v2 = (np.arange(nb2) + 0.5) * dv2
    rim2 = hemi_center + np.stack([np.cos(v2), np.sin(v2), np.zeros(nb2)], axis=1)
    x = np.concatenate([x1, x2])
    fix = ExampleFixture(
        name="cap-union",
        V=DiscreteVarifold(
            x=x, P=np.concatenate([P1, P2]), w=np.concatenate([w1, w2]), m=2
        ),
        boundary=BoundaryVarifold(x=bx, P=bP, sigma=bs, m=2),
        dec=VariationDecomposition(
            H=np.concatenate([H1, H2]),
            H_tilde=np.zeros_like(x),
            perp_points=np.concatenate([bx, rim2]),
            perp_weights=np.concatenate([sb * bs, np.full(nb2, dv2)]),
        ),
        container=halfspace(3),
        angle=constant_angle(beta0, 3),
        h=h,
        expected={
            "beta0": beta0,
            "boundary_total": 2 * np.pi * sb,
            "center": cap_center,
            "hemisphere_center": hemi_center,
        },
    )
    return _finish(fix)


def _dyadic_ring_masses(levels: int) -> tuple[np.ndarray, np.ndarray]:
    """Radii 2^-j and ring masses making mass(B_r)/r^2 exactly one.

    Ring j carries 3 * 4^(-j-1), the area-like mass of the dyadic annulus,
    and a center atom carries the leftover 4^(-levels-1); every partial sum
    is a short binary fraction, so ball masses are exact in floating point.
    """
    j = np.arange(levels + 1)
    radii = np.ldexp(1.0, -j)
    masses = 3.0 * np.ldexp(1.0, -2 * (j + 1))
    return radii, masses


def make_ring_plane(levels: int = 14, n_theta: int = 64) -> DiscreteVarifold:
    """Flat disc through the origin sampled on dyadic rings.

    Built so that mass(B_r)/r^2 is the same floating-point number at every
    ring radius: ring masses are binary fractions that telescope exactly and
    positions lie in the plane bit-exactly.  The perpendicular term of the
    interior comparison vanishes identically, giving a zero-slack curve.
    This is a free disc away from any wall, so it is returned bare.
    """
    radii, masses = _dyadic_ring_masses(levels)
    theta = (np.arange(n_theta) + 0.5) * (2 * np.pi / n_theta)
    xs = [np.zeros((1, 3))]
    ws = [np.array([np.ldexp(1.0, -2 * (levels + 1))])]
    for r, mass in zip(radii, masses):
        ring = np.stack([r * np.cos(theta), r * np.sin(theta), np.zeros(n_theta)], axis=1)
        xs.append(ring)
        ws.append(np.full(n_theta, mass / n_theta))
    x = np.concatenate(xs)
    w = np.concatenate(ws)
    P = np.zeros((3, 3))
    P[0, 0] = P[1, 1] = 1.0
    return DiscreteVarifold(
        x=x, P=np.broadcast_to(P, (x.shape[0], 3, 3)).copy(), w=w, m=2
    )


def make_half_plane_cone(
    beta0: float, levels: int = 14, n_theta: int = 64
) -> ExampleFixture:
    """Half-plane rising from the wall, sampled on dyadic polar rings.

    The exact cone: ring masses are binary fractions arranged so that
    mass(B_r)/r^2 is bit-identical at every ring radius and the wall-line
    measure satisfies sigma(B_r) = 2r exactly.  The transformed boundary
    curve is therefore constant before any growth correction, which pins the
    calibration search to the smallest rate on its grid.
    """
    _check_angle(beta0)
    d = 3
    c, s = math.cos(beta0), math.sin(beta0)
    v = np.array([c, 0.0, s])
    e2 = np.array([0.0, 1.0, 0.0])
    radii, masses = _dyadic_ring_masses(levels)
    theta = -np.pi / 2 + (np.arange(n_theta) + 0.5) * (np.pi / n_theta)
    ct, st = np.cos(theta), np.sin(theta)
    # the apex atom carries the halved geometric tail below the last ring
    xs = [np.zeros((1, 3))]
    ws = [np.array([np.ldexp(1.0, -2 * levels - 3)])]
    for r, mass in zip(radii, masses):
        xs.append((r * ct)[:, None] * v + (r * st)[:, None] * e2)
        ws.append(np.full(n_theta, 0.5 * mass / n_theta))
    x = np.concatenate(xs)
    w = np.concatenate(ws)
    P = v[:, None] * v[None, :] + e2[:, None] * e2[None, :]
    Pstack = np.broadcast_to(P, (x.shape[0], d, d)).copy()
    # wall line: dyadic bins [2^-j-1, 2^-j] on both sides plus a center atom,
    # sized so sigma(B_{2^-i}) = 2^(1-i) exactly
    j = np.arange(levels)
    pos = 1.5 * np.ldexp(1.0, -j - 1)
    sig = np.ldexp(1.0, -j - 1)
    bline = np.concatenate([pos, -pos, [0.0]])
    bsig = np.concatenate([sig, sig, [np.ldexp(1.0, -levels + 1)]])
    bx = bline[:, None] * e2
    bP = np.broadcast_to(P, (bx.shape[0], d, d)).copy()
    fix = ExampleFixture(
        name="half-plane-cone",
        V=DiscreteVarifold(x=x, P=Pstack, w=w, m=2),
        boundary=BoundaryVarifold(x=bx, P=bP, sigma=bsig, m=2),
        dec=VariationDecomposition(
            H=np.zeros_like(x),
            H_tilde=np.zeros_like(x),
            perp_points=bx,
            perp_weights=s * bsig,
        ),
        container=halfspace(d),
        angle=constant_angle(beta0, d),
        h=float(radii[-1]),
        expected={
            "beta0": beta0,
            "ratio_const": 0.5,
            "ring_radii": radii,
            "line_density": 1.0,
        },
    )
    return _finish(fix)


def sample_parametric(chart, lo, hi, cells, jacobian=None) -> DiscreteVarifold:
    """Midpoint sampling of a parametric m-surface.

    chart maps (k, m) parameter rows to (k, d) points; jacobian, if given,
    maps them to (k, d, m) frames, otherwise central differences supply the
    frame.  Weights are the Gram-determinant area elements times the cell
    volume.  Raises DegenerateChart when some cell's frame has Gram
    determinant below 1e-12.
    """
    lo = np.atleast_1d(np.asarray(lo, dtype=float))
    hi = np.atleast_1d(np.asarray(hi, dtype=float))
    m = lo.size
    cells = np.broadcast_to(np.asarray(cells, dtype=int), (m,))
    if np.any(cells < 1) or np.any(hi <= lo):
        raise ValueError("need hi > lo and at least one cell per axis")
    du = (hi - lo) / cells
    axes = [lo[a] + (np.arange(cells[a]) + 0.5) * du[a] for a in range(m)]
    mesh = np.meshgrid(*axes, indexing="ij")
    u = np.stack([g.ravel() for g in mesh], axis=1)
    x = np.asarray(chart(u), dtype=float)
    if jacobian is not None:
        frames = np.asarray(jacobian(u), dtype=float)
    else:
        step = 1e-6
        cols = []
        for a in range(m):
            e_a = np.zeros(m)
            e_a[a] = step
            cols.append((chart(u + e_a) - chart(u - e_a)) / (2 * step))
        frames = np.stack(cols, axis=2)
    G = np.einsum("kda,kdb->kab", frames, frames)
    detG = np.linalg.det(G)
    if np.any(detG < 1e-12):
        raise DegenerateChart("chart frame degenerates on the grid")
    Q, _ = np.linalg.qr(frames)
    P = Q @ np.swapaxes(Q, 1, 2)
    P = 0.5 * (P + np.swapaxes(P, 1, 2))
    w = np.sqrt(detG) * np.prod(du)
    return DiscreteVarifold(x=x, P=P, w=w, m=m)


def build_fixture(
    name: str,
    beta0: float,
    h: float = 0.02,
    extent: float = 4.0,
    separation: float = 0.5,
    eps: float = 0.1,
) -> ExampleFixture:
    """Construct a gallery fixture by name with shared tuning knobs."""
    if name == "plane-pair":
        return make_plane_pair(beta0, h=h, extent=extent)
    if name == "separated-pair":
        return make_separated_pair(beta0, separation, h=h, extent=extent)
    if name == "perturbed-pair":
        return make_perturbed_pair(beta0, eps, h=h, extent=extent)
    if name == "half-plane":
        return make_half_plane(beta0, h=h, extent=extent)
    if name == "distinct-pair":
        return make_distinct_pair(beta0, h=h, extent=extent)
    if name == "cap":
        return make_spherical_cap(beta0, h=h)
    if name == "cap-focused":
        return make_spherical_cap(beta0, h=h, mode="focused")
    if name == "cap-union":
        return make_cap_union(beta0, h=h)
    if name == "arc":
        return make_spherical_cap(beta0, m=1, h=h)
    if name == "half-plane-cone":
        return make_half_plane_cone(beta0)
    raise ValueError(f"unknown fixture {name!r}")


GALLERY = (
    "plane-pair",
    "separated-pair",
    "perturbed-pair",
    "half-plane",
    "distinct-pair",
    "cap",
    "cap-focused",
    "cap-union",
    "arc",
    "half-plane-cone",
)
