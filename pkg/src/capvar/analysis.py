"""Monotonicity curves, blow-up sequences, and compactness experiments.

Everything here consumes the discrete measures built elsewhere and produces
numbers a test can pin: density ratio curves and their exponentially
transformed monotone variants, interior monotonicity slack with the exact
piecewise radial integral, blow-up sequences metrized by a fixed dictionary
of tensor bumps, tangent-cone fits with a half-plane classification, the
barrier angle sweep, and the degeneracy experiment for families of boundary
measures whose conormal direction collapses in the limit.

The bumped "bounded-Lipschitz" distance is a lower bound for the true BL
metric, not the metric itself: it evaluates a deterministic dictionary of
1-Lipschitz, unit-bounded tent functions on a lattice at three scales.  That
keeps every run reproducible and is sharp enough to separate the measures a
desk-scale verification meets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from ._reduce import tree_sum
from .capillary import (
    BoundaryVarifold,
    Disintegration,
    cbp_check,
    co_normals,
    disintegrate,
)
from .errors import (
    ExponentError,
    NoLambdaFound,
    NotConical,
    NotContained,
    RadiusOrder,
)
from .fields import ScalarWeight
from .geometry import Plane, plane_from_frame
from .varifold import DiscreteVarifold, ball_mass, pushforward_dilation


def unit_ball_volume(m: int) -> float:
    """Lebesgue volume of the unit ball in dimension m."""
    return math.pi ** (m / 2) / math.gamma(m / 2 + 1)


# ---------------------------------------------------------------------------
# density curves and the boundary monotone quantity


@dataclass(frozen=True)
class DensityCurve:
    """Mass concentration of a varifold around a center point.

    ``ratios`` are the normalized densities mass(B_rho) / (omega_m rho^m),
    so a full m-plane through the center reads 1 and a half-plane reads 1/2.
    """

    center: np.ndarray
    radii: np.ndarray
    masses: np.ndarray
    ratios: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.radii, dtype=float)
        if r.ndim != 1 or r.size == 0 or r[0] <= 0.0 or np.any(np.diff(r) <= 0.0):
            raise RadiusOrder("radii must be positive and strictly increasing")


def density_curve(
    V: DiscreteVarifold, x0, rho_grid, workers: int = 1
) -> DensityCurve:
    """Ball-mass ratios ``mass(B_rho(x0)) / (omega_m rho^m)`` over a grid."""
    x0 = np.asarray(x0, dtype=float)
    rho = np.asarray(rho_grid, dtype=float)
    if rho.ndim != 1 or rho.size == 0 or rho[0] <= 0.0 or np.any(np.diff(rho) <= 0.0):
        raise RadiusOrder("radius grid must be positive and strictly increasing")
    masses = np.array([ball_mass(V, x0, r, workers=workers) for r in rho])
    omega = unit_ball_volume(V.m)
    return DensityCurve(
        center=x0, radii=rho, masses=masses, ratios=masses / (omega * rho**V.m)
    )


def boundary_monotone_quantity(
    curve: DensityCurve, p: float, m: int, lam: float
) -> np.ndarray:
    """The transformed curve e^(lam rho) [ (mass/rho^m)^(1/p) + lam rho^((p-m)/p) ].

    For an exact cone the ratio is constant and the result is strictly
    increasing for any lam > 0; for a smooth fixture at a contact point the
    calibrated lam absorbs the curvature drift.  Values may overflow to inf
    for very large lam; a certificate needs finite values, see
    :func:`monotone_slack`.
    """
    if p <= m:
        raise ExponentError(f"need p > m, got p={p} with m={m}")
    if lam <= 0.0:
        raise ValueError("lam must be positive")
    mass_over_rho = curve.ratios * unit_ball_volume(m)
    with np.errstate(over="ignore"):
        bracket = mass_over_rho ** (1.0 / p) + lam * curve.radii ** ((p - m) / p)
        return np.exp(lam * curve.radii) * bracket


def monotone_slack(values: np.ndarray) -> float:
    """Largest drawdown below the running maximum; 0.0 iff non-decreasing.

    A max over consecutive drops would let a long slow decline pass; the
    drawdown counts the cumulative loss, which is what monotonicity denies.
    """
    values = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(values)):
        raise ValueError("slack needs finite values; lower lam or shrink the radii")
    if values.size < 2:
        return 0.0
    return float(max(0.0, np.max(np.maximum.accumulate(values) - values)))


def calibrate_lambda(
    fixture,
    x0,
    p: float,
    rho_grid,
    slack_tol: float | None = None,
    workers: int = 1,
) -> tuple[float, float]:
    """Smallest lam on the dyadic grid 2^k, k = -10..10, certifying monotonicity.

    Returns ``(lam, slack)`` for the first grid value whose transformed curve
    is non-decreasing up to ``slack_tol`` (default five lattice spacings of
    the fixture).  A candidate that overflows float64 cannot certify anything
    and is skipped.  Raises NoLambdaFound when the whole grid fails.
    """
    if slack_tol is None:
        slack_tol = 5.0 * fixture.h
    curve = density_curve(fixture.V, x0, rho_grid, workers=workers)
    for k in range(-10, 11):
        lam = float(np.ldexp(1.0, k))
        values = boundary_monotone_quantity(curve, p, fixture.V.m, lam)
        if not np.all(np.isfinite(values)):
            continue
        slack = monotone_slack(values)
        if slack <= slack_tol:
            return lam, slack
    raise NoLambdaFound(
        f"no lam in 2^-10..2^10 reaches slack <= {slack_tol:.3e} on the grid"
    )


# ---------------------------------------------------------------------------
# interior monotonicity


def interior_monotonicity_check(
    V: DiscreteVarifold,
    H: np.ndarray | None,
    xi,
    h_weight: ScalarWeight,
    r1: float,
    r2: float,
    workers: int = 1,
) -> float:
    """Slack of the weighted interior monotonicity inequality between two radii.

    The inequality under test bounds the weighted ratio at the small radius by
    the ratio at the large one plus the radial integral of the weighted
    curvature term, minus the perpendicular deficit over the annulus:

        R(r1) <= R(r2) + int_{r1}^{r2} rho^{-m} M(rho) d rho - D(r1, r2),

    with R(r) = r^-m sum_{|x-xi|<=r} w h(x),  M(rho) the running total of
    w (h |H| + |P grad h|) over the ball, and D the annulus sum of
    w h |P_perp (x - xi)|^2 / |x - xi|^(m+2).  The radial integral is exact:
    M is a step function of rho and each step integrates in closed form.
    Returns RHS minus LHS; the inequality holds when this is >= -tol.
    """
    if not 0.0 < r1 < r2:
        raise RadiusOrder(f"need 0 < r1 < r2, got r1={r1}, r2={r2}")
    xi = np.asarray(xi, dtype=float)
    m = V.m
    rel = V.x - xi
    dist = np.linalg.norm(rel, axis=1)
    hv = np.asarray(h_weight.value(V.x), dtype=float)
    lhs = tree_sum(np.where(dist <= r1, V.w * hv, 0.0), workers=workers) / r1**m
    rhs = tree_sum(np.where(dist <= r2, V.w * hv, 0.0), workers=workers) / r2**m

    if H is None:
        hnorm = np.zeros(V.size)
    else:
        hnorm = np.linalg.norm(np.asarray(H, dtype=float), axis=1)
    grad_h = np.asarray(h_weight.gradient(V.x), dtype=float)
    tang_grad = np.linalg.norm(np.einsum("kij,kj->ki", V.P, grad_h), axis=1)
    dens = V.w * (hv * hnorm + tang_grad)
    radial = 0.0
    if np.any(dens != 0.0):
        order = np.argsort(dist, kind="stable")
        ds = dist[order]
        cum = np.cumsum(dens[order])
        cuts = np.unique(ds[(ds > r1) & (ds < r2)])
        knots = np.concatenate([[r1], cuts, [r2]])
        idx = np.searchsorted(ds, knots[:-1], side="right")
        running = np.where(idx > 0, cum[np.maximum(idx - 1, 0)], 0.0)
        if m == 1:
            pieces = np.log(knots[1:] / knots[:-1])
        else:
            pieces = (knots[:-1] ** (1 - m) - knots[1:] ** (1 - m)) / (m - 1)
        radial = float(np.sum(running * pieces))

    shell = (dist > r1) & (dist <= r2)
    perp = 0.0
    if np.any(shell):
        rs = rel[shell]
        perp_part = rs - np.einsum("kij,kj->ki", V.P[shell], rs)
        perp = tree_sum(
            V.w[shell]
            * hv[shell]
            * np.sum(perp_part**2, axis=1)
            / dist[shell] ** (m + 2),
            workers=workers,
        )
    return rhs + radial - perp - lhs


# ---------------------------------------------------------------------------
# bounded-Lipschitz lower bound over a fixed bump dictionary


@dataclass(frozen=True)
class BLDistanceReport:
    """Dictionary-based lower bound on the bounded-Lipschitz distance."""

    value: float
    dictionary_size: int
    region_radius: float


def _dictionary_scales(region_radius: float, count: int) -> np.ndarray:
    return region_radius / np.ldexp(1.0, np.arange(count))


def _crop(points: np.ndarray, weights: np.ndarray, radius: float):
    if points.size == 0:
        return points.reshape(0, points.shape[-1] if points.ndim == 2 else 0), weights[:0]
    keep = np.max(np.abs(points), axis=1) <= radius
    return points[keep], weights[keep]


def bl_distance(
    mu: tuple[np.ndarray, np.ndarray],
    nu: tuple[np.ndarray, np.ndarray],
    region_radius: float = 1.0,
    dictionary_size: int = 3,
    workers: int = 1,
) -> BLDistanceReport:
    """Max dictionary discrepancy |int f d(mu) - int f d(nu)|.

    The dictionary holds the tent functions min(1, s) (1 - |x - c|_inf / s)+
    for scales s = R, R/2, ..., R/2^(size-1) with centers on the lattice of
    spacing s inside |c|_inf <= R - s.  Every element is 1-Lipschitz and
    bounded by 1, so the maximum is a lower bound for the BL distance;
    elements vanish outside |x|_inf <= R, which crops both measures for free.

    Two Diracs at distance t apart along an axis separate at least t/4 as
    long as t is below the finest scale.
    """
    mx, mw = _crop(np.asarray(mu[0], dtype=float), np.asarray(mu[1], dtype=float), region_radius)
    nx, nw = _crop(np.asarray(nu[0], dtype=float), np.asarray(nu[1], dtype=float), region_radius)
    d = mx.shape[1] if mx.size else (nx.shape[1] if nx.size else 1)
    best = 0.0
    n_bumps = 0
    for s in _dictionary_scales(region_radius, dictionary_size):
        reach = region_radius - s
        steps = int(math.floor(reach / s + 1e-12))
        axis = s * np.arange(-steps, steps + 1)
        grids = np.meshgrid(*([axis] * d), indexing="ij")
        centers = np.stack([g.ravel() for g in grids], axis=1)
        amp = min(1.0, s)
        for lo in range(0, centers.shape[0], 64):
            batch = centers[lo : lo + 64]
            n_bumps += batch.shape[0]
            mu_int = np.zeros(batch.shape[0])
            nu_int = np.zeros(batch.shape[0])
            if mx.size:
                linf = np.max(np.abs(mx[None, :, :] - batch[:, None, :]), axis=2)
                f = amp * np.maximum(0.0, 1.0 - linf / s)
                mu_int = np.array(
                    [tree_sum(mw * row, workers=workers) for row in f]
                )
            if nx.size:
                linf = np.max(np.abs(nx[None, :, :] - batch[:, None, :]), axis=2)
                f = amp * np.maximum(0.0, 1.0 - linf / s)
                nu_int = np.array(
                    [tree_sum(nw * row, workers=workers) for row in f]
                )
            best = max(best, float(np.max(np.abs(mu_int - nu_int))))
    return BLDistanceReport(
        value=best, dictionary_size=n_bumps, region_radius=region_radius
    )


# ---------------------------------------------------------------------------
# blow-up sequences


@dataclass(frozen=True)
class BlowUpSequence:
    """Dilated copies of a varifold and its boundary measure at shrinking radii.

    ``v_distances`` (and ``g_distances`` when a boundary measure is present)
    hold the dictionary distances between consecutive terms; a sequence
    converging at rate O(r) shows consecutive ratios near 2 on dyadic radii.
    """

    center: np.ndarray
    radii: np.ndarray
    varifolds: tuple[DiscreteVarifold, ...]
    boundaries: tuple[BoundaryVarifold, ...] | None
    v_distances: np.ndarray
    g_distances: np.ndarray | None


def dilate_boundary(
    boundary: BoundaryVarifold, center, r: float
) -> BoundaryVarifold:
    """Pushforward of a boundary measure under x -> (x - center) / r.

    Weights rescale by r^(1 - m): one dimension lower than the interior law.
    """
    center = np.asarray(center, dtype=float)
    return BoundaryVarifold(
        x=(boundary.x - center) / r,
        P=boundary.P,
        sigma=boundary.sigma / r ** (boundary.m - 1),
        m=boundary.m,
    )


def blow_up(
    V: DiscreteVarifold,
    boundary: BoundaryVarifold | None,
    x0,
    radii,
    region_radius: float = 1.0,
    dictionary_size: int = 3,
    workers: int = 1,
) -> BlowUpSequence:
    """Rescale around x0 at each radius and metrize consecutive terms."""
    x0 = np.asarray(x0, dtype=float)
    radii = np.asarray(radii, dtype=float)
    if radii.ndim != 1 or radii.size == 0 or radii[-1] <= 0.0 or np.any(np.diff(radii) >= 0.0):
        raise RadiusOrder("blow-up radii must be positive and strictly decreasing")
    vs = tuple(pushforward_dilation(V, x0, r) for r in radii)
    gs = None
    if boundary is not None:
        gs = tuple(dilate_boundary(boundary, x0, r) for r in radii)
    v_dist = np.array(
        [
            bl_distance(
                (vs[j].x, vs[j].w),
                (vs[j + 1].x, vs[j + 1].w),
                region_radius=region_radius,
                dictionary_size=dictionary_size,
                workers=workers,
            ).value
            for j in range(len(vs) - 1)
        ]
    )
    g_dist = None
    if gs is not None:
        g_dist = np.array(
            [
                bl_distance(
                    (gs[j].x, gs[j].sigma),
                    (gs[j + 1].x, gs[j + 1].sigma),
                    region_radius=region_radius,
                    dictionary_size=dictionary_size,
                    workers=workers,
                ).value
                for j in range(len(gs) - 1)
            ]
        )
    return BlowUpSequence(
        center=x0,
        radii=radii,
        varifolds=vs,
        boundaries=gs,
        v_distances=v_dist,
        g_distances=g_dist,
    )


def wall_vector_decay(
    seq: BlowUpSequence, wall_vector, window_radius: float = 4.0
) -> np.ndarray:
    """Per-term max of |<x, wall_vector>| over rescaled boundary sites.

    Restricted to |x| <= window_radius; at a genuine contact point this decays
    linearly in the blow-up radius, with constant controlled by the quadratic
    flatness of the boundary measure.
    """
    if seq.boundaries is None:
        raise ValueError("the sequence carries no boundary measure")
    w = np.asarray(wall_vector, dtype=float)
    out = np.empty(len(seq.boundaries))
    for j, g in enumerate(seq.boundaries):
        near = np.linalg.norm(g.x, axis=1) <= window_radius
        vals = np.abs(g.x[near] @ w)
        out[j] = float(np.max(vals, initial=0.0))
    return out


# ---------------------------------------------------------------------------
# tangent cone fitting and the barrier sweep


@dataclass(frozen=True)
class TangentConeFit:
    """Half-plane classification of a blow-up limit.

    ``alpha`` is the opening angle between the fitted plane and the wall;
    ``fit_residual`` the dictionary distance between the restricted varifold
    and its snap onto the fitted half-plane cone; ``multi_plane`` flags that
    the atom planes disagree with the fitted one (a union of several planes,
    outside the single-plane classification); ``passed`` is the half-plane
    verdict under the documented tolerances.
    """

    plane: Plane
    vertex_density: float
    alpha: float
    fit_residual: float
    boundary_line: Plane | None
    multi_plane: bool
    passed: bool

    def __post_init__(self):
        if not 0.0 <= self.alpha <= math.pi / 2 + 1e-12:
            raise ValueError("alpha must lie in [0, pi/2]")
        if self.vertex_density < 0.0:
            raise ValueError("vertex density must be nonnegative")


def fit_tangent_cone(
    C: DiscreteVarifold,
    gamma_inf: BoundaryVarifold | None,
    beta_x0: float,
    region_radius: float = 1.0,
    rho_grid=None,
    density_window: float = 0.05,
    angle_tol: float = 0.05,
    residual_tol: float = 0.1,
    cone_tol: float = 0.1,
    plane_agree_tol: float = 0.1,
    target_density: float = 0.5,
    dictionary_size: int = 3,
    workers: int = 1,
) -> TangentConeFit:
    """Fit a half-plane cone to a blow-up limit and classify it.

    The plane is the principal m-subspace of the mass-weighted second moment
    of atom positions inside the region.  The vertex density is the median
    density ratio over the radius grid (NotConical when the ratios spread
    more than ``cone_tol``), the angle comes from the projected wall normal,
    and the residual measures the dictionary distance from the atoms to their
    snap onto the fitted cone.  The verdict requires a single plane, vertex
    density within ``density_window`` of ``target_density`` (1/2 for
    geometrically normalized quadratures), a small residual, and the angle
    matching min(beta, pi - beta).
    """
    d = C.dim
    keep = np.linalg.norm(C.x, axis=1) <= region_radius
    if not np.any(keep):
        raise ValueError("no atoms inside the fitting region")
    xs, ws, Ps = C.x[keep], C.w[keep], C.P[keep]

    if rho_grid is None:
        rho_grid = region_radius * np.ldexp(1.0, -np.arange(4))[::-1]
    curve = density_curve(C, np.zeros(d), rho_grid, workers=workers)
    spread = float(np.max(curve.ratios) - np.min(curve.ratios))
    if spread > cone_tol:
        raise NotConical(
            f"density ratio varies by {spread:.3e} over the grid, above {cone_tol}"
        )
    vertex_density = float(np.median(curve.ratios))

    moment = np.einsum("k,ki,kj->ij", ws, xs, xs)
    vals, vecs = np.linalg.eigh(moment)
    frame = vecs[:, np.argsort(-vals)[: C.m]].T
    plane = plane_from_frame(frame)

    gaps = np.linalg.svd(Ps - plane.proj, compute_uv=False)[:, 0]
    multi_plane = bool(np.max(gaps) > plane_agree_tol)

    wall_normal = np.zeros(d)
    wall_normal[-1] = 1.0
    lifted = plane.proj @ wall_normal
    sin_alpha = float(np.linalg.norm(lifted))
    alpha = math.asin(min(1.0, sin_alpha))

    snapped = xs @ plane.proj
    if sin_alpha > 1e-12:
        up = lifted / sin_alpha
        t = snapped @ up
        snapped = snapped - np.minimum(t, 0.0)[:, None] * up
    residual = bl_distance(
        (xs, ws),
        (snapped, ws),
        region_radius=region_radius,
        dictionary_size=dictionary_size,
        workers=workers,
    ).value

    boundary_line = None
    if C.m >= 2:
        if gamma_inf is not None and gamma_inf.x.shape[0] > 0:
            smoment = np.einsum(
                "k,ki,kj->ij", gamma_inf.sigma, gamma_inf.x, gamma_inf.x
            )
            svals, svecs = np.linalg.eigh(smoment)
            line_frame = svecs[:, np.argsort(-svals)[: C.m - 1]].T
            boundary_line = plane_from_frame(line_frame)
        elif sin_alpha > 1e-12:
            edge = plane.proj - np.outer(lifted / sin_alpha, lifted / sin_alpha)
            boundary_line = Plane(proj=(edge + edge.T) / 2.0, m=C.m - 1)

    target = min(beta_x0, math.pi - beta_x0)
    passed = (
        not multi_plane
        and abs(vertex_density - target_density) <= density_window
        and residual <= residual_tol
        and abs(alpha - target) <= angle_tol
    )
    return TangentConeFit(
        plane=plane,
        vertex_density=vertex_density,
        alpha=alpha,
        fit_residual=residual,
        boundary_line=boundary_line,
        multi_plane=multi_plane,
        passed=passed,
    )


def barrier_angle_check(
    fit: TangentConeFit,
    nu_H,
    C: DiscreteVarifold | None = None,
    contain_tol: float = 1e-8,
    angle_tol: float = 1e-6,
) -> tuple[float, bool]:
    """Barrier comparison: the cone fits under a half-space tilted at theta.

    ``nu_H`` is the outward normal of the barrier half-space {<x, nu_H> <= 0};
    theta is its tilt from the wall normal.  Containment of the cone is a
    precondition (NotContained on violation), checked on the atoms of ``C``
    when given, else on rays of the fitted plane.  The verdict is
    theta >= alpha - tol; at equality the cone must lie inside the barrier's
    boundary hyperplane, which is folded into the verdict.
    """
    nu = np.asarray(nu_H, dtype=float)
    norm = np.linalg.norm(nu)
    if norm == 0.0:
        raise ValueError("nu_H must be a nonzero vector")
    nu = nu / norm
    theta = math.acos(max(-1.0, min(1.0, nu[-1])))

    if C is not None:
        pairings = C.x @ nu
    else:
        frame = fit.plane.frame()
        phis = np.linspace(-math.pi / 2, math.pi / 2, 721)
        wall_normal = np.zeros(fit.plane.dim)
        wall_normal[-1] = 1.0
        lifted = fit.plane.proj @ wall_normal
        sin_alpha = np.linalg.norm(lifted)
        if sin_alpha > 1e-12 and fit.plane.m >= 2:
            up = lifted / sin_alpha
            other = frame - np.outer(frame @ up, up)
            edge = other[np.argmax(np.linalg.norm(other, axis=1))]
            edge = edge / np.linalg.norm(edge)
            rays = (
                np.cos(phis)[:, None] * up[None, :]
                + np.sin(phis)[:, None] * edge[None, :]
            )
        else:
            rays = frame
        pairings = rays @ nu
    worst = float(np.max(pairings, initial=0.0))
    if worst > contain_tol:
        raise NotContained(
            f"a cone point pairs {worst:.3e} with nu_H, above {contain_tol}"
        )
    passed = theta >= fit.alpha - angle_tol
    if passed and abs(theta - fit.alpha) <= angle_tol:
        passed = float(np.max(np.abs(pairings), initial=0.0)) <= contain_tol
    return theta, passed


# ---------------------------------------------------------------------------
# compactness and degeneracy


@dataclass(frozen=True)
class CompactnessReport:
    """Per-member measurements for a family of fixtures approaching a limit.

    ``iv_integral`` is the wall-tangential conormal mass at the observation
    scale: sites of the boundary measure within rho of the base point are
    merged at ``merge_tol`` before averaging conormals, so two sheets closer
    than the observation scale read as one mixed fiber.  ``c1_margin`` is the
    fine-scale per-component margin: sites are grouped by their fiber plane
    and each group is scanned with its own direction, so a member made of two
    sheets with opposite conormals still reports the one-sided margin of each
    sheet.  A family whose sheets collapse onto each other sends the integral
    to zero while every member's component margins stay put, which is exactly
    the degeneracy the experiment exists to expose.
    """

    s_grid: np.ndarray
    bl_to_limit: np.ndarray
    sigma_half: np.ndarray
    iv_integral: np.ndarray
    c1_margin: np.ndarray
    limit_sigma_half: float
    limit_iv_integral: float
    rho: float
    merge_tol: float


def _restrict_boundary(
    boundary: BoundaryVarifold, x0: np.ndarray, rho: float
) -> BoundaryVarifold:
    keep = np.linalg.norm(boundary.x - x0, axis=1) <= rho
    return BoundaryVarifold(
        x=boundary.x[keep], P=boundary.P[keep], sigma=boundary.sigma[keep], m=boundary.m
    )


def _tangential_mass(fixture, x0, rho, merge_tol, workers: int) -> float:
    local = _restrict_boundary(fixture.boundary, x0, rho)
    if local.x.shape[0] == 0:
        return 0.0
    dis = disintegrate(local, grouping_tol=merge_tol)
    stats = co_normals(dis, fixture.container)
    return tree_sum(
        dis.sigma * np.linalg.norm(stats.tangential, axis=1), workers=workers
    )


def _component_margin(fixture, x0: np.ndarray, rho: float) -> float:
    """Smallest per-component contact margin among sites near the base point.

    Sites of the fine-scale disintegration are grouped by their heaviest
    fiber plane; each group gets its own scan direction.  Nearby sheets with
    opposite conormals therefore report their one-sided margins instead of a
    cancelled joint one.
    """
    dis = disintegrate(fixture.boundary)
    near = np.linalg.norm(dis.sites - x0, axis=1) <= rho
    groups: dict[bytes, list[int]] = {}
    for i in np.flatnonzero(near):
        fib = dis.fibers[i]
        key = fib.planes[int(np.argmax(fib.probs))].proj.tobytes()
        groups.setdefault(key, []).append(i)
    if not groups:
        raise ValueError("no boundary sites within the requested radius")
    margins = []
    for idx in groups.values():
        sel = np.asarray(idx)
        sub = Disintegration(
            sites=dis.sites[sel],
            sigma=dis.sigma[sel],
            fibers=tuple(dis.fibers[i] for i in idx),
            m=dis.m,
        )
        margins.append(
            cbp_check(sub, fixture.container, fixture.angle, x0, radius=rho).c1_margin
        )
    return min(margins)


def compactness_experiment(
    family: Callable[[float], object],
    s_grid: Sequence[float],
    x0=None,
    rho: float = 1.0,
    merge_tol: float = 0.5,
    workers: int = 1,
) -> CompactnessReport:
    """Track a fixture family s -> fixture as s decreases to its limit at 0.

    For each member this records the dictionary distance to the s = 0 limit,
    the boundary mass in the half ball (the lower bound that must survive the
    limit), the observation-scale tangential conormal integral, and the
    fine-scale contact-point margin at the base point.
    """
    s_grid = np.asarray(list(s_grid), dtype=float)
    if s_grid.ndim != 1 or s_grid.size == 0 or np.any(np.diff(s_grid) >= 0.0):
        raise ValueError("s grid must be strictly decreasing")
    if np.any(s_grid <= 0.0):
        raise ValueError("s grid holds the positive members; the limit is s = 0")
    limit = family(0.0)
    d = limit.V.dim
    x0 = np.zeros(d) if x0 is None else np.asarray(x0, dtype=float)

    bl_to_limit = np.empty(s_grid.size)
    sigma_half = np.empty(s_grid.size)
    iv_integral = np.empty(s_grid.size)
    c1_margin = np.empty(s_grid.size)
    for i, s in enumerate(s_grid):
        fx = family(float(s))
        bl_to_limit[i] = bl_distance(
            (fx.V.x, fx.V.w),
            (limit.V.x, limit.V.w),
            region_radius=rho,
            workers=workers,
        ).value
        near_half = np.linalg.norm(fx.boundary.x - x0, axis=1) <= rho / 2
        sigma_half[i] = tree_sum(
            np.where(near_half, fx.boundary.sigma, 0.0), workers=workers
        )
        iv_integral[i] = _tangential_mass(fx, x0, rho, merge_tol, workers)
        c1_margin[i] = _component_margin(fx, x0, rho)

    near_half = np.linalg.norm(limit.boundary.x - x0, axis=1) <= rho / 2
    limit_sigma = tree_sum(
        np.where(near_half, limit.boundary.sigma, 0.0), workers=workers
    )
    limit_iv = _tangential_mass(limit, x0, rho, merge_tol, workers)
    return CompactnessReport(
        s_grid=s_grid,
        bl_to_limit=bl_to_limit,
        sigma_half=sigma_half,
        iv_integral=iv_integral,
        c1_margin=c1_margin,
        limit_sigma_half=limit_sigma,
        limit_iv_integral=limit_iv,
        rho=rho,
        merge_tol=merge_tol,
    )
