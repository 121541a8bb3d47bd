"""Boundary measures on the wall and their plane-bundle structure.

The boundary data of a capillary varifold is a weighted family of atoms
(x, P, sigma) with x on the wall and P an m-plane meeting the wall at the
prescribed contact angle.  Two pointwise conditions pin the admissible
bundle: the projected wall normal has length sin(beta), and the plane's
intersection with the wall is orthogonal to that projection.  This module
measures violations of both, disintegrates the measure into per-site fibers
over the plane variable, and computes the conormal statistics (mean conormal,
its wall-tangential part, and the induced unit direction) that the structure
theory is phrased in.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from ._reduce import tree_sum
from .errors import AngleDegenerate, DegenerateProjection, FormatError
from .fields import TestField
from .geometry import (
    PLANE_EQUAL_TOL,
    SURFACE_TOL,
    ContactAngleField,
    Container,
    Plane,
)
from .varifold import (
    DiscreteVarifold,
    ResidualReport,
    VariationDecomposition,
    _div_and_jnorm,
    _fmt,
    _parse_header,
    _validate_planes,
    pairing_terms,
)

CONORMAL_TOL = 1e-10
PROB_TOL = 1e-12
ZERO_PART_TOL = 1e-10


@dataclass(frozen=True)
class BoundaryVarifold:
    """Atoms (x, P, sigma) of a boundary measure fibered over m-planes.

    Positions are expected on the wall and planes in the contact-angle
    bundle; neither is checked here because both need the container and the
    angle field, see :meth:`bundle_gap`.
    """

    x: np.ndarray
    P: np.ndarray
    sigma: np.ndarray
    m: int

    def __post_init__(self):
        x = np.ascontiguousarray(self.x, dtype=float)
        P = np.ascontiguousarray(self.P, dtype=float)
        s = np.ascontiguousarray(self.sigma, dtype=float)
        if x.ndim != 2:
            raise ValueError("x must be (k, d)")
        k, d = x.shape
        if P.shape != (k, d, d):
            raise ValueError("P must be (k, d, d)")
        if s.shape != (k,):
            raise ValueError("sigma must be (k,)")
        if not (1 <= self.m <= d):
            raise ValueError("need 1 <= m <= d")
        if not np.all(np.isfinite(x)):
            raise ValueError("positions must be finite")
        if k and (not np.all(np.isfinite(s)) or np.min(s) <= 0.0):
            raise ValueError("sigma must be finite and positive")
        _validate_planes(P, self.m)
        for arr in (x, P, s):
            arr.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "P", P)
        object.__setattr__(self, "sigma", s)

    @property
    def dim(self) -> int:
        return self.x.shape[1]

    @property
    def size(self) -> int:
        return self.x.shape[0]

    def total(self, workers: int = 1) -> float:
        return tree_sum(self.sigma, workers=workers)

    def bundle_gap(
        self, container: Container, angle: ContactAngleField
    ) -> tuple[float, float, float]:
        """(worst wall distance, worst angle gap, worst orthogonality gap)."""
        sd = float(np.max(np.abs(container.sdf(self.x)), initial=0.0))
        nu = container.grad_sdf(self.x)
        beta = angle.beta(self.x)
        g1, g2 = capillary_gap(self.P, nu, beta, self.m)
        top1 = float(np.max(g1, initial=0.0))
        top2 = float(np.max(g2, initial=0.0))
        return sd, top1, top2


def capillary_gap(
    P: np.ndarray, nu: np.ndarray, beta: np.ndarray, m: int
) -> tuple[np.ndarray, np.ndarray]:
    """Pointwise violations of the two plane-bundle conditions.

    The first gap is | |P nu| - sin(beta) |.  The second takes the top m-1
    eigenvectors of P T P (T the wall-tangent projector), i.e. the plane's
    intersection with the wall, and returns the largest inner product with
    P nu; in the bundle that intersection is orthogonal to the projected
    normal.  Eigenvectors are ordered by descending eigenvalue with a
    lexicographic sign fix, which keeps the report deterministic.
    """
    P = np.asarray(P, dtype=float)
    nu = np.asarray(nu, dtype=float)
    beta = np.asarray(beta, dtype=float)
    pnu = np.einsum("kij,kj->ki", P, nu)
    gap_i = np.abs(np.linalg.norm(pnu, axis=-1) - np.sin(beta))
    if m == 1:
        return gap_i, np.zeros_like(gap_i)
    d = P.shape[-1]
    T = np.eye(d)[None] - nu[:, :, None] * nu[:, None, :]
    PTP = P @ T @ P
    vals, vecs = np.linalg.eigh(PTP)
    # eigh is ascending: the last m-1 columns span the wall intersection
    top = vecs[:, :, d - (m - 1):]
    sign_src = np.where(np.abs(top) > 1e-12, np.sign(top), 0.0)
    first = np.argmax(np.abs(sign_src) > 0, axis=1)
    k = P.shape[0]
    for a in range(k):
        for j in range(m - 1):
            s = sign_src[a, first[a, j], j]
            if s < 0:
                top[a, :, j] = -top[a, :, j]
    gap_ii = np.max(np.abs(np.einsum("kij,ki->kj", top, pnu)), axis=-1)
    return gap_i, gap_ii


def conormal(P: np.ndarray, nu: np.ndarray) -> np.ndarray:
    """Unit conormal n = P nu / |P nu| per atom.

    Points into the surface when the bundle conditions hold.  Raises
    DegenerateProjection when some projected normal is shorter than 1e-10
    (the plane is essentially inside the wall and no direction is defined).
    """
    P = np.atleast_3d(np.asarray(P, dtype=float))
    nu = np.atleast_2d(np.asarray(nu, dtype=float))
    pnu = np.einsum("kij,kj->ki", P, nu)
    norms = np.linalg.norm(pnu, axis=-1)
    if pnu.shape[0] and np.min(norms) < CONORMAL_TOL:
        raise DegenerateProjection("projected wall normal below 1e-10")
    return pnu / norms[:, None]


@dataclass(frozen=True)
class Fiber:
    """Probability measure over planes above one boundary site."""

    planes: tuple[Plane, ...]
    probs: np.ndarray

    def __post_init__(self):
        p = np.ascontiguousarray(self.probs, dtype=float)
        if abs(float(np.sum(p)) - 1.0) > PROB_TOL:
            raise ValueError("fiber probabilities must sum to one")
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)


@dataclass(frozen=True)
class Disintegration:
    """Boundary measure split as (site weights) times (plane fibers)."""

    sites: np.ndarray
    sigma: np.ndarray
    fibers: tuple[Fiber, ...]
    m: int

    @property
    def size(self) -> int:
        return self.sites.shape[0]

    def total(self) -> float:
        return float(np.sum(self.sigma))


def disintegrate(
    boundary: BoundaryVarifold,
    grouping_tol: float = 1e-9,
    plane_tol: float = PLANE_EQUAL_TOL,
) -> Disintegration:
    """Group atoms into sites and stack their planes into fibers.

    Sites are the single-linkage clusters of the atom positions at the given
    tolerance (atoms chain together whenever two are closer than it); the
    site position is the sigma-weighted mean.  Within a fiber, planes closer
    than plane_tol in operator norm are merged.  Sites come out in
    lexicographic order, so the decomposition is deterministic.
    """
    k = boundary.size
    if k == 0:
        raise ValueError("cannot disintegrate an empty boundary measure")
    tree = cKDTree(boundary.x)
    pairs = tree.query_pairs(grouping_tol, output_type="ndarray")
    graph = coo_matrix(
        (np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(k, k)
    )
    n_comp, labels = connected_components(graph, directed=False)
    sites = np.empty((n_comp, boundary.dim))
    sigma = np.empty(n_comp)
    members: list[np.ndarray] = []
    for c in range(n_comp):
        idx = np.flatnonzero(labels == c)
        s = np.sum(boundary.sigma[idx])
        sites[c] = boundary.sigma[idx] @ boundary.x[idx] / s
        sigma[c] = s
        members.append(idx)
    order = np.lexsort(sites.T[::-1])
    fibers = []
    for c in order:
        idx = members[c]
        planes: list[np.ndarray] = []
        weights: list[float] = []
        for a in idx:
            Pa = boundary.P[a]
            for j, Pj in enumerate(planes):
                if np.linalg.norm(Pa - Pj, ord=2) <= plane_tol:
                    weights[j] += boundary.sigma[a]
                    break
            else:
                planes.append(Pa)
                weights.append(boundary.sigma[a])
        probs = np.array(weights) / sigma[c]
        fibers.append(
            Fiber(planes=tuple(Plane(proj=P, m=boundary.m) for P in planes), probs=probs)
        )
    return Disintegration(
        sites=sites[order], sigma=sigma[order], fibers=tuple(fibers), m=boundary.m
    )


@dataclass(frozen=True)
class ConormalStats:
    """Per-site conormal aggregates of a disintegrated boundary measure.

    ``n_mean`` is the fiber average of unit conormals; ``tangential`` its
    wall-tangent part (the cos(beta)-weighted wall direction); ``direction``
    the unit vector along it, zero where ``is_zero`` is set.  The identity
    |n_mean|^2 = sin^2(beta) + |tangential|^2 holds whenever the fiber sits
    in the contact-angle bundle.  When the contact angle is supplied,
    ``wall`` is the angle-normalized wall vector, tangential / cos(beta),
    whose length measures how far the fibers are from a single conormal.
    """

    n_mean: np.ndarray
    tangential: np.ndarray
    direction: np.ndarray
    is_zero: np.ndarray
    wall: np.ndarray | None = None


def co_normals(
    dis: Disintegration,
    container: Container,
    angle: ContactAngleField | None = None,
    zero_tol: float = ZERO_PART_TOL,
) -> ConormalStats:
    """Average the fiber conormals and split off the wall-tangent part.

    Pass ``angle`` to also get the normalized wall vector; that requires
    cos(beta) bounded away from zero at every site (AngleDegenerate
    otherwise).
    """
    q, d = dis.sites.shape
    nu = container.grad_sdf(dis.sites)
    n_mean = np.zeros((q, d))
    for i, fib in enumerate(dis.fibers):
        for plane, prob in zip(fib.planes, fib.probs):
            n_mean[i] += prob * conormal(plane.proj[None], nu[i][None])[0]
    tangential = n_mean - np.sum(n_mean * nu, axis=-1)[:, None] * nu
    norms = np.linalg.norm(tangential, axis=-1)
    is_zero = norms <= zero_tol
    direction = np.zeros_like(tangential)
    live = ~is_zero
    direction[live] = tangential[live] / norms[live, None]
    wall = None
    if angle is not None:
        cosb = np.cos(angle.beta(dis.sites))
        if np.any(np.abs(cosb) < 1e-12):
            raise AngleDegenerate(
                "cos beta vanishes at a site; the wall vector is undefined"
            )
        wall = tangential / cosb[:, None]
    return ConormalStats(
        n_mean=n_mean,
        tangential=tangential,
        direction=direction,
        is_zero=is_zero,
        wall=wall,
    )


@dataclass(frozen=True)
class ContactPointReport:
    """Margins of the two contact-point conditions near a chosen point."""

    tau: np.ndarray
    c1_margin: float
    c2_constant: float
    n_sites: int


def scan_for_tau(vectors: np.ndarray, nu0: np.ndarray, grid: int = 64) -> np.ndarray:
    """Unit wall-tangent direction maximizing the worst inner product.

    Scans a fixed grid in the wall tangent space (two candidates in the
    plane, a circle in space); ties resolve to the earliest grid index.
    """
    d = nu0.size
    basis = _wall_basis(nu0)
    if d == 2:
        cands = np.stack([basis[0], -basis[0]])
    elif d == 3:
        ang = 2 * np.pi * np.arange(grid) / grid
        cands = np.cos(ang)[:, None] * basis[0] + np.sin(ang)[:, None] * basis[1]
    else:
        raise NotImplementedError("tau scan implemented for ambient dims 2 and 3")
    scores = np.min(vectors @ cands.T, axis=0)
    return cands[int(np.argmax(scores))]


def _wall_basis(nu0: np.ndarray) -> np.ndarray:
    d = nu0.size
    T = np.eye(d) - np.outer(nu0, nu0)
    vals, vecs = np.linalg.eigh(T)
    cols = vecs[:, np.argsort(-vals)[: d - 1]]
    out = []
    for j in range(d - 1):
        v = cols[:, j]
        lead = v[np.flatnonzero(np.abs(v) > 1e-12)[0]]
        out.append(v if lead > 0 else -v)
    return np.array(out)


def cbp_check(
    dis: Disintegration,
    container: Container,
    angle: ContactAngleField,
    x0,
    radius: float,
    tau=None,
    zero_tol: float = ZERO_PART_TOL,
) -> ContactPointReport:
    """Evaluate the contact-point margins at x0 over nearby sites.

    The first margin is the worst inner product of the tangential conormal
    part with tau (a direction found by scanning when not supplied); a
    genuine contact point keeps it bounded away from zero.  The second is the
    smallest constant c with |<x - x0, t(x)>| <= c |cos beta(x0)| |x - x0|^2
    over the neighborhood, the quadratic flatness of the boundary.  Raises
    AngleDegenerate when cos beta(x0) = 0, where no such normalization exists.
    """
    x0 = np.asarray(x0, dtype=float)
    cos0 = float(np.cos(angle.beta(x0[None])[0]))
    if cos0 == 0.0:
        raise AngleDegenerate("cos beta vanishes at the base point")
    dist = np.linalg.norm(dis.sites - x0, axis=1)
    near = dist <= radius
    if not np.any(near):
        raise ValueError("no boundary sites within the requested radius")
    stats = co_normals(dis, container, zero_tol=zero_tol)
    cw = stats.tangential[near]
    nu0 = container.grad_sdf(x0[None])[0]
    if tau is None:
        tau = scan_for_tau(cw, nu0)
    else:
        tau = np.asarray(tau, dtype=float)
    c1 = float(np.min(cw @ tau))
    rel = dist[near] > 0.0
    if np.any(rel):
        diffs = dis.sites[near][rel] - x0
        num = np.abs(np.sum(diffs * cw[rel], axis=-1))
        c2 = float(np.max(num / (abs(cos0) * np.sum(diffs**2, axis=-1))))
    else:
        c2 = 0.0
    return ContactPointReport(
        tau=tau, c1_margin=c1, c2_constant=c2, n_sites=int(np.sum(near))
    )


def lower_density_filter(dis: Disintegration, radii) -> np.ndarray:
    """Per-site lower bound proxy for the (m-1)-density of the site measure.

    For each site, the minimum over the radius grid of sigma(B_rho) divided
    by the volume of the rho-ball in dimension m-1.  A site with no neighbor
    inside the largest radius reports +inf: a lone atom has unbounded density
    at small scales and the grid cannot see that.
    """
    radii = np.sort(np.asarray(radii, dtype=float))
    if radii.size == 0 or radii[0] <= 0.0:
        raise ValueError("need a positive radius grid")
    k = dis.m - 1
    unit = np.pi ** (k / 2) / math.gamma(k / 2 + 1) if k else 1.0
    tree = cKDTree(dis.sites)
    out = np.empty(dis.size)
    for i in range(dis.size):
        idx_max = tree.query_ball_point(dis.sites[i], radii[-1])
        if len(idx_max) <= 1:
            out[i] = np.inf
            continue
        d_i = np.linalg.norm(dis.sites[idx_max] - dis.sites[i], axis=1)
        s_i = dis.sigma[idx_max]
        out[i] = min(np.sum(s_i[d_i <= r]) / (unit * r**k) for r in radii)
    return out


def decomposition_residual(
    V: DiscreteVarifold,
    dec: VariationDecomposition,
    dis: Disintegration,
    container: Container,
    battery: list[TestField],
    workers: int = 1,
) -> ResidualReport:
    """Residual of the four-part first-variation identity over a battery.

    For arbitrary C^1 fields phi the identity under test is

        delta V(phi) + sum w <H, phi> + sum w <H~, phi>
            + sum_perp s <nu, phi> + sum_sites sigma <t, phi> = 0,

    with t the wall-tangential part of the mean fiber conormal.  Unlike the
    tangential-field identity, this one admits any field class.  The relative
    residual divides by the total absolute mass of all five integrands.
    """
    stats = co_normals(dis, container)
    nu_perp = container.grad_sdf(dec.perp_points)
    names, absolute, relative = [], [], []
    for phi in battery:
        mask = phi.support_mask(V.x)
        xs, ws = V.x[mask], V.w[mask]
        div, _ = _div_and_jnorm(V.P[mask], xs, phi)
        div_terms = ws * div
        fv = tree_sum(div_terms, workers=workers)
        denom = tree_sum(np.abs(div_terms), workers=workers)
        bulk_t = bulk_n = 0.0
        if dec.H[mask].any():
            terms = pairing_terms(ws, xs, dec.H[mask], phi)
            bulk_t = tree_sum(terms, workers=workers)
            denom += tree_sum(np.abs(terms), workers=workers)
        if dec.H_tilde[mask].any():
            terms = pairing_terms(ws, xs, dec.H_tilde[mask], phi)
            bulk_n = tree_sum(terms, workers=workers)
            denom += tree_sum(np.abs(terms), workers=workers)
        pmask = phi.support_mask(dec.perp_points)
        terms = pairing_terms(
            dec.perp_weights[pmask], dec.perp_points[pmask], nu_perp[pmask], phi
        )
        perp = tree_sum(terms, workers=workers)
        denom += tree_sum(np.abs(terms), workers=workers)
        smask = phi.support_mask(dis.sites)
        terms = pairing_terms(
            dis.sigma[smask], dis.sites[smask], stats.tangential[smask], phi
        )
        edge = tree_sum(terms, workers=workers)
        denom += tree_sum(np.abs(terms), workers=workers)
        res = fv + bulk_t + bulk_n + perp + edge
        names.append(phi.name)
        absolute.append(abs(res))
        relative.append(abs(res) / denom if denom > 0.0 else 0.0)
    return ResidualReport(
        field_names=tuple(names),
        absolute=np.array(absolute),
        relative=np.array(relative),
    )


# ---------------------------------------------------------------------------
# file format


def save_boundary(path, boundary: BoundaryVarifold) -> None:
    """Write boundary atoms as 'x | P | sigma' lines under a boundary header."""
    k, d = boundary.x.shape
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"boundary m={boundary.m} n1={d} atoms={k}\n")
        for a in range(k):
            xs = " ".join(_fmt(v) for v in boundary.x[a])
            ps = " ".join(_fmt(v) for v in boundary.P[a].ravel())
            fh.write(f"{xs} | {ps} | {_fmt(boundary.sigma[a])}\n")


def load_boundary(path) -> BoundaryVarifold:
    """Read a boundary measure written by :func:`save_boundary`."""
    with open(path, "r", encoding="ascii") as fh:
        m, d, k = _parse_header(fh.readline(), "boundary")
        x = np.empty((k, d))
        P = np.empty((k, d, d))
        s = np.empty(k)
        a = 0
        for raw in fh:
            line = raw.strip()
            if not line:
                continue
            if a >= k:
                raise FormatError("more atom lines than the header declared")
            cols = line.split("|")
            if len(cols) != 3:
                raise FormatError(f"atom line needs 'x | P | sigma', got {raw!r}")
            xa = np.array(cols[0].split(), dtype=float)
            pa = np.array(cols[1].split(), dtype=float)
            if xa.size != d or pa.size != d * d:
                raise FormatError(f"atom line has wrong arity for n1={d}")
            x[a] = xa
            P[a] = pa.reshape(d, d)
            s[a] = float(cols[2])
            a += 1
        if a != k:
            raise FormatError(f"header declared {k} atoms, file held {a}")
    return BoundaryVarifold(x=x, P=P, sigma=s, m=m)
