"""Weak second fundamental forms and the identities that pin them down.

Curvature data attaches to every atom a trilinear array whose entry
B[i, j, k] is the tangential derivative of the projector entry P_jk along
the plane part of e_i; equivalently <B(e_i, e_j), e_k> for the bilinear
extension of the classical second fundamental form.  Such arrays satisfy
exact structural relations (symmetry in the last two slots, vanishing
contraction over them, tangentiality in the first), and the varifold-level
integration-by-parts identity

    int (D_P phi . B + <tr B, phi> + <grad_x phi, P>) dV = - int <n, phi> dGamma

holds for arbitrary C^1 fields phi(x, P): the left side rebuilds the
tangential divergence of x -> phi(x, P(x)) restricted to the support, so no
wall-tangency assumption on the field is needed.  The boundary measure keeps
its plane resolution on the right side, which is what spares this identity
the cancellation that degenerate fixtures inflict on the plain
first-variation form.  This module builds curvature data (closed forms for
spheres, an extension map for intrinsic forms), measures the structural
relations, evaluates the identity residual against batteries with genuinely
P-dependent members, and derives the mass-comparability ratios and
lower-semicontinuity checks used by the compactness theory.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from ._reduce import tree_sum
from .capillary import BoundaryVarifold, conormal
from .errors import DivisionDegenerate
from .fields import PlateauBump, TestField, standard_general_battery
from .geometry import Container, Plane, halfspace
from .varifold import DiscreteVarifold, ResidualReport, pairing_terms

RELATION_TOL = 1e-9
FORM_TOL = 1e-10


@dataclass(frozen=True)
class CurvatureData:
    """Per-atom trilinear curvature arrays for an m-varifold in R^d.

    ``B`` has shape (k, d, d, d) with B[a, i, j, k] = <B(e_i, e_j), e_k> at
    atom a.  The derived trace vectors are the generalized mean curvature;
    they are recomputed on access, which is cheap at desk scale.
    """

    B: np.ndarray
    m: int

    def __post_init__(self):
        B = np.ascontiguousarray(self.B, dtype=float)
        if B.ndim != 4 or B.shape[1] != B.shape[2] or B.shape[1] != B.shape[3]:
            raise ValueError("B must be (k, d, d, d)")
        if not np.all(np.isfinite(B)):
            raise ValueError("curvature entries must be finite")
        if not (1 <= self.m <= B.shape[1]):
            raise ValueError("need 1 <= m <= d")
        B.setflags(write=False)
        object.__setattr__(self, "B", B)

    @property
    def size(self) -> int:
        return self.B.shape[0]

    @property
    def dim(self) -> int:
        return self.B.shape[1]

    @property
    def trace(self) -> np.ndarray:
        """Per-atom mean curvature vectors H_l = sum_j B[j, l, j]."""
        return np.einsum("ajlj->al", self.B)

    def frobenius(self) -> np.ndarray:
        """Per-atom Frobenius norms |B_a|."""
        return np.sqrt(np.einsum("aijk,aijk->a", self.B, self.B))

    def relation_gaps(self, P: np.ndarray) -> dict[str, float]:
        """Worst per-atom violations of the structural relations.

        ``P`` is the aligned (k, d, d) projector stack.  The five relations:
        symmetry B_ijk = B_ikj; zero contraction sum_j B_ijj = 0;
        tangentiality sum_l P_il B_ljk = B_ijk in the first slot; the
        two-sided reconstruction B_ijk = sum_l (P_jl B_ilk + P_lk B_ijl);
        and tangency of the trace, sum_l P_il H_l = 0.
        """
        B = self.B
        P = np.asarray(P, dtype=float)
        if P.shape != (B.shape[0],) + B.shape[1:3]:
            raise ValueError("projector stack must align with the atoms")
        sym = np.max(np.abs(B - np.transpose(B, (0, 1, 3, 2))), initial=0.0)
        contraction = np.max(np.abs(np.einsum("aijj->ai", B)), initial=0.0)
        first = np.max(np.abs(np.einsum("ail,aljk->aijk", P, B) - B), initial=0.0)
        rebuilt = np.einsum("ajl,ailk->aijk", P, B) + np.einsum(
            "alk,aijl->aijk", P, B
        )
        recon = np.max(np.abs(rebuilt - B), initial=0.0)
        tangency = np.max(
            np.abs(np.einsum("ail,al->ai", P, self.trace)), initial=0.0
        )
        return {
            "symmetry": float(sym),
            "trace_contraction": float(contraction),
            "first_slot": float(first),
            "reconstruction": float(recon),
            "trace_tangency": float(tangency),
        }


def zero_curvature(V: DiscreteVarifold) -> CurvatureData:
    """Flat curvature data aligned with the given varifold."""
    d = V.dim
    return CurvatureData(B=np.zeros((V.size, d, d, d)), m=V.m)


def sphere_curvature(points, center) -> np.ndarray:
    """Closed-form curvature arrays for atoms on a sphere about center.

    Valid for the codimension-one spheres in the gallery (caps, arcs,
    hemispheres): with c = x - center the intrinsic form is
    A(tau, eta) = -<tau, eta> c / |c|^2, and the extension works out to
    B[i, j, k] = -(P_ij c_k + P_ik c_j) / |c|^2.
    """
    x = np.atleast_2d(np.asarray(points, dtype=float))
    c = x - np.asarray(center, dtype=float)
    r2 = np.sum(c**2, axis=1)
    if x.shape[0] and np.min(r2) <= 0.0:
        raise ValueError("points must stay away from the center")
    d = x.shape[1]
    P = np.eye(d)[None] - c[:, :, None] * c[:, None, :] / r2[:, None, None]
    B = P[:, :, :, None] * c[:, None, None, :] + P[:, :, None, :] * c[:, None, :, None]
    return -B / r2[:, None, None, None]


def extend_second_fundamental_form(A, plane: Plane) -> np.ndarray:
    """Extend an intrinsic second fundamental form to a full (d, d, d) array.

    ``A`` is (m, m, d) with A[a, b] the ambient vector of the form applied to
    rows a, b of ``plane.frame()``; it must be symmetric in (a, b) and
    normal-valued.  The extension inserts frame components on the bilinear
    slots and reflects the normal-valued part back through the frame, so the
    result satisfies the structural relations exactly and its trace is the
    mean curvature vector.
    """
    A = np.asarray(A, dtype=float)
    m, d = plane.m, plane.dim
    if A.shape != (m, m, d):
        raise ValueError(f"intrinsic form must be ({m}, {m}, {d})")
    if np.max(np.abs(A - np.transpose(A, (1, 0, 2))), initial=0.0) > FORM_TOL:
        raise ValueError("intrinsic form must be symmetric")
    if np.max(np.abs(plane.apply(A)), initial=0.0) > FORM_TOL:
        raise ValueError("intrinsic form must be normal-valued")
    F = plane.frame()
    term1 = np.einsum("ai,bj,abk->ijk", F, F, A)
    term2 = np.einsum("ai,abj,bk->ijk", F, A, F)
    return term1 + term2


# ---------------------------------------------------------------------------
# test fields on position-times-plane space


@dataclass(frozen=True)
class GrassmannField:
    """C^1 test field phi(x, P) with closed-form x- and P-derivatives.

    ``value`` maps ((k, d) points, (k, d, d) projectors) to (k, d) vectors;
    ``div_x`` returns the per-atom pairing <grad_x phi, P> with P frozen;
    ``curv`` contracts the P-derivative against a (k, d, d, d) curvature
    stack.  Nothing is finite-differenced.
    """

    name: str
    value: Callable[[np.ndarray, np.ndarray], np.ndarray]
    div_x: Callable[[np.ndarray, np.ndarray], np.ndarray]
    curv: Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]
    box: tuple[np.ndarray, float] | None = None

    def support_mask(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if self.box is None:
            return np.ones(x.shape[0], dtype=bool)
        center, half = self.box
        return np.all(np.abs(x - center) <= half, axis=1)


def projector_bump_field(a: int, b: int, c: int, bump: PlateauBump, name: str) -> GrassmannField:
    """Field phi(x, P) = chi(x) P_ab e_c.

    The P-derivative contraction is chi(x) B[c, a, b] in closed form, and
    the frozen-P spatial part is P_ab (P grad chi)_c; both follow from
    treating the projector entries as independent coordinates.
    """

    def value(x, P):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        out = np.zeros((x.shape[0], P.shape[-1]))
        out[:, c] = bump.value(x) * P[:, a, b]
        return out

    def div_x(x, P):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        g = bump.grad(x)
        return P[:, a, b] * np.einsum("kj,kj->k", P[:, c, :], g)

    def curv(x, P, B):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return bump.value(x) * B[:, c, a, b]

    return GrassmannField(
        name=name, value=value, div_x=div_x, curv=curv, box=(bump.center, bump.b)
    )


def standard_curvature_battery(dim: int) -> list:
    """Mixed battery for the curvature identity.

    Plain spatial fields (passed through unchanged, so their arithmetic
    matches the first-variation reductions exactly) probe the trace and
    divergence terms; projector-bump fields multiply plateau cutoffs by
    single projector entries and probe the curvature contraction.  All
    cutoffs keep the fixtures' boundary lines inside their plateau boxes.
    """
    lifted = standard_general_battery(dim)[:8]
    chi0 = PlateauBump(np.zeros(dim), 1.0, 3.0)
    chit = PlateauBump(np.zeros(dim), 0.5, 2.0)
    last = dim - 1
    if dim >= 3:
        picks = [
            (0, 0, 0, chi0),
            (0, 0, last, chi0),
            (0, last, 0, chi0),
            (0, last, last, chi0),
            (1, 1, 1, chi0),
            (last, last, last, chit),
            (0, 1, 0, chit),
            (last, last, 0, chi0),
        ]
    else:
        picks = [
            (0, 0, 0, chi0),
            (0, last, 0, chi0),
            (0, last, last, chi0),
            (last, last, last, chit),
            (0, 0, last, chit),
        ]
    bumps = [
        projector_bump_field(
            a, b, c, bump, f"{'chi0' if bump is chi0 else 'chit'}*P{a + 1}{b + 1}*e{c + 1}"
        )
        for a, b, c, bump in picks
    ]
    return list(lifted) + bumps


def curvature_identity_residual(
    V: DiscreteVarifold,
    Bdata: CurvatureData,
    boundary: BoundaryVarifold,
    battery: list,
    container: Container | None = None,
    workers: int = 1,
) -> ResidualReport:
    """Residual of the curvature integration-by-parts identity over a battery.

    For every field the quantity under test is

        sum w (D_P phi . B + <tr B, phi> + <grad_x phi, P>)
            + sum sigma <n(x, P), phi(x, P)> = 0,

    with n the per-atom conormal of the boundary measure.  Any field class
    is admissible, including wall-normal components: the left side equals
    the tangential divergence of phi(x, P(x)), so the plain divergence
    theorem closes the identity without capillarity corrections.  Plain
    spatial fields take the same reduction path as the first-variation
    residual, which keeps the two reports bitwise comparable; the relative
    residual divides by the total absolute mass of the integrands.
    """
    d = V.dim
    if container is None:
        container = halfspace(d)
    if Bdata.B.shape != (V.size, d, d, d):
        raise ValueError("curvature data must align with the varifold's atoms")
    trace = Bdata.trace
    nu = container.grad_sdf(boundary.x)
    n_edge = conormal(boundary.P, nu) if boundary.size else np.zeros_like(boundary.x)
    names, absolute, relative = [], [], []
    box_cache: dict = {}
    pv_full: dict = {}
    for phi in battery:
        key = (
            (phi.box[0].tobytes(), float(phi.box[1])) if phi.box is not None else None
        )
        if key not in box_cache:
            mask = phi.support_mask(V.x)
            box_cache[key] = (mask, V.x[mask], V.w[mask])
        mask, xs, ws = box_cache[key]
        if isinstance(phi, TestField):
            # same masked views, same caches, same reduction order as the
            # first-variation residual: byte-identical on shared fields
            if phi.rank_one is not None:
                v, grad_amp = phi.rank_one
                vb = v.tobytes()
                if vb not in pv_full:
                    pv_full[vb] = np.einsum("kij,j->ki", V.P, v)
                g = grad_amp(xs)
                div = np.einsum("ki,ki->k", g, pv_full[vb][mask])
            else:
                J = phi.jacobian(xs)
                div = np.einsum("kij,kji->k", V.P[mask], J)
            div_terms = ws * div
            fv = tree_sum(div_terms, workers=workers)
            denom = tree_sum(np.abs(div_terms), workers=workers)
            curv = 0.0
            Hm = trace[mask]
            if Hm.any():
                bulk_terms = pairing_terms(ws, xs, Hm, phi)
                bulk = tree_sum(bulk_terms, workers=workers)
                denom += tree_sum(np.abs(bulk_terms), workers=workers)
            else:
                bulk = 0.0
            bmask = phi.support_mask(boundary.x)
            edge_terms = pairing_terms(
                boundary.sigma[bmask], boundary.x[bmask], n_edge[bmask], phi
            )
            edge = tree_sum(edge_terms, workers=workers)
            denom += tree_sum(np.abs(edge_terms), workers=workers)
        else:
            Ps = V.P[mask]
            curv_terms = ws * phi.curv(xs, Ps, Bdata.B[mask])
            curv = tree_sum(curv_terms, workers=workers)
            denom = tree_sum(np.abs(curv_terms), workers=workers)
            vals = phi.value(xs, Ps)
            bulk_terms = ws * np.sum(trace[mask] * vals, axis=-1)
            bulk = tree_sum(bulk_terms, workers=workers)
            denom += tree_sum(np.abs(bulk_terms), workers=workers)
            div_terms = ws * phi.div_x(xs, Ps)
            fv = tree_sum(div_terms, workers=workers)
            denom += tree_sum(np.abs(div_terms), workers=workers)
            bmask = phi.support_mask(boundary.x)
            evals = phi.value(boundary.x[bmask], boundary.P[bmask])
            edge_terms = boundary.sigma[bmask] * np.sum(n_edge[bmask] * evals, axis=-1)
            edge = tree_sum(edge_terms, workers=workers)
            denom += tree_sum(np.abs(edge_terms), workers=workers)
        res = curv + bulk + fv + edge
        names.append(phi.name)
        absolute.append(abs(res))
        relative.append(abs(res) / denom if denom > 0.0 else 0.0)
    return ResidualReport(
        field_names=tuple(names),
        absolute=np.array(absolute),
        relative=np.array(relative),
    )


# ---------------------------------------------------------------------------
# mass comparability and lower semicontinuity


def curvature_energy(
    V: DiscreteVarifold, Bdata: CurvatureData, p: float, workers: int = 1
) -> float:
    """Integrated p-th power of the curvature, sum_a w_a |B_a|^p."""
    if not 1.0 <= p < np.inf:
        raise ValueError("exponent must lie in [1, inf)")
    if Bdata.size != V.size:
        raise ValueError("curvature data must align with the varifold's atoms")
    return tree_sum(V.w * Bdata.frobenius() ** p, workers=workers)


def mass_comparability(
    V: DiscreteVarifold,
    Bdata: CurvatureData,
    boundary: BoundaryVarifold,
    p: float,
    workers: int = 1,
) -> tuple[float, float]:
    """Empirical constants comparing interior, boundary, and curvature mass.

    Returns (c1, c2) with c1 = mu / (sigma + |B|_p^p) and
    c2 = sigma / (mu + |B|_p^p); the compactness theory bounds both by
    constants of the container and angle, so finiteness is the check.  A
    ratio with zero numerator and zero denominator reports 0, which makes
    the empty varifold come out as (0, 0); a zero denominator under a
    nonzero numerator has no finite reading and raises DivisionDegenerate.
    """
    mu = V.mass(workers=workers)
    sigma = boundary.total(workers=workers) if boundary.size else 0.0
    energy = curvature_energy(V, Bdata, p, workers=workers)

    def ratio(num: float, den: float, label: str) -> float:
        if den == 0.0:
            if num == 0.0:
                return 0.0
            raise DivisionDegenerate(f"{label}: denominator 0 under numerator {num}")
        return num / den

    c1 = ratio(mu, sigma + energy, "interior/boundary")
    c2 = ratio(sigma, mu + energy, "boundary/interior")
    return c1, c2


def lsc_check(
    family,
    limit: tuple[DiscreteVarifold, CurvatureData],
    p: float,
    tol: float = 1e-9,
    workers: int = 1,
) -> bool:
    """Lower semicontinuity of the p-curvature energy on a sampled family.

    ``family`` is a sequence of (varifold, curvature data) pairs converging
    to ``limit``; the check compares the limit energy against the minimum
    over the tail (the later half) of the member energies, the finite-sample
    reading of a liminf.  Passes iff the limit energy is at most that
    minimum plus tol.
    """
    members = list(family)
    if not members:
        raise ValueError("need at least one family member")
    energies = [curvature_energy(Vk, Bk, p, workers=workers) for Vk, Bk in members]
    tail = energies[len(energies) // 2 :]
    V, Bdata = limit
    return curvature_energy(V, Bdata, p, workers=workers) <= min(tail) + tol


def fixture_curvature(fix) -> CurvatureData:
    """Analytic curvature data for a gallery fixture.

    Spherical parts get the closed sphere form about their recorded centers;
    everything flat gets zeros.  The union fixture assigns each atom to the
    sphere it lies on.
    """
    V = fix.V
    d = V.dim
    B = np.zeros((V.size, d, d, d))
    centers = []
    if "center" in fix.expected:
        centers.append(np.asarray(fix.expected["center"], dtype=float))
    if "hemisphere_center" in fix.expected:
        centers.append(np.asarray(fix.expected["hemisphere_center"], dtype=float))
    if centers:
        dist = np.stack(
            [np.abs(np.linalg.norm(V.x - c, axis=1) - 1.0) for c in centers]
        )
        owner = np.argmin(dist, axis=0)
        for i, c in enumerate(centers):
            sel = owner == i
            if np.any(sel):
                B[sel] = sphere_curvature(V.x[sel], c)
    return CurvatureData(B=B, m=V.m)
