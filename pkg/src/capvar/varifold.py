"""Discrete varifolds: weighted atoms on position-times-plane space.

A varifold here is a finite sum of Dirac masses w_a at (x_a, P_a), with P_a
an m-plane stored as an orthogonal projector.  The first variation of such a
measure against a C^1 field is a plain weighted sum of tangential
divergences, so every identity we verify reduces to comparing deterministic
sums.  All reductions go through :func:`capvar._reduce.tree_sum`, which is a
fixed-shape pairwise tree: results are bit-identical no matter how many
workers execute the chunks.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from ._reduce import tree_sum
from .errors import FieldClassError, FormatError
from .fields import TestField
from .geometry import (
    PROJ_IDEM_TOL,
    PROJ_SYM_TOL,
    PROJ_TRACE_TOL,
    Container,
)


def _validate_planes(P: np.ndarray, m: int) -> None:
    if np.max(np.abs(P - np.swapaxes(P, -1, -2)), initial=0.0) > PROJ_SYM_TOL:
        raise ValueError("projector stack not symmetric")
    if np.max(np.abs(P @ P - P), initial=0.0) > PROJ_IDEM_TOL:
        raise ValueError("projector stack not idempotent")
    tr = np.einsum("kii->k", P)
    if P.shape[0] and np.max(np.abs(tr - m)) > PROJ_TRACE_TOL:
        raise ValueError(f"projector ranks disagree with m={m}")


@dataclass(frozen=True)
class DiscreteVarifold:
    """Atoms (x, P, w) of an m-varifold in R^d.

    Attributes
    ----------
    x : (k, d) float array of positions.
    P : (k, d, d) float array of orthogonal projectors of rank m.
    w : (k,) strictly positive weights.
    m : tangent dimension.
    """

    x: np.ndarray
    P: np.ndarray
    w: np.ndarray
    m: int

    def __post_init__(self):
        x = np.ascontiguousarray(self.x, dtype=float)
        P = np.ascontiguousarray(self.P, dtype=float)
        w = np.ascontiguousarray(self.w, dtype=float)
        if x.ndim != 2:
            raise ValueError("x must be (k, d)")
        k, d = x.shape
        if P.shape != (k, d, d):
            raise ValueError("P must be (k, d, d)")
        if w.shape != (k,):
            raise ValueError("w must be (k,)")
        if not (1 <= self.m <= d):
            raise ValueError("need 1 <= m <= d")
        if not np.all(np.isfinite(x)):
            raise ValueError("positions must be finite")
        if k and (not np.all(np.isfinite(w)) or np.min(w) <= 0.0):
            raise ValueError("weights must be finite and positive")
        _validate_planes(P, self.m)
        for arr in (x, P, w):
            arr.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "P", P)
        object.__setattr__(self, "w", w)

    @property
    def dim(self) -> int:
        return self.x.shape[1]

    @property
    def size(self) -> int:
        return self.x.shape[0]

    def mass(self, workers: int = 1) -> float:
        """Total weight."""
        return tree_sum(self.w, workers=workers)


def restrict(V: DiscreteVarifold, mask: np.ndarray) -> DiscreteVarifold:
    """Sub-varifold of the atoms selected by a boolean mask."""
    mask = np.asarray(mask, dtype=bool)
    return DiscreteVarifold(x=V.x[mask], P=V.P[mask], w=V.w[mask], m=V.m)


def ball_mass(V: DiscreteVarifold, center, r: float, workers: int = 1) -> float:
    """Weight carried by the closed ball of radius r about center."""
    center = np.asarray(center, dtype=float)
    inside = np.linalg.norm(V.x - center, axis=1) <= r
    return tree_sum(np.where(inside, V.w, 0.0), workers=workers)


def pushforward_dilation(V: DiscreteVarifold, center, r: float) -> DiscreteVarifold:
    """Blow-up pushforward x -> (x - center)/r with weights scaled by r^-m.

    Planes are unchanged; for dyadic r both maps are exact in floating point.
    """
    if r <= 0.0:
        raise ValueError("dilation radius must be positive")
    center = np.asarray(center, dtype=float)
    return DiscreteVarifold(x=(V.x - center) / r, P=V.P, w=V.w / r**V.m, m=V.m)


def _div_and_jnorm(P: np.ndarray, x: np.ndarray, phi: TestField) -> tuple[np.ndarray, np.ndarray]:
    """Per-atom tangential divergence of phi and Frobenius size of its Jacobian."""
    if phi.rank_one is not None:
        v, grad_amp = phi.rank_one
        g = grad_amp(x)
        Pv = np.einsum("kij,j->ki", P, v)
        div = np.einsum("ki,ki->k", g, Pv)
        jnorm = np.linalg.norm(v) * np.linalg.norm(g, axis=1)
    else:
        J = phi.jacobian(x)
        div = np.einsum("kij,kji->k", P, J)
        jnorm = np.sqrt(np.einsum("kij,kij->k", J, J))
    return div, jnorm


def first_variation(V: DiscreteVarifold, field: TestField, workers: int = 1) -> float:
    """delta V(phi) = sum_a w_a * trace(P_a . J(phi)(x_a)).

    Atoms outside the field's declared support box are dropped before the
    evaluation; they contribute exact zeros.
    """
    mask = field.support_mask(V.x)
    div, _ = _div_and_jnorm(V.P[mask], V.x[mask], field)
    return tree_sum(V.w[mask] * div, workers=workers)


def pairing_terms(
    weights: np.ndarray, points: np.ndarray, vectors: np.ndarray, field: TestField
) -> np.ndarray:
    """Pointwise products weights_a * <vectors_a, phi(points_a)>."""
    vals = field.value(points)
    return np.asarray(weights) * np.sum(vectors * vals, axis=-1)


def weighted_pairing(
    weights: np.ndarray, points: np.ndarray, vectors: np.ndarray, field: TestField, workers: int = 1
) -> float:
    """sum_a weights_a * <vectors_a, phi(points_a)>."""
    return tree_sum(pairing_terms(weights, points, vectors, field), workers=workers)


@dataclass(frozen=True)
class VariationDecomposition:
    """Declared splitting of a first variation into its four parts.

    ``H`` and ``H_tilde`` are per-atom vectors aligned with the varifold's
    atoms (tangential and wall-normal generalized curvature); ``perp_points``
    and ``perp_weights`` carry the nonnegative wall-normal boundary measure.
    The tangential boundary part lives on the boundary varifold itself and is
    reconstructed there, not stored here.
    """

    H: np.ndarray
    H_tilde: np.ndarray
    perp_points: np.ndarray
    perp_weights: np.ndarray

    def __post_init__(self):
        H = np.ascontiguousarray(self.H, dtype=float)
        Ht = np.ascontiguousarray(self.H_tilde, dtype=float)
        pp = np.ascontiguousarray(self.perp_points, dtype=float)
        pw = np.ascontiguousarray(self.perp_weights, dtype=float)
        if H.shape != Ht.shape or H.ndim != 2:
            raise ValueError("H and H_tilde must both be (k, d)")
        if pp.ndim != 2 or pw.shape != (pp.shape[0],):
            raise ValueError("perp measure must be points (q, d) with weights (q,)")
        if pw.size and np.min(pw) < 0.0:
            raise ValueError("perp weights must be nonnegative")
        for arr in (H, Ht, pp, pw):
            arr.setflags(write=False)
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "H_tilde", Ht)
        object.__setattr__(self, "perp_points", pp)
        object.__setattr__(self, "perp_weights", pw)

    def check_alignment(
        self, V: DiscreteVarifold, container: Container, surface_tol: float = 1e-8
    ) -> tuple[float, float]:
        """(worst wall-normal part of H, worst tangential part of H_tilde).

        Both are evaluated only at atoms lying on the wall; H_tilde must also
        vanish away from it, which is folded into the second number.
        """
        sd = container.sdf(V.x)
        on_wall = np.abs(sd) <= surface_tol
        bad_h = 0.0
        if np.any(on_wall):
            nu = container.grad_sdf(V.x[on_wall])
            bad_h = float(np.max(np.abs(np.sum(self.H[on_wall] * nu, axis=-1)), initial=0.0))
        off = ~on_wall
        bad_ht = float(np.max(np.linalg.norm(self.H_tilde[off], axis=-1), initial=0.0))
        if np.any(on_wall):
            nu = container.grad_sdf(V.x[on_wall])
            ht = self.H_tilde[on_wall]
            tang = ht - np.sum(ht * nu, axis=-1)[:, None] * nu
            bad_ht = max(bad_ht, float(np.max(np.linalg.norm(tang, axis=-1), initial=0.0)))
        return bad_h, bad_ht


@dataclass(frozen=True)
class ResidualReport:
    """Per-field residuals of an integral identity over a battery."""

    field_names: tuple[str, ...]
    absolute: np.ndarray
    relative: np.ndarray

    @property
    def max_abs(self) -> float:
        return float(np.max(self.absolute, initial=0.0))

    @property
    def max_rel(self) -> float:
        return float(np.max(self.relative, initial=0.0))


def capillary_residual(
    V: DiscreteVarifold,
    H: np.ndarray,
    boundary_points: np.ndarray,
    boundary_conormals: np.ndarray,
    boundary_weights: np.ndarray,
    battery: list[TestField],
    workers: int = 1,
) -> ResidualReport:
    """Residual of the capillary first-variation identity over a battery.

    For each tangential (or interior) field phi the identity under test is

        delta V(phi) + sum w <H, phi> + sum sigma <n, phi> = 0,

    with n the per-site conormal of the boundary measure.  Fields of kind
    "general" are rejected: the identity only holds against fields tangent to
    the wall.  The relative residual divides by the total absolute mass of
    the three integrands, the size of what is supposed to cancel; a field
    whose support misses everything reports zero.
    """
    H = np.asarray(H, dtype=float)
    if H.shape != V.x.shape:
        raise ValueError("H must align with the varifold's atoms")
    boundary_points = np.asarray(boundary_points, dtype=float)
    boundary_conormals = np.asarray(boundary_conormals, dtype=float)
    boundary_weights = np.asarray(boundary_weights, dtype=float)
    names, absolute, relative = [], [], []
    # battery fields share a handful of support boxes and directions; cache
    # the masked atom views and the projected directions across fields
    box_cache: dict = {}
    pv_full: dict = {}
    for phi in battery:
        if phi.kind == "general":
            raise FieldClassError(
                f"field {phi.name!r} is class general; the identity needs tangential fields"
            )
        key = (
            (phi.box[0].tobytes(), float(phi.box[1])) if phi.box is not None else None
        )
        if key not in box_cache:
            mask = phi.support_mask(V.x)
            box_cache[key] = (mask, V.x[mask], V.w[mask])
        mask, xs, ws = box_cache[key]
        if phi.rank_one is not None:
            v, grad_amp = phi.rank_one
            vb = v.tobytes()
            if vb not in pv_full:
                pv_full[vb] = np.einsum("kij,j->ki", V.P, v)
            g = grad_amp(xs)
            div = np.einsum("ki,ki->k", g, pv_full[vb][mask])
            jnorm = np.linalg.norm(v) * np.linalg.norm(g, axis=1)
        else:
            div, jnorm = _div_and_jnorm(V.P[mask], xs, phi)
        div_terms = ws * div
        fv = tree_sum(div_terms, workers=workers)
        denom = tree_sum(np.abs(div_terms), workers=workers)
        Hm = H[mask]
        if Hm.any():
            bulk_terms = pairing_terms(ws, xs, Hm, phi)
            bulk = tree_sum(bulk_terms, workers=workers)
            denom += tree_sum(np.abs(bulk_terms), workers=workers)
        else:
            bulk = 0.0
        bmask = phi.support_mask(boundary_points)
        edge_terms = pairing_terms(
            boundary_weights[bmask],
            boundary_points[bmask],
            boundary_conormals[bmask],
            phi,
        )
        edge = tree_sum(edge_terms, workers=workers)
        denom += tree_sum(np.abs(edge_terms), workers=workers)
        res = fv + bulk + edge
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


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def save_varifold(path, V: DiscreteVarifold, B: np.ndarray | None = None) -> None:
    """Write atoms as text: header, then one 'x | P | w' line per atom.

    Values use 17 significant digits, which round-trips float64 exactly.  If
    a curvature block B of shape (k, d, d, d) is given, each atom line is
    followed by a 'B:' continuation carrying its d^3 entries.
    """
    k, d = V.x.shape
    if B is not None and B.shape != (k, d, d, d):
        raise ValueError("B must be (k, d, d, d)")
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"varifold m={V.m} n1={d} atoms={k}\n")
        for a in range(k):
            xs = " ".join(_fmt(v) for v in V.x[a])
            ps = " ".join(_fmt(v) for v in V.P[a].ravel())
            fh.write(f"{xs} | {ps} | {_fmt(V.w[a])}\n")
            if B is not None:
                bs = " ".join(_fmt(v) for v in B[a].ravel())
                fh.write(f"B: {bs}\n")


def _parse_header(line: str, tag: str) -> tuple[int, int, int]:
    parts = line.split()
    if len(parts) != 4 or parts[0] != tag:
        raise FormatError(f"expected '{tag} m=.. n1=.. atoms=..', got {line!r}")
    vals = {}
    for p in parts[1:]:
        key, _, num = p.partition("=")
        if key not in ("m", "n1", "atoms") or not num:
            raise FormatError(f"bad header field {p!r}")
        vals[key] = int(num)
    if set(vals) != {"m", "n1", "atoms"}:
        raise FormatError(f"incomplete header {line!r}")
    return vals["m"], vals["n1"], vals["atoms"]


def load_varifold(path) -> tuple[DiscreteVarifold, np.ndarray | None]:
    """Read a varifold file; returns (V, B) with B None when absent."""
    with open(path, "r", encoding="ascii") as fh:
        return _read_varifold(fh)


def _read_varifold(fh: io.TextIOBase) -> tuple[DiscreteVarifold, np.ndarray | None]:
    header = fh.readline()
    m, d, k = _parse_header(header, "varifold")
    x = np.empty((k, d))
    P = np.empty((k, d, d))
    w = np.empty(k)
    B: np.ndarray | None = None
    a = 0
    for raw in fh:
        line = raw.strip()
        if not line:
            continue
        if line.startswith("B:"):
            if a == 0:
                raise FormatError("curvature line before any atom")
            if B is None:
                B = np.zeros((k, d, d, d))
            entries = np.array(line[2:].split(), dtype=float)
            if entries.size != d**3:
                raise FormatError(f"curvature line needs {d**3} entries")
            B[a - 1] = entries.reshape(d, d, d)
            continue
        if a >= k:
            raise FormatError("more atom lines than the header declared")
        cols = line.split("|")
        if len(cols) != 3:
            raise FormatError(f"atom line needs 'x | P | w', got {raw!r}")
        xa = np.array(cols[0].split(), dtype=float)
        pa = np.array(cols[1].split(), dtype=float)
        if xa.size != d or pa.size != d * d:
            raise FormatError(f"atom line has wrong arity for n1={d}")
        x[a] = xa
        P[a] = pa.reshape(d, d)
        w[a] = float(cols[2])
        a += 1
    if a != k:
        raise FormatError(f"header declared {k} atoms, file held {a}")
    return DiscreteVarifold(x=x, P=P, w=w, m=m), B
