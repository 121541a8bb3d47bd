"""Planes, containers, and contact-angle data.

Planes are stored as orthogonal projectors rather than frames: projectors are
gauge-free (no basis ordering or sign ambiguity), compose linearly in fiber
averages, and make the Grassmannian distance a plain operator norm.  Frames
are recovered on demand by eigendecomposition.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import NotOnSurface, RankDeficient

PROJ_SYM_TOL = 1e-12
PROJ_IDEM_TOL = 1e-10
PROJ_TRACE_TOL = 1e-10
PLANE_EQUAL_TOL = 1e-8
SURFACE_TOL = 1e-8
GRAM_TOL = 1e-12
UNIT_GRAD_TOL = 1e-10


def _frozen(a) -> np.ndarray:
    out = np.array(a, dtype=float)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class Plane:
    """An m-dimensional linear subspace of R^d stored as its projector.

    Parameters
    ----------
    proj : (d, d) array
        Orthogonal projector onto the subspace.  Must be symmetric within
        1e-12, idempotent within 1e-10, and have trace m within 1e-10.
    m : int
        Subspace dimension.
    """

    proj: np.ndarray
    m: int

    def __post_init__(self):
        P = np.array(self.proj, dtype=float)
        if P.ndim != 2 or P.shape[0] != P.shape[1]:
            raise ValueError(f"projector must be square, got shape {P.shape}")
        if not 1 <= self.m <= P.shape[0]:
            raise ValueError(f"plane dimension {self.m} out of range for d={P.shape[0]}")
        if np.max(np.abs(P - P.T)) > PROJ_SYM_TOL:
            raise ValueError("projector is not symmetric within 1e-12")
        if np.max(np.abs(P @ P - P)) > PROJ_IDEM_TOL:
            raise ValueError("projector is not idempotent within 1e-10")
        if abs(np.trace(P) - self.m) > PROJ_TRACE_TOL:
            raise ValueError(f"projector trace {np.trace(P):.2e} != m={self.m}")
        object.__setattr__(self, "proj", _frozen(P))

    @property
    def dim(self) -> int:
        """Ambient dimension d."""
        return self.proj.shape[0]

    def apply(self, v: np.ndarray) -> np.ndarray:
        """Project v (last axis is the vector axis) onto the plane."""
        return np.asarray(v, dtype=float) @ self.proj

    def perp(self, v: np.ndarray) -> np.ndarray:
        """Component of v orthogonal to the plane."""
        v = np.asarray(v, dtype=float)
        return v - v @ self.proj

    def frame(self) -> np.ndarray:
        """Orthonormal basis of the plane, shape (m, d).

        Rows are eigenvectors of the projector for its unit eigenvalues,
        ordered by descending eigenvalue and sign-fixed so the first
        component above 1e-12 in absolute value is positive.
        """
        vals, vecs = np.linalg.eigh(self.proj)
        order = np.argsort(vals)[::-1][: self.m]
        rows = vecs[:, order].T.copy()
        for r in rows:
            nz = np.nonzero(np.abs(r) > 1e-12)[0]
            if nz.size and r[nz[0]] < 0:
                r *= -1.0
        return rows

    def distance(self, other: "Plane") -> float:
        """Grassmannian distance: operator norm of the projector difference."""
        return float(np.linalg.norm(self.proj - other.proj, 2))

    def equals(self, other: "Plane") -> bool:
        """Planes compare equal below distance 1e-8."""
        return self.m == other.m and self.distance(other) <= PLANE_EQUAL_TOL


def plane_from_frame(vectors) -> Plane:
    """Build the plane spanned by the given vectors.

    Parameters
    ----------
    vectors : (m, d) array_like
        Spanning vectors, one per row.  They need not be orthonormal;
        orthonormalization happens internally and the result is gauge-free.

    Raises
    ------
    RankDeficient
        If the Gram determinant falls below 1e-12.
    """
    V = np.atleast_2d(np.asarray(vectors, dtype=float))
    gram = V @ V.T
    if abs(np.linalg.det(gram)) < GRAM_TOL:
        raise RankDeficient(f"Gram determinant {np.linalg.det(gram):.3e} below 1e-12")
    q, _ = np.linalg.qr(V.T)
    P = q @ q.T
    return Plane(proj=(P + P.T) / 2.0, m=V.shape[0])


def project(plane: Plane, v: np.ndarray) -> np.ndarray:
    """Orthogonal projection of v onto the plane."""
    return plane.apply(v)


def project_perp(plane: Plane, v: np.ndarray) -> np.ndarray:
    """Component of v orthogonal to the plane."""
    return plane.perp(v)


@dataclass(frozen=True)
class Container:
    """Wetted container with a smooth wall.

    The signed distance is positive inside the container, zero on the wall S,
    and ``grad_sdf`` is the inward unit normal on S.  Derivatives must be
    analytic (supplied, not finite-differenced): every downstream Jacobian
    relies on them being exact.

    Parameters
    ----------
    sdf, grad_sdf, hess_sdf : callable
        Batched maps taking points of shape (..., d) to values of shape
        (...,), (..., d) and (..., d, d).
    tubular_radius : float
        Radius of the tube around S on which the distance is smooth with
        unit gradient.
    kind : str
        "halfspace", "ball", or "custom".
    dim : int
        Ambient dimension d.
    """

    sdf: Callable[[np.ndarray], np.ndarray]
    grad_sdf: Callable[[np.ndarray], np.ndarray]
    hess_sdf: Callable[[np.ndarray], np.ndarray]
    tubular_radius: float
    kind: str
    dim: int


def halfspace(dim: int) -> Container:
    """Upper half-space container: sdf(x) = x_d exactly, wall {x_d = 0}."""

    def sdf(x):
        return np.asarray(x, dtype=float)[..., -1]

    def grad(x):
        x = np.asarray(x, dtype=float)
        g = np.zeros_like(x)
        g[..., -1] = 1.0
        return g

    def hess(x):
        x = np.asarray(x, dtype=float)
        return np.zeros(x.shape + (x.shape[-1],))

    return Container(sdf, grad, hess, tubular_radius=np.inf, kind="halfspace", dim=dim)


def ball(radius: float, center) -> Container:
    """Ball container of the given radius: sdf(x) = radius - |x - center|."""
    c = np.asarray(center, dtype=float)
    if radius <= 0:
        raise ValueError("ball radius must be positive")

    def sdf(x):
        y = np.asarray(x, dtype=float) - c
        return radius - np.sqrt(np.sum(y * y, axis=-1))

    def grad(x):
        y = np.asarray(x, dtype=float) - c
        r = np.sqrt(np.sum(y * y, axis=-1))
        return -y / r[..., None]

    def hess(x):
        y = np.asarray(x, dtype=float) - c
        r = np.sqrt(np.sum(y * y, axis=-1))
        u = y / r[..., None]
        eye = np.eye(c.size)
        return -(eye - u[..., :, None] * u[..., None, :]) / r[..., None, None]

    return Container(sdf, grad, hess, tubular_radius=radius, kind="ball", dim=c.size)


def custom_container(sdf, grad_sdf, hess_sdf, tubular_radius: float, dim: int) -> Container:
    """Wrap user-supplied analytic callables as a container."""
    return Container(sdf, grad_sdf, hess_sdf, tubular_radius, kind="custom", dim=dim)


def check_container(container: Container, probes: np.ndarray) -> float:
    """Largest deviation of |grad_sdf| from 1 over probes inside the tube.

    Only probes with |sdf| below the tubular radius count; the caller is
    expected to assert the return value is at most 1e-10.
    """
    probes = np.atleast_2d(np.asarray(probes, dtype=float))
    inside = np.abs(container.sdf(probes)) < container.tubular_radius
    if not np.any(inside):
        return 0.0
    g = container.grad_sdf(probes[inside])
    return float(np.max(np.abs(np.sqrt(np.sum(g * g, axis=-1)) - 1.0)))


def normal_and_tangent(container: Container, x) -> tuple[np.ndarray, np.ndarray]:
    """Inward unit normal and tangent projector of the wall at x.

    Raises
    ------
    NotOnSurface
        If |sdf(x)| exceeds 1e-8.
    """
    x = np.asarray(x, dtype=float)
    s = float(container.sdf(x))
    if abs(s) > SURFACE_TOL:
        raise NotOnSurface(f"|sdf(x)| = {abs(s):.3e} exceeds {SURFACE_TOL}")
    nu = np.asarray(container.grad_sdf(x), dtype=float)
    T = np.eye(x.shape[-1]) - np.outer(nu, nu)
    return nu, T


@dataclass(frozen=True)
class ContactAngleField:
    """Prescribed contact angle along the wall, with its spatial gradient.

    ``beta`` maps points (..., d) to angles in (0, pi); ``grad_beta`` maps
    them to gradient vectors (..., d).
    """

    beta: Callable[[np.ndarray], np.ndarray]
    grad_beta: Callable[[np.ndarray], np.ndarray]


def constant_angle(beta0: float, dim: int) -> ContactAngleField:
    """Spatially constant contact angle."""
    if not 0.0 < beta0 < np.pi:
        raise ValueError(f"contact angle must lie in (0, pi), got {beta0}")

    def beta(x):
        x = np.asarray(x, dtype=float)
        return np.full(x.shape[:-1], beta0)

    def grad(x):
        x = np.asarray(x, dtype=float)
        return np.zeros_like(x)

    return ContactAngleField(beta, grad)
