"""Independent reference computations and frozen baselines.

Everything here recomputes a quantity through a different code path than the
library uses (math.fsum, dense einsum, brute-force loops) or pins a value
measured once on the reference configuration.  Tests compare the library
against these, never the library against itself.
"""

from __future__ import annotations

import math

import numpy as np

# measured once at beta = pi/3, h = 0.02, extent = 4 on float64
PLANE_PAIR_MASS = 64.0
PLANE_PAIR_BOUNDARY = 16.0
PLANE_PAIR_COMPARABILITY = (4.0, 0.25)
CAP_RESIDUAL_WINDOW = (1e-4, 1e-3)
CAP_CURVATURE_WINDOW = (1e-4, 1e-3)
CONE_LAMBDA = float(np.ldexp(1.0, -10))
SPHERE_AREA = 4.0 * math.pi
CAP_AREA = math.pi  # 2 pi (1 - cos beta) at beta = pi/3


def fsum_mass(w: np.ndarray) -> float:
    """Total weight via math.fsum (exact up to one final rounding)."""
    return math.fsum(np.asarray(w, dtype=float).tolist())


def dense_first_variation(V, field) -> float:
    """First variation through the full Jacobian stack and fsum.

    The library's reduction uses the rank-one factorization of plateau
    fields and a pairwise tree; this path builds every (d, d) Jacobian and
    accumulates with compensated summation instead.
    """
    J = field.jacobian(V.x)
    div = np.einsum("kij,kji->k", V.P, J)
    return math.fsum((V.w * div).tolist())


def brute_ball_mass(V, center, r: float) -> float:
    center = np.asarray(center, dtype=float)
    inside = np.linalg.norm(V.x - center, axis=1) <= r
    return fsum_mass(V.w[inside])


def fd_jacobian(field, x: np.ndarray, step: float = 1e-6) -> np.ndarray:
    """Central-difference Jacobian stack, J[k, i, j] = d(phi_i)/d(x_j)."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    k, d = x.shape
    out = np.empty((k, d, d))
    for j in range(d):
        e = np.zeros(d)
        e[j] = step
        out[:, :, j] = (field.value(x + e) - field.value(x - e)) / (2 * step)
    return out


def fd_hessian_sdf(container, x: np.ndarray, step: float = 1e-5) -> np.ndarray:
    x = np.atleast_2d(np.asarray(x, dtype=float))
    k, d = x.shape
    out = np.empty((k, d, d))
    for j in range(d):
        e = np.zeros(d)
        e[j] = step
        out[:, :, j] = (container.grad_sdf(x + e) - container.grad_sdf(x - e)) / (2 * step)
    return out


def sphere_second_form(points: np.ndarray, center, radius: float = 1.0) -> np.ndarray:
    """Closed-form extended second fundamental form of a sphere.

    B_ijk = -(P_ij c_k + P_ik c_j) / r^2 with c the outward unit normal and
    P the tangent projector, written entry by entry.
    """
    y = np.asarray(points, dtype=float) - np.asarray(center, dtype=float)
    r = np.linalg.norm(y, axis=1)
    c = y / r[:, None]
    k, d = y.shape
    B = np.empty((k, d, d, d))
    for a in range(k):
        P = np.eye(d) - np.outer(c[a], c[a])
        for i in range(d):
            for j in range(d):
                for l in range(d):
                    B[a, i, j, l] = -(P[i, j] * c[a, l] + P[i, l] * c[a, j]) / radius**2
    return B


def pair_tangential_conormal(beta0: float) -> float:
    """Wall-tangential conormal magnitude of a single sheet at angle beta."""
    return abs(math.cos(beta0))
