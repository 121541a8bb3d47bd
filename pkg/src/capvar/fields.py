"""Compactly supported test fields with exact Jacobians.

All cutoffs here are C-infinity plateaus: identically 1 on a coordinate box,
exponential rolloff to 0 on a surrounding box, exactly zero outside.  Two
properties of this family carry the whole verification strategy:

* lattice sums of smooth compactly supported integrands are spectrally
  accurate, so flat fixtures sampled on exact lattices reproduce integral
  identities to near machine precision instead of O(h^2);
* the plateau box is chosen to contain a tube around the fixtures' boundary
  lines, so no rolloff ever crosses a line where the integrand would kink.

Polynomial factors (degree at most one) multiply the plateau to make the
battery sensitive to every first-derivative direction.  Jacobians are exact
closed forms; nothing is finite-differenced.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Callable

import numpy as np

from .errors import FieldClassError
from .geometry import Container

FIELD_KINDS = ("tangential", "interior", "general")


def _step(u: np.ndarray) -> np.ndarray:
    # C-infinity transition: 0 for u<=0, 1 for u>=1; exponentials only touch
    # the open band, which is where almost no atoms live
    u = np.clip(u, 0.0, 1.0)
    out = (u >= 1.0).astype(float)
    mid = (u > 0.0) & (u < 1.0)
    um = u[mid]
    fa = np.exp(-1.0 / um)
    fb = np.exp(-1.0 / (1.0 - um))
    out[mid] = fa / (fa + fb)
    return out


def _step_d(u: np.ndarray) -> np.ndarray:
    out = np.zeros_like(u)
    inside = (u > 0.0) & (u < 1.0)
    ui = u[inside]
    fa = np.exp(-1.0 / ui)
    fb = np.exp(-1.0 / (1.0 - ui))
    dfa = fa / ui**2
    dfb = fb / (1.0 - ui) ** 2
    s = fa + fb
    out[inside] = (dfa * s - fa * (dfa - dfb)) / s**2
    return out


def plateau_profile(t: np.ndarray, a: float, b: float) -> np.ndarray:
    """1 on |t| <= a, smooth rolloff, exactly 0 on |t| >= b."""
    return _step((b - np.abs(t)) / (b - a))


def plateau_profile_d(t: np.ndarray, a: float, b: float) -> np.ndarray:
    """Derivative of :func:`plateau_profile` in t."""
    u = (b - np.abs(t)) / (b - a)
    return _step_d(u) * (-np.sign(t) / (b - a))


@dataclass(frozen=True)
class PlateauBump:
    """Tensor-product plateau cutoff chi(x) = prod_i C(x_i - c_i; a, b)."""

    center: np.ndarray
    a: float
    b: float

    def __post_init__(self):
        c = np.array(self.center, dtype=float)
        c.setflags(write=False)
        object.__setattr__(self, "center", c)
        if not 0.0 < self.a < self.b:
            raise ValueError("plateau needs 0 < a < b")

    def value(self, x: np.ndarray) -> np.ndarray:
        y = np.atleast_2d(np.asarray(x, dtype=float)) - self.center
        return np.prod(plateau_profile(y, self.a, self.b), axis=-1)

    def grad(self, x: np.ndarray) -> np.ndarray:
        return self.value_and_grad(x)[1]

    def value_and_grad(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        y = np.atleast_2d(np.asarray(x, dtype=float)) - self.center
        C = plateau_profile(y, self.a, self.b)
        D = plateau_profile_d(y, self.a, self.b)
        out = np.empty_like(y)
        for j in range(y.shape[-1]):
            cols = C.copy()
            cols[:, j] = D[:, j]
            out[:, j] = np.prod(cols, axis=-1)
        return np.prod(C, axis=-1), out


@dataclass(frozen=True)
class TestField:
    """C^1 vector field with declared class and exact Jacobian.

    ``value`` maps (k, d) points to (k, d) vectors; ``jacobian`` maps them to
    (k, d, d) matrices with J[i, j] = d(phi_i)/d(x_j).  ``kind`` declares the
    admissible test class: "tangential" fields lie in the wall's tangent
    space at wall points, "interior" fields vanish near the wall, "general"
    fields are unrestricted.
    """

    name: str
    kind: str
    value: Callable[[np.ndarray], np.ndarray]
    jacobian: Callable[[np.ndarray], np.ndarray]
    support_radius: float
    box: tuple[np.ndarray, float] | None = None
    # (direction v, gradient of the scalar amplitude): set when the field is
    # amp(x) * v, letting reductions use J = v (x) grad(amp) without building
    # the full (k, d, d) stack
    rank_one: tuple[np.ndarray, Callable[[np.ndarray], np.ndarray]] | None = None

    def __post_init__(self):
        if self.kind not in FIELD_KINDS:
            raise FieldClassError(f"unknown field kind {self.kind!r}")

    def support_mask(self, x: np.ndarray) -> np.ndarray:
        """Atoms that can contribute: outside the box the field is exactly 0."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if self.box is None:
            return np.ones(x.shape[0], dtype=bool)
        center, half = self.box
        return np.all(np.abs(x - center) <= half, axis=1)


@dataclass(frozen=True)
class ScalarWeight:
    """Nonnegative C^1 scalar weight with exact gradient."""

    name: str
    value: Callable[[np.ndarray], np.ndarray]
    gradient: Callable[[np.ndarray], np.ndarray]


def plateau_field(
    name: str,
    bump: PlateauBump,
    direction,
    kind: str,
    poly_index: int | None = None,
) -> TestField:
    """Field phi(x) = chi(x) * q(x) * v with q = 1 or q = x_j.

    The Jacobian is the exact product rule expansion; ``poly_index`` selects
    the linear factor q(x) = x_j (None means q = 1).
    """
    v = np.array(direction, dtype=float)
    v.setflags(write=False)
    d = v.size

    def value(x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        amp = bump.value(x)
        if poly_index is not None:
            amp = amp * x[:, poly_index]
        return amp[:, None] * v

    def grad_amp(x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        chi, g = bump.value_and_grad(x)
        if poly_index is not None:
            g = g * x[:, poly_index][:, None]
            g[:, poly_index] += chi
        return g

    def jacobian(x):
        g = grad_amp(x)
        return v[None, :, None] * g[:, None, :]

    radius = float(bump.b * np.sqrt(d) + np.linalg.norm(bump.center))
    return TestField(
        name=name,
        kind=kind,
        value=value,
        jacobian=jacobian,
        support_radius=radius,
        box=(bump.center, bump.b),
        rank_one=(v, grad_amp),
    )


def plateau_weight(name: str, bump: PlateauBump) -> ScalarWeight:
    """Scalar plateau weight h(x) = chi(x)."""
    return ScalarWeight(name=name, value=bump.value, gradient=bump.grad)


def unit_weight(dim: int) -> ScalarWeight:
    """The constant weight h = 1."""

    def value(x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return np.ones(x.shape[0])

    def gradient(x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return np.zeros_like(x)

    return ScalarWeight(name="one", value=value, gradient=gradient)


def tangentialize(field: TestField, container: Container) -> TestField:
    """Remove the wall-normal component everywhere: phi = u - <u, g> g.

    Uses the container's analytic gradient and Hessian, so the returned
    Jacobian is exact.  Valid wherever grad_sdf is smooth (inside the tube
    for curved walls, everywhere for a half-space).
    """

    def value(x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        u = field.value(x)
        g = container.grad_sdf(x)
        return u - np.sum(u * g, axis=-1)[:, None] * g

    def jacobian(x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        u = field.value(x)
        Ju = field.jacobian(x)
        g = container.grad_sdf(x)
        Jg = container.hess_sdf(x)
        ug = np.sum(u * g, axis=-1)
        grad_ug = np.einsum("kij,ki->kj", Ju, g) + np.einsum("ki,kij->kj", u, Jg)
        return Ju - g[:, :, None] * grad_ug[:, None, :] - ug[:, None, None] * Jg

    return TestField(
        name=field.name + ".tang",
        kind="tangential",
        value=value,
        jacobian=jacobian,
        support_radius=field.support_radius,
        box=field.box,
    )


def _halfspace_battery(dim: int) -> list[TestField]:
    e = np.eye(dim)
    e1, e2, ed = e[0], e[min(1, dim - 1)], e[dim - 1]
    u_plus = (e1 + e2) / np.sqrt(2.0)
    u_minus = (e1 - e2) / np.sqrt(2.0)
    chi0 = PlateauBump(np.zeros(dim), 1.0, 3.0)
    # shifted bumps stay within reach 3.7 so lattice fixtures of extent 4
    # still contain the whole support
    shift = 0.7 * e2 if dim >= 3 else np.zeros(dim)
    chip = PlateauBump(shift, 1.0, 3.0)
    chim = PlateauBump(-shift, 1.0, 3.0)
    chiw = PlateauBump(np.zeros(dim), 1.6, 3.4)
    chit = PlateauBump(np.zeros(dim), 0.5, 2.0)
    last = dim - 1
    spec = [
        ("chi0*e1", chi0, e1, None),
        ("chi0*e2", chi0, e2, None),
        ("chi0*(e1+e2)", chi0, u_plus, None),
        ("chi0*(e1-e2)", chi0, u_minus, None),
        ("chi+*e1", chip, e1, None),
        ("chi+*e2", chip, e2, None),
        ("chi-*e1", chim, e1, None),
        ("chi-*e2", chim, e2, None),
        ("chi0*x2*e1", chi0, e1, 1),
        ("chi0*x1*e1", chi0, e1, 0),
        ("chi0*x2*e2", chi0, e2, 1),
        ("chi0*x1*e2", chi0, e2, 0),
        ("chi0*xd*ed", chi0, ed, last),
        ("chi+*xd*ed", chip, ed, last),
        ("chi0*xd*e1", chi0, e1, last),
        ("chi0*xd*e2", chi0, e2, last),
        ("chiw*e1", chiw, e1, None),
        ("chiw*e2", chiw, e2, None),
        ("chit*e1", chit, e1, None),
        ("chit*(e1+e2)", chit, u_plus, None),
    ]
    if dim == 2:
        # no second horizontal axis: drop e2-flavored entries, add widths
        chim2 = PlateauBump(np.zeros(dim), 0.8, 2.6)
        spec = [
            ("chi0*e1", chi0, e1, None),
            ("chi0*x1*e1", chi0, e1, 0),
            ("chi0*xd*ed", chi0, ed, last),
            ("chi0*xd*e1", chi0, e1, last),
            ("chiw*e1", chiw, e1, None),
            ("chit*e1", chit, e1, None),
            ("chim2*e1", chim2, e1, None),
            ("chim2*x1*e1", chim2, e1, 0),
            ("chiw*xd*ed", chiw, ed, last),
            ("chit*xd*e1", chit, e1, last),
        ]
    out = []
    for name, bump, v, poly in spec:
        # vertical components must vanish on the wall: only x_d * e_d mixes in e_d
        tangential = v[last] == 0.0 or poly == last
        out.append(
            plateau_field(name, bump, v, "tangential" if tangential else "general", poly)
        )
    return out


def standard_tangential_battery(container: Container, count: int | None = None) -> list[TestField]:
    """The documented tangential battery.

    For a half-space this is a fixed list of plateau-times-polynomial fields
    whose vertical components vanish on the wall; for curved containers the
    general battery is tangentialized against the wall normal.  Fields are
    constant on the box |x_i| <= 0.5 around every coordinate axis, which is
    what keeps lattice sums over flat fixtures spectrally accurate.
    """
    if container.kind == "halfspace":
        battery = _halfspace_battery(container.dim)
    else:
        battery = [tangentialize(f, container) for f in standard_general_battery(container.dim)]
    if count is None:
        count = len(battery)
    if not 1 <= count <= len(battery):
        raise ValueError(f"battery has {len(battery)} fields, requested {count}")
    return battery[:count]


def standard_general_battery(dim: int, count: int | None = None) -> list[TestField]:
    """Unrestricted battery: tangential core plus wall-normal probes."""
    core = [f for f in _halfspace_battery(dim) if "xd" not in f.name][:12]
    e = np.eye(dim)
    ed = e[dim - 1]
    chi0 = PlateauBump(np.zeros(dim), 1.0, 3.0)
    shift = 0.7 * e[min(1, dim - 1)] if dim >= 3 else np.zeros(dim)
    chip = PlateauBump(shift, 1.0, 3.0)
    chiw = PlateauBump(np.zeros(dim), 1.6, 3.4)
    chit = PlateauBump(np.zeros(dim), 0.5, 2.0)
    extras = [
        ("chi0*ed", chi0, ed, None),
        ("chi+*ed", chip, ed, None),
        ("chiw*ed", chiw, ed, None),
        ("chit*ed", chit, ed, None),
        ("chi0*x1*ed", chi0, ed, 0),
        ("chi0*x2*ed", chi0, ed, min(1, dim - 1)),
        ("chi0*xd*ed", chi0, ed, dim - 1),
        ("chi+*xd*ed", chip, ed, dim - 1),
    ]
    battery = core + [plateau_field(n, b, v, "general", p) for n, b, v, p in extras]
    if count is None:
        count = len(battery)
    if not 1 <= count <= len(battery):
        raise ValueError(f"battery has {len(battery)} fields, requested {count}")
    return battery[:count]


def interior_field(dim: int, center, a: float, b: float, direction) -> TestField:
    """Plateau field declared as interior: support clear of the wall."""
    bump = PlateauBump(np.asarray(center, dtype=float), a, b)
    return plateau_field(f"interior[{a},{b}]", bump, direction, "interior")


def check_jacobian(field: TestField, probes: np.ndarray, step: float = 1e-5) -> float:
    """Worst relative disagreement between the Jacobian and central differences.

    Returns max over probes of |J_fd - J| / (1 + |J|); the declared contract
    is that this stays below 1e-6.
    """
    probes = np.atleast_2d(np.asarray(probes, dtype=float))
    J = field.jacobian(probes)
    worst = 0.0
    d = probes.shape[1]
    for j in range(d):
        dx = np.zeros(d)
        dx[j] = step
        fd = (field.value(probes + dx) - field.value(probes - dx)) / (2 * step)
        err = np.max(np.abs(fd - J[:, :, j])) / (1.0 + np.max(np.abs(J)))
        worst = max(worst, float(err))
    return worst


def check_tangential(field: TestField, container: Container, surface_samples: np.ndarray) -> float:
    """Largest wall-normal component of the field over wall sample points."""
    xs = np.atleast_2d(np.asarray(surface_samples, dtype=float))
    vals = field.value(xs)
    nus = container.grad_sdf(xs)
    return float(np.max(np.abs(np.sum(vals * nus, axis=-1))))
