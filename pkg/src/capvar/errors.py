"""Exception types shared across the package."""

from __future__ import annotations


class CapvarError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(CapvarError):
    """Rejected run configuration: unknown key, bad value, unreadable file."""


class RankDeficient(CapvarError):
    """Spanning vectors do not span a subspace of the requested dimension."""


class NotOnSurface(CapvarError):
    """Point lies farther from the container wall than the surface tolerance."""


class FieldClassError(CapvarError):
    """Test field of the wrong class for the requested functional."""


class DegenerateProjection(CapvarError):
    """Projected wall normal is too short to define a co-normal direction."""


class AngleDegenerate(CapvarError):
    """Contact angle is orthogonal at the base point, so the wetting
    co-normal carries no sign information there."""


class AngleIsOrthogonal(CapvarError):
    """Fixture construction requires a non-orthogonal contact angle."""


class DegenerateChart(CapvarError):
    """Chart differential loses rank somewhere on the sampling grid."""


class ExponentError(CapvarError):
    """Integrability exponent must exceed the varifold dimension."""


class RadiusOrder(CapvarError):
    """Radii must satisfy 0 < r1 < r2."""


class NoLambdaFound(CapvarError):
    """No growth rate on the calibration grid makes the curve monotone."""


class NotConical(CapvarError):
    """Density ratio varies too much across the grid for a cone fit."""


class NotContained(CapvarError):
    """Support sticks out of the comparison half-space."""


class DivisionDegenerate(CapvarError):
    """Comparability ratio has a zero denominator and a nonzero numerator."""


class FormatError(CapvarError):
    """Measure file does not match the documented text format."""
