"""Discrete capillary varifolds: constructions, identities, experiments.

The package builds finite varifolds meeting a container wall at a prescribed
contact angle, together with their boundary measures and first-variation
splittings, and numerically certifies the integral identities, monotonicity
statements, and blow-up behavior that the theory predicts for them.
"""

from __future__ import annotations

__version__ = "0.1.0"

from .errors import (
    AngleDegenerate,
    AngleIsOrthogonal,
    CapvarError,
    ConfigError,
    DegenerateChart,
    DegenerateProjection,
    DivisionDegenerate,
    ExponentError,
    FieldClassError,
    FormatError,
    NoLambdaFound,
    NotConical,
    NotContained,
    NotOnSurface,
    RadiusOrder,
    RankDeficient,
)
from .fields import (
    PlateauBump,
    ScalarWeight,
    TestField,
    check_jacobian,
    check_tangential,
    interior_field,
    plateau_field,
    plateau_weight,
    standard_general_battery,
    standard_tangential_battery,
    tangentialize,
    unit_weight,
)
from .geometry import (
    ContactAngleField,
    Container,
    Plane,
    ball,
    check_container,
    constant_angle,
    custom_container,
    halfspace,
    normal_and_tangent,
    plane_from_frame,
    project,
    project_perp,
)
from .varifold import (
    DiscreteVarifold,
    ResidualReport,
    VariationDecomposition,
    ball_mass,
    capillary_residual,
    first_variation,
    load_varifold,
    pushforward_dilation,
    restrict,
    save_varifold,
)
from .capillary import (
    BoundaryVarifold,
    ConormalStats,
    ContactPointReport,
    Disintegration,
    Fiber,
    capillary_gap,
    cbp_check,
    co_normals,
    conormal,
    decomposition_residual,
    disintegrate,
    load_boundary,
    lower_density_filter,
    save_boundary,
)
from .gallery import (
    GALLERY,
    ExampleFixture,
    build_fixture,
    make_cap_union,
    make_distinct_pair,
    make_half_plane,
    make_half_plane_cone,
    make_plane_pair,
    make_perturbed_pair,
    make_ring_plane,
    make_separated_pair,
    make_spherical_cap,
    sample_parametric,
)
from .analysis import (
    BlowUpSequence,
    CompactnessReport,
    DensityCurve,
    TangentConeFit,
    barrier_angle_check,
    bl_distance,
    blow_up,
    boundary_monotone_quantity,
    calibrate_lambda,
    compactness_experiment,
    density_curve,
    dilate_boundary,
    fit_tangent_cone,
    interior_monotonicity_check,
    monotone_slack,
    wall_vector_decay,
)
from .curvature import (
    CurvatureData,
    GrassmannField,
    curvature_energy,
    curvature_identity_residual,
    extend_second_fundamental_form,
    fixture_curvature,
    lsc_check,
    mass_comparability,
    projector_bump_field,
    sphere_curvature,
    standard_curvature_battery,
    zero_curvature,
)
