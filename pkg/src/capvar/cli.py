"""Command-line driver: build fixtures, run the checks, write report files.

Every subcommand builds its fixture from the effective configuration,
computes the checks its name promises, and writes a JSON report plus CSV
curves (and a PNG rendering) into the output directory.  The exit code is 0
when every check row passes, 1 when any fails, and 2 when the configuration
itself is rejected.  Reports embed the package version and every effective
value a check depended on; worker count and output directory are execution
knobs that cannot change a computed value, so they stay out of the report
and identical configurations produce byte-identical reports at any worker
count.
"""

from __future__ import annotations

import argparse
import math
import os
from dataclasses import dataclass, fields as dc_fields

import numpy as np

from . import __version__
from .analysis import (
    blow_up,
    boundary_monotone_quantity,
    calibrate_lambda,
    compactness_experiment,
    density_curve,
    fit_tangent_cone,
    barrier_angle_check,
    interior_monotonicity_check,
    monotone_slack,
    unit_ball_volume,
    wall_vector_decay,
)
from .capillary import co_normals, decomposition_residual, disintegrate, save_boundary
from .curvature import (
    curvature_energy,
    curvature_identity_residual,
    fixture_curvature,
    lsc_check,
    mass_comparability,
    standard_curvature_battery,
)
from .errors import (
    AngleDegenerate,
    AngleIsOrthogonal,
    ConfigError,
    DivisionDegenerate,
    ExponentError,
    NoLambdaFound,
    NotConical,
    NotContained,
    RadiusOrder,
)
from .fields import standard_general_battery, standard_tangential_battery, unit_weight
from .gallery import (
    GALLERY,
    build_fixture,
    make_half_plane,
    make_plane_pair,
    make_separated_pair,
)
from .report import (
    check_row,
    render_report,
    residual_rows,
    save_curve_figure,
    save_fixture_figure,
    save_residual_figure,
    write_csv,
    write_text,
)
from .varifold import capillary_residual, save_varifold

SUBCOMMANDS = ("example", "verify", "monotone", "blowup", "compactness", "curvature")

DEFAULT_FIXTURE = {
    "example": "plane-pair",
    "verify": "plane-pair",
    "monotone": "cap-focused",
    "blowup": "cap-focused",
    "compactness": "separated-pair",
    "curvature": "cap",
}

# planar fixtures hold the identities to rounding; curved ones to O(h)
EXACT_FIXTURES = frozenset(
    {"plane-pair", "separated-pair", "perturbed-pair", "half-plane", "distinct-pair"}
)


@dataclass(frozen=True)
class RunConfig:
    """Effective settings of one run.

    Fixture knobs come first, then experiment knobs, then the tolerances;
    every tolerance has a default.  ``fixture = None`` means the subcommand's
    natural fixture.  ``workers`` and ``out`` steer execution only and are
    never embedded in reports.
    """

    fixture: str | None = None
    beta: float = math.pi / 3
    h: float = 0.02
    extent: float = 4.0
    separation: float = 0.5
    eps: float = 0.1
    p: float = 3.0
    levels: int = 6
    region_radius: float = 0.5
    rho_min: float = 0.05
    rho_max: float = 1.0
    r_inner: float = 0.2
    r_outer: float = 0.8
    lam: float | None = None
    s_grid: tuple[float, ...] = (1.0, 0.5, 0.25, 0.125)
    merge_tol: float = 0.5
    out: str = "."
    workers: int = 1
    tol_flat: float = 1e-10
    tol_curved: float = 0.05
    tol_construction: float = 1e-8
    slack_factor: float = 5.0
    tol_interior: float = 1e-9
    tol_cauchy: float = 1.7
    tol_converged: float = 1e-8
    tol_density: float = 0.05
    tol_angle: float = 0.05
    tol_wall: float = 20.0
    tol_relations: float = 1e-9
    tol_decay: float = 0.1
    tol_control: float = 0.9
    tol_margin: float = 1e-10
    tol_equality: float = 1e-8
    tol_lsc: float = 1e-9


_FIELD_HELP = {
    "fixture": "gallery fixture name (default: the subcommand's natural one)",
    "beta": "contact angle in radians",
    "h": "lattice spacing of the fixture",
    "extent": "half-width of the planar fixtures",
    "separation": "wall-line offset of the separated pair and family base offset",
    "eps": "mass imbalance of the perturbed pair",
    "p": "integrability exponent of the monotone quantity (needs p > m)",
    "levels": "number of dyadic blow-up radii 2^-1 .. 2^-levels",
    "region_radius": "metric dictionary region for blow-up distances",
    "rho_min": "smallest density-curve radius",
    "rho_max": "largest density-curve radius and compactness observation scale",
    "r_inner": "inner radius of the interior monotonicity check",
    "r_outer": "outer radius of the interior monotonicity check",
    "lam": "growth rate override; 'none' calibrates on the dyadic grid",
    "s_grid": "comma-separated decreasing family parameters",
    "merge_tol": "observation-scale site merging tolerance",
    "out": "output directory for reports, curves, and figures",
    "workers": "worker threads for the reductions (1, 2, 8, ...)",
    "tol_flat": "relative residual bound on exact planar fixtures",
    "tol_curved": "absolute residual bound on curved fixtures",
    "tol_construction": "bound on fixture construction gaps",
    "slack_factor": "boundary slack allowance in units of h",
    "tol_interior": "allowed negative slack of the interior inequality",
    "tol_cauchy": "required decrease factor of consecutive blow-up distances",
    "tol_converged": "distance floor below which the blow-up counts as settled",
    "tol_density": "vertex density window around 1/2",
    "tol_angle": "cone angle window in radians",
    "tol_wall": "bound on the wall-pairing decay constant",
    "tol_relations": "bound on the per-atom curvature tensor relation gaps",
    "tol_decay": "degeneracy factor: final integral vs first",
    "tol_control": "survival factor for the one-sided control family",
    "tol_margin": "slack under |cos beta| for per-component margins",
    "tol_equality": "containment tolerance of the barrier equality branch",
    "tol_lsc": "allowance of the lower-semicontinuity comparison",
}


def _parse_value(key: str, raw: str):
    """Coerce a raw string to the config field's type, or raise ConfigError."""
    fields = {f.name: f for f in dc_fields(RunConfig)}
    if key not in fields:
        raise ConfigError(f"unknown config key {key!r}")
    raw = raw.strip()
    if key == "fixture":
        return raw
    if key == "lam":
        if raw.lower() in ("none", ""):
            return None
        try:
            return float(raw)
        except ValueError:
            raise ConfigError(f"lam must be a number or 'none', got {raw!r}") from None
    if key == "s_grid":
        try:
            grid = tuple(float(tok) for tok in raw.split(",") if tok.strip())
        except ValueError:
            raise ConfigError(f"s_grid must be comma-separated numbers, got {raw!r}") from None
        if not grid:
            raise ConfigError("s_grid must hold at least one value")
        return grid
    default = fields[key].default
    try:
        if isinstance(default, int) and not isinstance(default, bool):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
    except ValueError:
        raise ConfigError(f"bad value for {key}: {raw!r}") from None
    return raw


def read_config_file(path: str) -> dict:
    """Parse a flat 'key = value' file; '#' starts a comment."""
    try:
        with open(path, "r", encoding="ascii") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from None
    values: dict = {}
    for ln, line in enumerate(lines, start=1):
        text = line.split("#", 1)[0].strip()
        if not text:
            continue
        key, sep, raw = text.partition("=")
        if not sep:
            raise ConfigError(f"{path}:{ln}: expected 'key = value'")
        values[key.strip().replace("-", "_")] = _parse_value(key.strip().replace("-", "_"), raw)
    return values


def effective_config(args: argparse.Namespace) -> RunConfig:
    """Merge defaults, config file, and flags; flags win."""
    values: dict = {}
    if getattr(args, "config", None):
        values.update(read_config_file(args.config))
    for f in dc_fields(RunConfig):
        raw = getattr(args, f.name, None)
        if raw is not None:
            values[f.name] = _parse_value(f.name, raw)
    cfg = RunConfig(**values)
    if cfg.workers < 1:
        raise ConfigError("workers must be at least 1")
    if cfg.h <= 0 or cfg.extent <= 0:
        raise ConfigError("h and extent must be positive")
    if not 0.0 < cfg.rho_min < cfg.rho_max:
        raise ConfigError("need 0 < rho_min < rho_max")
    if not 0.0 < cfg.r_inner < cfg.r_outer:
        raise ConfigError("need 0 < r_inner < r_outer")
    if cfg.levels < 2:
        raise ConfigError("levels must be at least 2")
    grid = np.asarray(cfg.s_grid, dtype=float)
    if np.any(grid <= 0.0) or np.any(np.diff(grid) >= 0.0):
        raise ConfigError("s_grid must be positive and strictly decreasing")
    if cfg.fixture is not None and cfg.fixture not in GALLERY:
        known = ", ".join(GALLERY)
        raise ConfigError(f"unknown fixture {cfg.fixture!r}; known: {known}")
    return cfg


def config_dict(cfg: RunConfig, fixture: str) -> dict:
    """Report view of the configuration: everything that shapes a value."""
    body = {f.name: getattr(cfg, f.name) for f in dc_fields(RunConfig)}
    body["fixture"] = fixture
    del body["workers"]
    del body["out"]
    return body


def _build(cfg: RunConfig, name: str):
    return build_fixture(
        name,
        cfg.beta,
        h=cfg.h,
        extent=cfg.extent,
        separation=cfg.separation,
        eps=cfg.eps,
    )


def _base_point(fix) -> np.ndarray:
    """Contact point the curve and blow-up studies center on."""
    if "rim_point" in fix.expected:
        return np.asarray(fix.expected["rim_point"], dtype=float)
    return np.zeros(fix.V.dim)


def _rho_grid(fix, rho_min: float, rho_max: float) -> np.ndarray:
    """Radius grid adapted to the fixture's quadrature structure.

    Fixtures built from rings carry radii at which ball masses are exact
    (chords of the geodesic bands, or the dyadic ring radii); sampling there
    keeps the staircase error of partial rings out of the curve.
    """
    exp = fix.expected
    src = exp.get("band_chords")
    if src is None:
        src = exp.get("ring_radii")
    if src is not None:
        grid = np.unique(np.asarray(src, dtype=float))
        grid = grid[(grid >= rho_min) & (grid <= rho_max)]
        if grid.size >= 4:
            return grid
    return np.geomspace(rho_min, rho_max, 33)


def _residual_threshold(cfg: RunConfig, name: str) -> tuple[float, bool]:
    if name in EXACT_FIXTURES:
        return cfg.tol_flat, True
    return cfg.tol_curved, False


# ---------------------------------------------------------------------------
# subcommand bodies; each returns (rows, observations, artifact paths)


def run_example(cfg: RunConfig, name: str, out: str):
    fix = _build(cfg, name)
    rows = []
    for key, value in sorted(fix.basic_checks().items()):
        rows.append(
            check_row(
                f"construction-{key.replace('_', '-')}",
                value,
                cfg.tol_construction,
                value <= cfg.tol_construction,
                f"{name} construction gap",
            )
        )
    mass = fix.V.mass(workers=cfg.workers)
    sigma = fix.boundary.total(workers=cfg.workers)
    rows.append(check_row("mass-positive", mass, 0.0, mass > 0.0, f"{name} interior mass"))
    rows.append(
        check_row("boundary-mass-positive", sigma, 0.0, sigma > 0.0, f"{name} boundary mass")
    )
    Bdata = fixture_curvature(fix)
    blk = Bdata.B if Bdata.B.any() else None
    vfd = os.path.join(out, f"example-{name}.vfd")
    bnd = os.path.join(out, f"example-{name}.bnd")
    save_varifold(vfd, fix.V, B=blk)
    save_boundary(bnd, fix.boundary)
    save_fixture_figure(os.path.join(out, f"example-{name}.png"), fix)
    obs = {
        "atoms": fix.V.size,
        "boundary_atoms": fix.boundary.size,
        "mass": mass,
        "boundary_mass": sigma,
        "expected": {k: v for k, v in sorted(fix.expected.items()) if v is not None},
    }
    return rows, obs, [vfd, bnd]


def run_verify(cfg: RunConfig, name: str, out: str):
    fix = _build(cfg, name)
    dis = disintegrate(fix.boundary)
    stats = co_normals(dis, fix.container)
    threshold, relative = _residual_threshold(cfg, name)
    reading = "relative" if relative else "absolute"

    battery_t = standard_tangential_battery(fix.container)
    rep_t = capillary_residual(
        fix.V,
        fix.dec.H,
        dis.sites,
        stats.tangential,
        dis.sigma,
        battery_t,
        workers=cfg.workers,
    )
    rows = residual_rows(
        rep_t,
        "tangential-identity",
        threshold,
        relative,
        f"first variation against the wall-tangential battery on {name}",
    )

    battery_g = standard_general_battery(fix.V.dim)
    rep_g = decomposition_residual(
        fix.V, fix.dec, dis, fix.container, battery_g, workers=cfg.workers
    )
    rows += residual_rows(
        rep_g,
        "splitting-identity",
        threshold,
        relative,
        f"four-part splitting against the unrestricted battery on {name}",
    )

    worst = max(fix.basic_checks().values())
    rows.append(
        check_row(
            "construction",
            worst,
            cfg.tol_construction,
            worst <= cfg.tol_construction,
            f"worst {name} construction gap",
        )
    )
    write_csv(
        os.path.join(out, f"verify-{name}-tangential.csv"),
        ["field", "absolute", "relative"],
        [np.arange(len(rep_t.field_names)), rep_t.absolute, rep_t.relative],
    )
    write_csv(
        os.path.join(out, f"verify-{name}-splitting.csv"),
        ["field", "absolute", "relative"],
        [np.arange(len(rep_g.field_names)), rep_g.absolute, rep_g.relative],
    )
    save_residual_figure(
        os.path.join(out, f"verify-{name}.png"), rep_t, f"{name}: tangential battery"
    )
    obs = {
        "reading": reading,
        "tangential_fields": list(rep_t.field_names),
        "tangential_absolute": rep_t.absolute,
        "tangential_relative": rep_t.relative,
        "splitting_fields": list(rep_g.field_names),
        "splitting_absolute": rep_g.absolute,
        "splitting_relative": rep_g.relative,
    }
    return rows, obs, []


def run_monotone(cfg: RunConfig, name: str, out: str):
    fix = _build(cfg, name)
    x0 = _base_point(fix)
    grid = _rho_grid(fix, cfg.rho_min, cfg.rho_max)
    curve = density_curve(fix.V, x0, grid, workers=cfg.workers)
    slack_tol = cfg.slack_factor * fix.h
    rows = []
    if cfg.lam is not None:
        lam = cfg.lam
        values = boundary_monotone_quantity(curve, cfg.p, fix.V.m, lam)
        slack = monotone_slack(values)
    else:
        try:
            lam, slack = calibrate_lambda(
                fix, x0, cfg.p, grid, slack_tol=slack_tol, workers=cfg.workers
            )
            values = boundary_monotone_quantity(curve, cfg.p, fix.V.m, lam)
        except NoLambdaFound as exc:
            rows.append(check_row("boundary-slack", "inf", slack_tol, False, str(exc)))
            lam, slack, values = None, None, np.full(grid.size, np.nan)
    if slack is not None:
        rows.append(
            check_row(
                "boundary-slack",
                slack,
                slack_tol,
                slack <= slack_tol,
                f"drawdown of the transformed density curve at {name} contact point",
            )
        )

    obs = {"base_point": x0, "lam": lam, "grid_size": grid.size}
    if "ring_radii" in fix.expected:
        # radial Dirac ladders carry no area quadrature between rings, so the
        # annulus integrals of the interior inequality have nothing to sample
        obs["interior"] = "skipped: ring-ladder quadrature has no annulus mass"
    else:
        centroid = (fix.V.w @ fix.V.x) / fix.V.mass()
        xi = fix.V.x[int(np.argmin(np.linalg.norm(fix.V.x - centroid, axis=1)))]
        islack = interior_monotonicity_check(
            fix.V,
            fix.dec.H,
            xi,
            unit_weight(fix.V.dim),
            cfg.r_inner,
            cfg.r_outer,
            workers=cfg.workers,
        )
        rows.append(
            check_row(
                "interior-slack",
                islack,
                -cfg.tol_interior,
                islack >= -cfg.tol_interior,
                f"weighted interior inequality between r = {cfg.r_inner} and {cfg.r_outer}",
            )
        )
        obs["interior_point"] = xi
    write_csv(
        os.path.join(out, f"monotone-{name}.csv"),
        ["rho", "mass", "ratio", "transformed"],
        [curve.radii, curve.masses, curve.ratios, values],
    )
    save_curve_figure(
        os.path.join(out, f"monotone-{name}.png"),
        curve.radii,
        {"density ratio": curve.ratios, "transformed": values},
        "rho",
        "value",
        f"{name}: density and transformed curves",
        logx=True,
    )
    return rows, obs, []


def run_blowup(cfg: RunConfig, name: str, out: str):
    fix = _build(cfg, name)
    x0 = _base_point(fix)
    radii = np.ldexp(1.0, -np.arange(1, cfg.levels + 1))
    seq = blow_up(
        fix.V,
        fix.boundary,
        x0,
        radii,
        region_radius=cfg.region_radius,
        workers=cfg.workers,
    )
    d = seq.v_distances
    # a pair counts as settled when the later distance either shrinks by the
    # required factor or sits below the floor where quadrature dust dominates
    gaps = d[1:] - np.maximum(d[:-1] / cfg.tol_cauchy, cfg.tol_converged)
    cauchy = float(np.max(gaps, initial=0.0))
    rows = [
        check_row(
            "cauchy-decrease",
            cauchy,
            0.0,
            cauchy <= 0.0,
            f"worst of d(k+1) - max(d(k)/{cfg.tol_cauchy}, floor) over the dyadic sequence",
        )
    ]
    beta_x0 = float(fix.angle.beta(x0[None])[0])
    target = min(beta_x0, math.pi - beta_x0)
    obs: dict = {"base_point": x0, "radii": radii, "v_distances": d}
    if seq.g_distances is not None:
        obs["g_distances"] = seq.g_distances
    # ring ladders carry exact ball masses at their own radii; elsewhere the
    # geometric density target 1/2 applies on the fitter's default grid
    fit_grid = None
    theta0 = 0.5
    if "ring_radii" in fix.expected:
        rungs = np.asarray(fix.expected["ring_radii"], dtype=float) / radii[-1]
        rungs = np.unique(rungs[rungs <= cfg.region_radius])
        if rungs.size >= 2:
            fit_grid = rungs
        theta0 = float(fix.expected["ratio_const"]) / unit_ball_volume(fix.V.m)
    try:
        fit = fit_tangent_cone(
            seq.varifolds[-1],
            seq.boundaries[-1] if seq.boundaries else None,
            beta_x0,
            region_radius=cfg.region_radius,
            rho_grid=fit_grid,
            density_window=cfg.tol_density,
            angle_tol=cfg.tol_angle,
            target_density=theta0,
            workers=cfg.workers,
        )
    except NotConical as exc:
        rows.append(check_row("vertex-density", "nan", cfg.tol_density, False, str(exc)))
        write_csv(
            os.path.join(out, f"blowup-{name}-distances.csv"),
            ["radius", "v_distance"],
            [radii[:-1], d],
        )
        return rows, obs, []
    rows.append(
        check_row(
            "vertex-density",
            abs(fit.vertex_density - theta0),
            cfg.tol_density,
            abs(fit.vertex_density - theta0) <= cfg.tol_density,
            f"median density ratio of the final rescaling against {theta0!r}",
        )
    )
    rows.append(
        check_row(
            "cone-angle",
            abs(fit.alpha - target),
            cfg.tol_angle,
            abs(fit.alpha - target) <= cfg.tol_angle,
            "fitted opening angle against the prescribed contact angle",
        )
    )
    rows.append(
        check_row(
            "half-plane-verdict",
            float(fit.fit_residual),
            0.1,
            fit.passed,
            "single half-plane classification of the blow-up limit",
        )
    )

    dis = disintegrate(fix.boundary)
    i0 = int(np.argmin(np.linalg.norm(dis.sites - x0, axis=1)))
    stats = co_normals(dis, fix.container, angle=fix.angle)
    wall_vec = stats.wall[i0]
    decay = wall_vector_decay(seq, wall_vec)
    c = float(np.max(decay / radii))
    rows.append(
        check_row(
            "wall-decay",
            c,
            cfg.tol_wall,
            c <= cfg.tol_wall,
            "constant in max |<x, wall vector>| <= c r over rescaled boundary sites",
        )
    )

    # barrier sweep: tilt from exact equality up to the vertical
    thetas = fit.alpha + (math.pi / 2 - fit.alpha) * np.linspace(0.0, 1.0, 9)
    e_last = np.zeros(fix.V.dim)
    e_last[-1] = 1.0
    lifted = fit.plane.proj @ e_last
    sin_a = float(np.linalg.norm(lifted))
    up = lifted / sin_a
    u_wall = up - up[-1] * e_last
    u_wall = u_wall / np.linalg.norm(u_wall)
    sweep = []
    for i, theta in enumerate(thetas):
        nu = math.cos(theta) * e_last - math.sin(theta) * u_wall
        try:
            theta_out, ok = barrier_angle_check(
                fit, nu, C=None, contain_tol=cfg.tol_equality
            )
        except NotContained as exc:
            rows.append(check_row(f"barrier-{i}", "nan", fit.alpha, False, str(exc)))
            continue
        sweep.append(theta_out)
        rows.append(
            check_row(
                f"barrier-{i}",
                theta_out,
                fit.alpha,
                ok,
                "equality branch" if i == 0 else "tilted containment",
            )
        )
    obs.update(
        {
            "alpha": fit.alpha,
            "vertex_density": fit.vertex_density,
            "fit_residual": fit.fit_residual,
            "wall_decay": decay,
            "thetas": np.asarray(sweep),
        }
    )
    write_csv(
        os.path.join(out, f"blowup-{name}-distances.csv"),
        ["radius", "v_distance"],
        [radii[:-1], d],
    )
    write_csv(
        os.path.join(out, f"blowup-{name}-decay.csv"),
        ["radius", "wall_pairing"],
        [radii, decay],
    )
    save_curve_figure(
        os.path.join(out, f"blowup-{name}.png"),
        radii[:-1],
        {"consecutive distance": d},
        "radius",
        "dictionary distance",
        f"{name}: blow-up convergence",
        logx=True,
        logy=True,
    )
    return rows, obs, []


def run_compactness(cfg: RunConfig, name: str, out: str):
    if name != "separated-pair":
        raise ConfigError("compactness runs on the separated-pair family")

    def family(s: float):
        if s == 0.0:
            return make_plane_pair(cfg.beta, h=cfg.h, extent=cfg.extent)
        return make_separated_pair(cfg.beta, s * cfg.separation, h=cfg.h, extent=cfg.extent)

    def control(s: float):
        return make_half_plane(cfg.beta, offset=s * cfg.separation, h=cfg.h, extent=cfg.extent)

    rep = compactness_experiment(
        family, cfg.s_grid, rho=cfg.rho_max, merge_tol=cfg.merge_tol, workers=cfg.workers
    )
    repc = compactness_experiment(
        control, cfg.s_grid, rho=cfg.rho_max, merge_tol=cfg.merge_tol, workers=cfg.workers
    )
    floor = abs(math.cos(cfg.beta)) - cfg.tol_margin
    rows = [
        check_row(
            "iv-degenerates",
            rep.iv_integral[-1],
            cfg.tol_decay * rep.iv_integral[0],
            rep.iv_integral[-1] <= cfg.tol_decay * rep.iv_integral[0],
            "observation-scale tangential integral of the merging family",
        ),
        check_row(
            "limit-degenerate",
            rep.limit_iv_integral,
            1e-12,
            rep.limit_iv_integral <= 1e-12,
            "tangential integral of the merged limit",
        ),
        check_row(
            "margins-hold",
            float(np.min(rep.c1_margin)),
            floor,
            bool(np.min(rep.c1_margin) >= floor),
            "fine-scale per-component contact margins of the members",
        ),
        check_row(
            "control-survives",
            repc.iv_integral[-1],
            cfg.tol_control * repc.iv_integral[0],
            repc.iv_integral[-1] >= cfg.tol_control * repc.iv_integral[0],
            "one-sided family keeps its tangential integral",
        ),
        check_row(
            "family-converges",
            rep.bl_to_limit[-1],
            0.5 * rep.bl_to_limit[0],
            rep.bl_to_limit[-1] <= 0.5 * rep.bl_to_limit[0],
            "dictionary distance to the merged limit",
        ),
        check_row(
            "boundary-mass-propagates",
            rep.limit_sigma_half,
            float(np.min(rep.sigma_half)),
            rep.limit_sigma_half >= float(np.min(rep.sigma_half)),
            "half-ball boundary mass lower bound survives the limit",
        ),
    ]
    s = np.asarray(cfg.s_grid, dtype=float)
    write_csv(
        os.path.join(out, f"compactness-{name}.csv"),
        ["s", "bl_to_limit", "sigma_half", "iv_integral", "c1_margin", "control_iv", "control_margin"],
        [s, rep.bl_to_limit, rep.sigma_half, rep.iv_integral, rep.c1_margin, repc.iv_integral, repc.c1_margin],
    )
    save_curve_figure(
        os.path.join(out, f"compactness-{name}.png"),
        s,
        {"merging family": rep.iv_integral, "one-sided control": repc.iv_integral},
        "s",
        "tangential integral",
        "degeneracy of the wall-tangential term",
    )
    obs = {
        "limit_iv_integral": rep.limit_iv_integral,
        "limit_sigma_half": rep.limit_sigma_half,
        "control_limit_iv": repc.limit_iv_integral,
        "rho": rep.rho,
        "merge_tol": rep.merge_tol,
    }
    return rows, obs, []


def run_curvature(cfg: RunConfig, name: str, out: str):
    fix = _build(cfg, name)
    Bdata = fixture_curvature(fix)
    battery = standard_curvature_battery(fix.V.dim)
    threshold, relative = _residual_threshold(cfg, name)
    rep = curvature_identity_residual(
        fix.V, Bdata, fix.boundary, battery, fix.container, workers=cfg.workers
    )
    rows = residual_rows(
        rep,
        "curvature-identity",
        threshold,
        relative,
        f"integration by parts for the weak second fundamental form on {name}",
    )
    gaps = Bdata.relation_gaps(fix.V.P)
    worst = max(gaps.values())
    rows.append(
        check_row(
            "tensor-relations",
            worst,
            cfg.tol_relations,
            worst <= cfg.tol_relations,
            "per-atom symmetry, trace, and projection relations of B",
        )
    )
    comparability = {}
    for p in (1.0, 2.0):
        tag = f"comparability-p{int(p)}"
        try:
            c1, c2 = mass_comparability(fix.V, Bdata, fix.boundary, p, workers=cfg.workers)
            ok = bool(np.isfinite(c1) and np.isfinite(c2))
            rows.append(
                check_row(tag, [c1, c2], "inf", ok, "interior/boundary/energy mass ratios")
            )
            comparability[tag] = [c1, c2]
        except DivisionDegenerate as exc:
            rows.append(check_row(tag, "inf", "inf", False, str(exc)))

    members = []
    for factor in (4.0, 2.0):
        coarse = _build_at(cfg, name, factor)
        members.append((coarse.V, fixture_curvature(coarse)))
    ok = lsc_check(members, (fix.V, Bdata), 2.0, tol=cfg.tol_lsc, workers=cfg.workers)
    e_limit = curvature_energy(fix.V, Bdata, 2.0, workers=cfg.workers)
    e_members = [curvature_energy(Vk, Bk, 2.0, workers=cfg.workers) for Vk, Bk in members]
    rows.append(
        check_row(
            "lower-semicontinuity",
            e_limit,
            min(e_members[len(e_members) // 2 :]) + cfg.tol_lsc,
            ok,
            "squared curvature energy against the refining tail",
        )
    )
    write_csv(
        os.path.join(out, f"curvature-{name}.csv"),
        ["field", "absolute", "relative"],
        [np.arange(len(rep.field_names)), rep.absolute, rep.relative],
    )
    save_residual_figure(
        os.path.join(out, f"curvature-{name}.png"), rep, f"{name}: curvature battery"
    )
    obs = {
        "relation_gaps": {k: v for k, v in sorted(gaps.items())},
        "energy_p2": e_limit,
        "member_energies_p2": e_members,
        "fields": list(rep.field_names),
        "absolute": rep.absolute,
        "relative": rep.relative,
    }
    obs.update(comparability)
    return rows, obs, []


def _build_at(cfg: RunConfig, name: str, factor: float):
    return build_fixture(
        name,
        cfg.beta,
        h=factor * cfg.h,
        extent=cfg.extent,
        separation=cfg.separation,
        eps=cfg.eps,
    )


_RUNNERS = {
    "example": run_example,
    "verify": run_verify,
    "monotone": run_monotone,
    "blowup": run_blowup,
    "compactness": run_compactness,
    "curvature": run_curvature,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="capvar",
        description="Build capillary varifold fixtures and certify their identities.",
    )
    parser.add_argument(
        "--version", action="version", version=f"%(prog)s {__version__}"
    )
    helps = {
        "example": "emit a fixture's measure files and construction checks",
        "verify": "first-variation identity residuals over the field batteries",
        "monotone": "boundary and interior monotonicity curves",
        "blowup": "dyadic blow-up sequence, cone fit, barrier sweep",
        "compactness": "degenerating family experiment with one-sided control",
        "curvature": "weak second fundamental form identity and energies",
    }
    sub = parser.add_subparsers(dest="subcommand", metavar="subcommand")
    for name in SUBCOMMANDS:
        p = sub.add_parser(name, help=helps[name])
        p.add_argument("--config", metavar="FILE", help="key = value file; flags override it")
        for f in dc_fields(RunConfig):
            p.add_argument(
                "--" + f.name.replace("_", "-"),
                dest=f.name,
                default=None,
                metavar="V",
                help=_FIELD_HELP[f.name],
            )
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.subcommand is None:
        parser.print_usage()
        return 2
    try:
        cfg = effective_config(args)
        name = cfg.fixture or DEFAULT_FIXTURE[args.subcommand]
        out = cfg.out
        os.makedirs(out, exist_ok=True)
        rows, obs, files = _RUNNERS[args.subcommand](cfg, name, out)
    except (ConfigError, AngleIsOrthogonal, AngleDegenerate, ExponentError, RadiusOrder, ValueError) as exc:
        print(f"capvar: configuration rejected: {exc}")
        return 2
    report_path = os.path.join(out, f"{args.subcommand}-{name}.json")
    write_text(report_path, render_report(args.subcommand, config_dict(cfg, name), rows, obs))
    for path in [report_path] + files:
        print(f"wrote {path}")
    failed = [r["check"] for r in rows if not r["pass"]]
    if failed:
        print(f"FAIL: {len(failed)} of {len(rows)} checks failed: {', '.join(failed)}")
        return 1
    print(f"PASS: {len(rows)} checks")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
