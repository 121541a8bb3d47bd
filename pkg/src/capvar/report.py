"""Deterministic run artifacts: JSON verdicts, CSV curves, PNG figures.

Reports must come out byte-identical whenever the effective configuration is
identical, worker count included.  Everything here is therefore pure
formatting: floats are serialized by their shortest round-trip
representation, keys are sorted, no timestamps or absolute paths are
embedded, and execution knobs that cannot change a computed value (worker
count, output directory) never enter the report body.  Figures are rendered
straight to files through the object-oriented matplotlib API; they are a
convenience for humans and excluded from the byte-level determinism
contract.
"""

from __future__ import annotations

import json
from typing import Sequence

import numpy as np
from matplotlib.figure import Figure

from . import __version__
from .varifold import ResidualReport


def jsonable(obj):
    """Recursively convert numpy containers and scalars to JSON-safe values.

    Non-finite floats become the strings "inf", "-inf", "nan": the report
    stays valid JSON and the reader still sees what happened.
    """
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if np.isnan(v):
            return "nan"
        if np.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if obj is None or isinstance(obj, str):
        return obj
    return str(obj)


def check_row(check: str, value, threshold, passed: bool, provenance: str) -> dict:
    """One verdict row of a report."""
    return {
        "check": check,
        "value": jsonable(value),
        "threshold": jsonable(threshold),
        "pass": bool(passed),
        "provenance": provenance,
    }


def residual_rows(
    rep: ResidualReport, check: str, threshold: float, relative: bool, provenance: str
) -> list[dict]:
    """Summary row for a battery residual report.

    The row carries the worst field by the chosen reading (relative or
    absolute) and names it in the provenance.
    """
    values = rep.relative if relative else rep.absolute
    if values.size == 0:
        return [check_row(check, 0.0, threshold, True, provenance + "; empty battery")]
    worst = int(np.argmax(values))
    value = float(values[worst])
    note = "{}; worst field {}; {} reading over {} fields".format(
        provenance,
        rep.field_names[worst],
        "relative" if relative else "absolute",
        len(rep.field_names),
    )
    return [check_row(check, value, threshold, value <= threshold, note)]


def render_report(subcommand: str, config: dict, rows: list[dict], extras: dict | None = None) -> str:
    """Serialize a full report deterministically.

    ``config`` holds every effective value a check depended on, tolerances
    included; ``extras`` carries named scalar observations that are not
    verdicts.  The overall verdict is the conjunction of the rows.
    """
    body = {
        "version": __version__,
        "subcommand": subcommand,
        "config": jsonable(config),
        "checks": rows,
        "passed": all(r["pass"] for r in rows),
    }
    if extras:
        body["observations"] = jsonable(extras)
    return json.dumps(body, indent=2, sort_keys=True) + "\n"


def write_text(path, text: str) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(text)


def write_csv(path, header: Sequence[str], columns: Sequence) -> None:
    """Write aligned columns as CSV with shortest round-trip floats."""
    cols = [np.asarray(c) for c in columns]
    if len(cols) != len(header):
        raise ValueError("one header entry per column")
    n = cols[0].shape[0] if cols else 0
    for c in cols:
        if c.shape != (n,):
            raise ValueError("columns must share one length")
    lines = [",".join(header)]
    for i in range(n):
        lines.append(",".join(format(float(c[i]), ".17g") for c in cols))
    write_text(path, "\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# figures


def _new_axes(title: str, xlabel: str, ylabel: str):
    fig = Figure(figsize=(6.4, 4.4))
    ax = fig.subplots()
    ax.set_title(title)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    return fig, ax


def _save(fig: Figure, path) -> None:
    fig.tight_layout()
    fig.savefig(path, dpi=110, metadata={"Software": None})


def save_residual_figure(path, rep: ResidualReport, title: str) -> None:
    """Per-field residual bars on a log scale; zeros pinned to the floor."""
    fig, ax = _new_axes(title, "", "residual")
    n = len(rep.field_names)
    idx = np.arange(n)
    floor = 1e-18
    ax.bar(idx - 0.2, np.maximum(rep.absolute, floor), width=0.4, label="absolute")
    ax.bar(idx + 0.2, np.maximum(rep.relative, floor), width=0.4, label="relative")
    ax.set_yscale("log")
    ax.set_xticks(idx)
    ax.set_xticklabels(rep.field_names, rotation=90, fontsize=6)
    ax.legend(fontsize=8)
    _save(fig, path)


def save_curve_figure(
    path,
    x,
    curves: dict,
    xlabel: str,
    ylabel: str,
    title: str,
    logx: bool = False,
    logy: bool = False,
) -> None:
    fig, ax = _new_axes(title, xlabel, ylabel)
    for name, y in curves.items():
        ax.plot(np.asarray(x), np.asarray(y), marker="o", markersize=3, label=name)
    if logx:
        ax.set_xscale("log")
    if logy:
        ax.set_yscale("log")
    ax.legend(fontsize=8)
    _save(fig, path)


def save_fixture_figure(path, fixture) -> None:
    """Scatter of the fixture's atoms and boundary sites.

    Three-dimensional fixtures are drawn in the (x1, x3) plane, which shows
    both the wall trace and the rise of the sheets.
    """
    V = fixture.V
    j = V.dim - 1
    fig, ax = _new_axes(fixture.name, "x1", f"x{j + 1}")
    ax.scatter(V.x[:, 0], V.x[:, j], s=2.0, c="tab:blue", label="atoms", rasterized=True)
    bx = fixture.boundary.x
    if bx.shape[0]:
        ax.scatter(bx[:, 0], bx[:, j], s=6.0, c="tab:red", label="boundary", rasterized=True)
    ax.axhline(0.0, color="gray", linewidth=0.6)
    ax.set_aspect("equal", adjustable="datalim")
    ax.legend(fontsize=8)
    _save(fig, path)
