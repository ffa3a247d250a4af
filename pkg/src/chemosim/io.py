"""Persistence of trajectories, field grids, bound certificates and reports.

All file formats carry a version tag in their first line.  Floats are written
with 17 significant digits, which round-trips IEEE doubles exactly, so
re-running a deterministic solve reproduces files byte for byte.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .field import FdField
from .paths import AgentPath

TRAJECTORY_TAG = "chemosim-trajectory-v1"
FIELD_TAG = "chemosim-field-grid-v1"
BOUNDS_TAG = "chemosim-bounds-v1"
MANIFEST_TAG = "chemosim-manifest-v1"
REPORT_TAG = "chemosim-report-v1"


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_trajectory(path: AgentPath, file) -> None:
    """One row per time node: t, then x and v per agent and axis."""
    n_dim, n_ag = path.dimension, path.n_agents
    cols = ["t"]
    cols += [f"x{j + 1}_{d + 1}" for j in range(n_ag) for d in range(n_dim)]
    cols += [f"v{j + 1}_{d + 1}" for j in range(n_ag) for d in range(n_dim)]
    lines = [f"# {TRAJECTORY_TAG}", "# " + ",".join(cols)]
    for k, t in enumerate(path.times):
        row = [_fmt(t)]
        row += [_fmt(path.X[k, d, j]) for j in range(n_ag) for d in range(n_dim)]
        row += [_fmt(path.V[k, d, j]) for j in range(n_ag) for d in range(n_dim)]
        lines.append(",".join(row))
    Path(file).write_text("\n".join(lines) + "\n")


def read_trajectory(file) -> AgentPath:
    lines = Path(file).read_text().strip().splitlines()
    if not lines or lines[0] != f"# {TRAJECTORY_TAG}":
        raise ValueError(f"{file} is not a {TRAJECTORY_TAG} file")
    header = lines[1].lstrip("# ").split(",")
    n_state = len(header) - 1
    n_pairs = n_state // 2
    # column names encode agent and axis counts
    last_x = header[n_pairs]
    n_dim = int(last_x.split("_")[1])
    n_ag = n_pairs // n_dim
    rows = [[float(v) for v in line.split(",")] for line in lines[2:]]
    data = np.asarray(rows)
    times = data[:, 0]
    X = np.empty((len(times), n_dim, n_ag))
    V = np.empty_like(X)
    col = 1
    for j in range(n_ag):
        for d in range(n_dim):
            X[:, d, j] = data[:, col]
            col += 1
    for j in range(n_ag):
        for d in range(n_dim):
            V[:, d, j] = data[:, col]
            col += 1
    return AgentPath(times, X, V)


def write_field_snapshot(fdf: FdField, t: float, file) -> None:
    """Dense row-major table of grid values at the stored time closest to t."""
    k = int(np.argmin(np.abs(fdf.times - t)))
    values = fdf.values[k]
    dim = len(fdf.axes)
    half_width = float(fdf.axes[0][-1])
    header = (f"# {FIELD_TAG} dim={dim} box={_fmt(half_width)} "
              f"h={_fmt(fdf.h)} t={_fmt(fdf.times[k])}")
    table = values.reshape(-1, values.shape[-1]) if dim > 1 else values[None, :]
    lines = [header]
    for row in table:
        lines.append(",".join(_fmt(v) for v in row))
    Path(file).write_text("\n".join(lines) + "\n")


def write_bounds(values: dict, file) -> None:
    """Flat key = value document of certificate constants."""
    lines = [f"# {BOUNDS_TAG}"]
    for key, val in values.items():
        lines.append(f"{key} = {_fmt(val)}")
    Path(file).write_text("\n".join(lines) + "\n")


def read_bounds(file) -> dict:
    lines = Path(file).read_text().strip().splitlines()
    if not lines or lines[0] != f"# {BOUNDS_TAG}":
        raise ValueError(f"{file} is not a {BOUNDS_TAG} file")
    out = {}
    for line in lines[1:]:
        key, _, val = line.partition("=")
        out[key.strip()] = float(val)
    return out


def write_manifest(manifest: dict, file) -> None:
    doc = {"format": MANIFEST_TAG}
    doc.update(manifest)
    Path(file).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def read_manifest(file) -> dict:
    doc = json.loads(Path(file).read_text())
    if doc.get("format") != MANIFEST_TAG:
        raise ValueError(f"{file} is not a {MANIFEST_TAG} file")
    return doc


def write_reports(reports: list, file) -> None:
    doc = {"format": REPORT_TAG, "reports": [r.to_dict() for r in reports]}
    Path(file).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
