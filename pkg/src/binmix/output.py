"""Snapshot, diagnostics and failure-record files."""
from __future__ import annotations

import json
import math
import os
import re

import numpy as np

from .grid import GridSpec

__all__ = [
    "format_value",
    "write_csv_field",
    "read_csv_field",
    "write_vtk",
    "snapshot_fields",
    "emit_snapshot",
    "DIAGNOSTIC_COLUMNS",
    "DISSIPATION_COLUMNS",
    "DiagnosticsWriter",
    "RunLock",
    "write_failure",
]

DIAGNOSTIC_COLUMNS = ("step", "time", "energy", "mass1", "mass2", "krylov_iters", "residual")
DISSIPATION_COLUMNS = ("step", "time", "kinetic", "shear", "volumetric", "mixing", "energy_residual")


def format_value(x) -> str:
    """17 significant digits, integer exponent: ``1.0000000000000000e0``."""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    x = float(x)
    if not math.isfinite(x):
        return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
    mant, exp = f"{x:.16e}".split("e")
    return f"{mant}e{int(exp)}"


def _header(name, grid: GridSpec, t):
    return (f"# field={name} Nx={grid.Nx} Ny={grid.Ny} hx={format_value(grid.hx)} "
            f"hy={format_value(grid.hy)} t={format_value(t)}\n")


def write_csv_field(path, name, values, grid: GridSpec, t=0.0):
    """Row-major values (row ``j`` is one ``y`` level), comma separated."""
    values = np.asarray(values, float)
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(_header(name, grid, t))
        for row in values:
            fh.write(",".join(format_value(v) for v in row))
            fh.write("\n")


_HEADER_RE = re.compile(r"^#\s*field=(\S+)\s+Nx=(\d+)\s+Ny=(\d+)\s+hx=(\S+)\s+hy=(\S+)\s+t=(\S+)\s*$")


def read_csv_field(path):
    """Returns ``(values, meta)``; ``meta`` holds the parsed header."""
    with open(path, encoding="ascii") as fh:
        first = fh.readline()
        m = _HEADER_RE.match(first)
        if not m:
            raise ValueError(f"{path}: bad snapshot header {first!r}")
        rows = [[float(t) for t in line.split(",")] for line in fh if line.strip()]
    meta = {"field": m.group(1), "Nx": int(m.group(2)), "Ny": int(m.group(3)),
            "hx": float(m.group(4)), "hy": float(m.group(5)), "t": float(m.group(6))}
    return np.array(rows, float), meta


def write_vtk(path, fields: dict, grid: GridSpec, t=0.0):
    """Legacy ASCII structured-points file with one cell-data scalar per field."""
    lines = [
        "# vtk DataFile Version 3.0",
        f"binmix snapshot t={format_value(t)}",
        "ASCII",
        "DATASET STRUCTURED_POINTS",
        f"DIMENSIONS {grid.Nx + 1} {grid.Ny + 1} 1",
        f"ORIGIN {format_value(grid.x0)} {format_value(grid.y0)} 0",
        f"SPACING {format_value(grid.hx)} {format_value(grid.hy)} 1",
        f"CELL_DATA {grid.Nx * grid.Ny}",
    ]
    for name, vals in fields.items():
        vals = np.asarray(vals, float)
        if vals.shape != (grid.Ny, grid.Nx):
            raise ValueError(f"VTK field {name} must be cell-centred, got shape {vals.shape}")
        lines.append(f"SCALARS {name} double 1")
        lines.append("LOOKUP_TABLE default")
        lines.extend(format_value(v) for v in vals.ravel())
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def snapshot_fields(state) -> dict:
    """Cell fields plus staggered ``u``/``v`` rows and cell-centred physical velocity."""
    vx_e, vy_e = state.physical_velocity()
    vx = 0.5 * (vx_e[1:-1, :-1] + vx_e[1:-1, 1:])
    vy = 0.5 * (vy_e[:-1, 1:-1] + vy_e[1:, 1:-1])
    return {
        "rho1": state.rho1[1:-1, 1:-1],
        "rho2": state.rho2[1:-1, 1:-1],
        "u": state.u[1:-1, :],
        "v": state.v[:, 1:-1],
        "vx": vx,
        "vy": vy,
    }


def emit_snapshot(state, directory, fmt="csv", tag=None):
    """Write the state's fields; returns the list of files written."""
    os.makedirs(directory, exist_ok=True)
    tag = f"{state.n:07d}" if tag is None else tag
    fields = snapshot_fields(state)
    written = []
    if fmt in ("csv", "both"):
        sub = os.path.join(directory, f"snap_{tag}")
        os.makedirs(sub, exist_ok=True)
        for name, vals in fields.items():
            path = os.path.join(sub, f"{name}.csv")
            write_csv_field(path, name, vals, state.grid, state.t)
            written.append(path)
    if fmt in ("vtk", "both"):
        path = os.path.join(directory, f"snap_{tag}.vtk")
        cell = {k: v for k, v in fields.items() if k not in ("u", "v")}
        write_vtk(path, cell, state.grid, state.t)
        written.append(path)
    return written


class DiagnosticsWriter:
    """Append-as-you-go ``diagnostics.csv`` and ``dissipation.csv``."""

    def __init__(self, directory):
        self.paths = (os.path.join(directory, "diagnostics.csv"),
                      os.path.join(directory, "dissipation.csv"))
        self._fh = [open(p, "w", encoding="ascii", newline="\n") for p in self.paths]
        self._fh[0].write(",".join(DIAGNOSTIC_COLUMNS) + "\n")
        self._fh[1].write(",".join(DISSIPATION_COLUMNS) + "\n")

    def write(self, rec):
        d = rec.as_dict()
        self._fh[0].write(",".join(format_value(d[c]) for c in DIAGNOSTIC_COLUMNS) + "\n")
        self._fh[1].write(",".join(format_value(d[c]) for c in DISSIPATION_COLUMNS) + "\n")

    def close(self):
        for fh in self._fh:
            fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


class RunLock:
    """Exclusive ownership of an output directory via an ``O_EXCL`` lock file."""

    def __init__(self, directory):
        self.path = os.path.join(directory, ".binmix.lock")
        self._held = False

    def __enter__(self):
        fd = os.open(self.path, os.O_CREAT | os.O_EXCL | os.O_WRONLY, 0o644)
        os.write(fd, str(os.getpid()).encode())
        os.close(fd)
        self._held = True
        return self

    def __exit__(self, *exc):
        if self._held:
            os.remove(self.path)
            self._held = False


def write_failure(directory, exc, state, step):
    """Machine-readable ``failure.json`` describing an aborted run."""
    record = {
        "error": type(exc).__name__,
        "message": str(exc),
        "step": int(step),
        "last_good_step": int(state.n),
        "last_good_time": float(state.t),
    }
    for attr in ("where", "value"):
        if getattr(exc, attr, None) is not None:
            val = getattr(exc, attr)
            record[attr] = list(val) if isinstance(val, tuple) else val
    report = getattr(exc, "report", None)
    if report is not None:
        record["report"] = {"iterations": report.iterations, "residual": report.residual,
                            "converged": report.converged}
    path = os.path.join(directory, "failure.json")
    with open(path, "w", encoding="ascii") as fh:
        json.dump(record, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path
