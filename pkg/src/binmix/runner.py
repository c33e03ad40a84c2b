"""Time integration drivers, refinement studies and tabulation commands."""
from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from .analysis import DispersionSetup, dispersion_roots
from .config import RunConfig
from .energy import DomainError, EQShiftError, modified_h_m, two_phase_equilibrium
from .output import (DiagnosticsWriter, RunLock, emit_snapshot, format_value, write_failure)
from .presets import make_initial
from .scheme import PositivityError, bootstrap, step
from .solver import LinearSolver, NonConvergenceError

__all__ = [
    "RunResult",
    "integrate",
    "run",
    "restrict",
    "refinement_study",
    "write_table",
    "dispersion_table",
    "eqcontour_table",
]


@dataclass
class RunResult:
    status: str                      # "ok", "positivity", "nonconvergence"
    state: object
    records: list = field(default_factory=list)
    error: Exception | None = None
    files: list = field(default_factory=list)


def integrate(state0, params, solver_config, nsteps, on_step=None, order=2):
    """Advance ``nsteps``; ``on_step(state, record)`` is called after each step.

    Scheme and solver errors propagate; the caller sees the last good state
    through ``on_step``.
    """
    solver = LinearSolver(solver_config)
    records = []
    prev = cur = state0
    x = None
    for k in range(nsteps):
        if k == 0:
            new, rec, x = bootstrap(cur, params, solver, x0=x)
        else:
            new, rec, x = step(cur, prev, params, solver, order=order, x0=x)
        prev, cur = cur, new
        records.append(rec)
        if on_step is not None:
            on_step(cur, rec)
    return cur, records


def run(cfg: RunConfig, out_dir=None, write=True) -> RunResult:
    """Full run with snapshots, per-step diagnostics and a failure record on abort."""
    grid = cfg.grid_spec()
    params = cfg.params()
    state0 = make_initial(cfg.init, grid, params.model)
    nsteps = cfg.time.nsteps
    out_dir = cfg.output.dir if out_dir is None else out_dir
    fmt = cfg.output.format
    every = cfg.output.snapshot_interval
    if not write:
        try:
            final, records = integrate(state0, params, cfg.solver.build(), nsteps)
        except (PositivityError, DomainError) as exc:
            return RunResult("positivity", None, error=exc)
        except NonConvergenceError as exc:
            return RunResult("nonconvergence", None, error=exc)
        return RunResult("ok", final, records)

    os.makedirs(out_dir, exist_ok=True)
    files = []
    records = []
    last = {"state": state0}
    with RunLock(out_dir):
        from .config import serialize_config
        cfg_path = os.path.join(out_dir, "config.ini")
        with open(cfg_path, "w", encoding="ascii") as fh:
            fh.write(serialize_config(cfg))
        files.append(cfg_path)
        if fmt != "none":
            files += emit_snapshot(state0, out_dir, fmt)
        with DiagnosticsWriter(out_dir) as diag:
            files += list(diag.paths)

            def on_step(state, rec):
                last["state"] = state
                records.append(rec)
                diag.write(rec)
                if fmt != "none" and (state.n % every == 0 or state.n == nsteps):
                    files.extend(emit_snapshot(state, out_dir, fmt))

            try:
                final, _ = integrate(state0, params, cfg.solver.build(), nsteps, on_step)
            except (PositivityError, DomainError, EQShiftError, NonConvergenceError) as exc:
                good = last["state"]
                files += emit_snapshot(good, out_dir, "csv", tag="checkpoint")
                files.append(write_failure(out_dir, exc, good, good.n + 1))
                status = "nonconvergence" if isinstance(exc, NonConvergenceError) else "positivity"
                return RunResult(status, good, records, exc, files)
    return RunResult("ok", final, records, None, files)


# refinement ------------------------------------------------------------------

def restrict(fine_state, coarse_grid):
    """Cell-average a state onto a grid twice as coarse.

    Cell fields average 2x2 blocks; face velocities average the two fine
    faces that make up each coarse face.
    """
    fg = fine_state.grid
    if fg.Nx != 2 * coarse_grid.Nx or fg.Ny != 2 * coarse_grid.Ny:
        raise ValueError("levels are not nested by a factor of two")
    r1 = fine_state.rho1[1:-1, 1:-1]
    r2 = fine_state.rho2[1:-1, 1:-1]

    def cells(f):
        return 0.25 * (f[0::2, 0::2] + f[1::2, 0::2] + f[0::2, 1::2] + f[1::2, 1::2])

    u = fine_state.u[1:-1, :]                  # (Ny, Nx+1)
    v = fine_state.v[:, 1:-1]                  # (Ny+1, Nx)
    uc = 0.5 * (u[0::2, 0::2] + u[1::2, 0::2])
    vc = 0.5 * (v[0::2, 0::2] + v[0::2, 1::2])
    return {"rho1": cells(r1), "rho2": cells(r2), "u": uc, "v": vc}


def _fields(state):
    return {"rho1": state.rho1[1:-1, 1:-1], "rho2": state.rho2[1:-1, 1:-1],
            "u": state.u[1:-1, :], "v": state.v[:, 1:-1]}


def _diff_norms(a, b, grid):
    dA = grid.cell_area
    n1 = np.sqrt(dA * np.sum((a["rho1"] - b["rho1"]) ** 2))
    n2 = np.sqrt(dA * np.sum((a["rho2"] - b["rho2"]) ** 2))
    nu = np.sqrt(dA * (np.sum((a["u"] - b["u"]) ** 2) + np.sum((a["v"] - b["v"]) ** 2)))
    return {"rho1": float(n1), "rho2": float(n2), "u": float(nu)}


def refinement_study(cfg: RunConfig, axis: str, levels, order=2, progress=None):
    """Consecutive-difference norms and observed orders at the configured end time.

    ``axis='time'`` takes step sizes (each half the previous), ``axis='space'``
    takes cell counts (each double the previous).  Returns one row per level.
    """
    levels = list(levels)
    if len(levels) < 3:
        raise ValueError("a refinement study needs at least 3 levels")
    if axis == "time":
        ratios = [levels[i] / levels[i + 1] for i in range(len(levels) - 1)]
    elif axis == "space":
        ratios = [levels[i + 1] / levels[i] for i in range(len(levels) - 1)]
    else:
        raise ValueError(f"axis must be time or space, got {axis!r}")
    if any(abs(r - 2.0) > 1e-12 for r in ratios):
        raise ValueError(f"levels {levels} are not nested by a factor of two")
    t_end = cfg.time.t_end if cfg.time.steps is None else cfg.time.steps * cfg.time.dt

    finals = []
    for lev in levels:
        if axis == "time":
            c = cfg.update("time", dt=float(lev), steps=None, t_end=t_end)
        else:
            c = cfg.update("grid", Nx=int(lev), Ny=int(lev))
        grid = c.grid_spec()
        params = c.params()
        s0 = make_initial(c.init, grid, params.model)
        nsteps = int(round(t_end / c.time.dt))
        final, _ = integrate(s0, params, c.solver.build(), nsteps, order=order)
        finals.append(final)
        if progress:
            progress(lev, final)

    rows = []
    prev_norms = None
    for i, lev in enumerate(levels):
        row = {"level": lev}
        if i > 0:
            if axis == "time":
                norms = _diff_norms(_fields(finals[i]), _fields(finals[i - 1]), finals[i].grid)
            else:
                cg = finals[i - 1].grid
                norms = _diff_norms(restrict(finals[i], cg), _fields(finals[i - 1]), cg)
            for k, v in norms.items():
                row[f"diff_{k}"] = v
                if prev_norms is not None:
                    row[f"order_{k}"] = float(np.log2(prev_norms[k] / v)) if v > 0 else float("inf")
            prev_norms = norms
        rows.append(row)
    return rows


def write_table(path_or_fh, rows, columns=None):
    """CSV with a header line; missing entries are left empty."""
    if columns is None:
        columns = []
        for r in rows:
            columns.extend(k for k in r if k not in columns)
    lines = [",".join(columns)]
    for r in rows:
        lines.append(",".join(format_value(r[c]) if c in r else "" for c in columns))
    text = "\n".join(lines) + "\n"
    if hasattr(path_or_fh, "write"):
        path_or_fh.write(text)
    else:
        with open(path_or_fh, "w", encoding="ascii") as fh:
            fh.write(text)
    return columns


# tabulations -------------------------------------------------------------------

def dispersion_table(cfg: RunConfig, kmin, kmax, samples):
    """Rows of ``k``, the largest growth rate, the factor root and all four roots."""
    if samples < 2 or not kmax > kmin or kmin < 0:
        raise ValueError("need kmax > kmin >= 0 and at least 2 samples")
    params = cfg.params()
    m = cfg.model
    setup = DispersionSetup.from_model(params.model, cfg.init.mean1, cfg.init.mean2,
                                       m.Re_s1, m.Re_v1, m.M1, params.K)
    rows = []
    for k in np.linspace(kmin, kmax, samples):
        roots = dispersion_roots(setup, k)
        row = {"k": float(k), "max_real": float(np.max(roots.real)),
               "factor_root": float(roots[0].real)}
        for j, r in enumerate(roots):
            row[f"root{j}_re"] = float(r.real)
            row[f"root{j}_im"] = float(r.imag)
        rows.append(row)
    return rows


def eqcontour_table(cfg: RunConfig, n):
    """Modified energy ``h_m`` on an ``n x n`` molar-density box.

    The tangent plane is the chemical potential of the coexisting liquid and
    gas seeded from ``[init]``; points past the repulsion singularity are NaN.
    """
    params = cfg.params()
    model = params.model
    ini = cfg.init
    liquid = (ini.n1_liquid, ini.n2_liquid)
    gas = (ini.n1_gas, ini.n2_gas)
    nl, ng, mu = two_phase_equilibrium(model, liquid, gas)
    box = getattr(model, "box", ((0.0, 1.2 * max(nl[0], ng[0])), (0.0, 1.2 * max(nl[1], ng[1]))))
    (lo1, hi1), (lo2, hi2) = box
    a1 = np.linspace(lo1, hi1, n)
    a2 = np.linspace(lo2, hi2, n)
    rows = []
    for y in a2:
        for x in a1:
            try:
                val = float(modified_h_m(model, x, y, mu[0], mu[1]))
            except DomainError:
                val = float("nan")
            rows.append({"n1": float(x), "n2": float(y), "h_m": val})
    meta = {"liquid": nl, "gas": ng, "mu": mu}
    return rows, meta
