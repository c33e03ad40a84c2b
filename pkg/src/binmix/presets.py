"""Named experiment setups and their initial states."""
from __future__ import annotations

import math
import os

import numpy as np

from .config import (ConfigError, EnergySection, GridSection, InitSection, ModelSection,
                     OutputSection, RunConfig, SolverSection, TimeSection)
from .energy import DomainError, EnergyModel
from .grid import GridSpec
from .scheme import State

__all__ = ["PRESET_NAMES", "preset_config", "full_scale", "make_initial", "star_indicator"]

PRESET_NAMES = ("accuracy", "fh-perturb", "pr-droplet", "from-file")


def preset_config(name: str) -> RunConfig:
    """Desk-scale configuration of a named experiment."""
    if name == "accuracy":
        return RunConfig(
            grid=GridSection(1.0, 1.0, 128, 128),
            time=TimeSection(dt=1e-3, t_end=0.1),
            model=ModelSection(Re_s1=100.0, Re_s2=100.0, Re_v1=300.0, Re_v2=300.0, M1=1e-7),
            energy=EnergySection(kind="double-well", A=1.0, kappa11=1e-4, kappa12=0.0,
                                 kappa22=1e-4),
            init=InitSection(preset="accuracy", mean1=0.5, mean2=0.5, amplitude=0.01,
                             wavenumber=2 * math.pi, axis="x"),
            # differences between refinement levels reach 1e-10 while |G| grows like 1/dt
            solver=SolverSection(rtol=1e-14, atol=1e-15),
            output=OutputSection(dir="out/accuracy", snapshot_interval=100),
        )
    if name == "fh-perturb":
        return RunConfig(
            grid=GridSection(1.0, 1.0, 128, 128),
            time=TimeSection(dt=0.02, t_end=40.0, steps=2000),
            model=ModelSection(Re_s1=100.0, Re_s2=100.0, Re_v1=300.0, Re_v2=300.0, M1=1e-3),
            energy=EnergySection(kind="flory-huggins", N1=1.0, N2=1.0, chi=2.5,
                                 kappa11=4e-4, kappa12=0.0, kappa22=4e-4),
            init=InitSection(preset="fh-perturb", mean1=0.5, mean2=0.5, amplitude=0.005,
                             wavenumber=10 * math.pi, axis="y"),
            output=OutputSection(dir="out/fh-perturb", snapshot_interval=250),
        )
    if name == "pr-droplet":
        return RunConfig(
            grid=GridSection(4.0, 4.0, 128, 128, -2.0, -2.0),
            time=TimeSection(dt=0.01, t_end=3.0, steps=300),
            model=ModelSection(Re_s1=1.0, Re_s2=1.0, Re_v1=3.0, Re_v2=3.0, M1=9.7136e-4),
            energy=EnergySection(kind="peng-robinson", kappa11=0.0018, kappa12=1.4398e-4,
                                 kappa22=4.5961e-5, kappa_form="molar"),
            init=InitSection(preset="pr-droplet"),
            output=OutputSection(dir="out/pr-droplet", snapshot_interval=50),
        )
    if name == "from-file":
        raise ConfigError("from-file has no default configuration; set [init] file")
    raise ConfigError(f"unknown preset {name!r}; expected one of {PRESET_NAMES}")


def full_scale(cfg: RunConfig) -> RunConfig:
    """Long-horizon, fine-grid settings of the named experiment in ``cfg``."""
    name = cfg.init.preset
    if name == "accuracy":
        return cfg.update("grid", Nx=256, Ny=256)
    if name == "fh-perturb":
        horizon = 1400.0 if cfg.model.hydro else 15000.0
        return (cfg.update("grid", Nx=256, Ny=256)
                .update("time", steps=None, t_end=horizon))
    if name == "pr-droplet":
        return (cfg.update("grid", Nx=256, Ny=256)
                .update("time", steps=None, t_end=6000.0))
    return cfg


def star_indicator(X, Y, r1, r2, n):
    """Cells inside ``x^2 + y^2 <= (r1 + r2 cos(n theta))^2`` with ``theta`` measured from the y axis."""
    theta = np.arctan2(X, Y)
    return X ** 2 + Y ** 2 <= (r1 + r2 * np.cos(n * theta)) ** 2


def _read_field(path):
    from .output import read_csv_field
    return read_csv_field(path)[0]


def make_initial(init: InitSection, grid: GridSpec, model: EnergyModel) -> State:
    """Cell-centred densities of the chosen preset, zero velocity, ``q`` from the densities."""
    X, Y = grid.mesh("cell")
    X, Y = X[1:-1, 1:-1], Y[1:-1, 1:-1]
    p = init.preset
    if p in ("accuracy", "fh-perturb"):
        coord = X if init.axis == "x" else Y
        wave = init.amplitude * np.cos(init.wavenumber * coord)
        rho1 = init.mean1 + wave
        rho2 = init.mean2 - wave
    elif p == "pr-droplet":
        inside = star_indicator(X, Y, init.r1, init.r2, init.n)
        n1 = np.where(inside, init.n1_liquid, init.n1_gas)
        n2 = np.where(inside, init.n2_liquid, init.n2_gas)
        m1, m2 = model.masses
        rho1, rho2 = m1 * n1, m2 * n2
    elif p == "from-file":
        if not init.file:
            raise ConfigError("[init] file must name a snapshot directory for from-file")
        rho1 = _read_field(os.path.join(init.file, "rho1.csv"))
        rho2 = _read_field(os.path.join(init.file, "rho2.csv"))
        if rho1.shape != (grid.Ny, grid.Nx) or rho2.shape != (grid.Ny, grid.Nx):
            raise ConfigError(f"snapshot shape {rho1.shape} does not match grid {(grid.Ny, grid.Nx)}")
    else:
        raise ConfigError(f"unknown preset {p!r}; expected one of {PRESET_NAMES}")
    if np.any(~(rho1 >= 0)) or np.any(~(rho2 >= 0)) or np.any(~(rho1 + rho2 > 0)):
        raise DomainError("initial densities must be non-negative with positive total")
    state = State.initial(grid, model, rho1, rho2)
    if p == "from-file":
        _load_velocity(state, init.file)
    return state


def _load_velocity(state, directory):
    from .output import read_csv_field
    for name, arr in (("u", state.u), ("v", state.v)):
        path = os.path.join(directory, f"{name}.csv")
        if os.path.exists(path):
            vals = read_csv_field(path)[0]
            target = arr[1:-1, :] if name == "u" else arr[:, 1:-1]
            if vals.shape != target.shape:
                raise ConfigError(f"{path}: shape {vals.shape} does not match {target.shape}")
            target[:] = vals
    state.apply_bc()
