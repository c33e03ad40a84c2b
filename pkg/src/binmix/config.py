"""Run configuration: sectioned ``key = value`` text with typed, strict sections.

Unknown sections or keys are errors.  Floats are written with ``repr`` so a
serialize/parse round trip is exact.
"""
from __future__ import annotations

import configparser
import io
import typing
from dataclasses import dataclass, field, fields, replace

from .energy import DoubleWell, EntropyMatrix, FloryHuggins, PengRobinson
from .grid import GridSpec
from .scheme import ModelParams
from .solver import SolverConfig

__all__ = [
    "ConfigError",
    "GridSection",
    "TimeSection",
    "ModelSection",
    "EnergySection",
    "SolverSection",
    "InitSection",
    "OutputSection",
    "RunConfig",
    "parse_config",
    "load_config",
    "serialize_config",
]


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class GridSection:
    Lx: float = 1.0
    Ly: float = 1.0
    Nx: int = 64
    Ny: int = 64
    x0: float = 0.0
    y0: float = 0.0

    def build(self) -> GridSpec:
        return GridSpec(self.Lx, self.Ly, self.Nx, self.Ny, self.x0, self.y0)


@dataclass(frozen=True)
class TimeSection:
    dt: float = 1e-3
    t_end: float = 0.1
    steps: typing.Optional[int] = None   # overrides t_end when given

    def __post_init__(self):
        if not self.dt > 0:
            raise ConfigError("[time] dt must be positive")
        if self.steps is None and not self.t_end > 0:
            raise ConfigError("[time] t_end must be positive")
        if self.steps is not None and self.steps < 1:
            raise ConfigError("[time] steps must be at least 1")

    @property
    def nsteps(self) -> int:
        if self.steps is not None:
            return self.steps
        return max(1, int(round(self.t_end / self.dt)))


@dataclass(frozen=True)
class ModelSection:
    Re_s1: float = 100.0
    Re_s2: float = 100.0
    Re_v1: float = 300.0
    Re_v2: float = 300.0
    M1: float = 1e-3
    hydro: bool = True
    rho_floor: float = 1e-10


@dataclass(frozen=True)
class EnergySection:
    kind: str = "double-well"
    A: typing.Optional[float] = None
    # Flory-Huggins
    N1: float = 1.0
    N2: float = 1.0
    chi: float = 2.5
    prefactor: float = 1.0
    # Peng-Robinson (dimensionless, molar form)
    Tc: tuple = (2.2626, 0.6980)
    Pc: tuple = (1.3495, 2.9513)
    omega: tuple = (0.4884, 0.01142)
    molar_mass: tuple = (8.8688, 1.0)
    k12: float = 0.0
    R: float = 1.4566
    T: float = 1.2088
    eps_reg: float = 1e-6
    # gradient (entropy) coefficients
    kappa11: float = 1e-4
    kappa12: float = 0.0
    kappa22: float = 1e-4
    kappa_form: str = "mass"     # or "molar"

    def __post_init__(self):
        if self.kind not in ("double-well", "flory-huggins", "peng-robinson"):
            raise ConfigError(f"[energy] unknown kind {self.kind!r}")
        if self.kappa_form not in ("mass", "molar"):
            raise ConfigError(f"[energy] kappa_form must be mass or molar, got {self.kappa_form!r}")

    def build_model(self):
        if self.kind == "double-well":
            return DoubleWell(A=1.0 if self.A is None else self.A)
        if self.kind == "flory-huggins":
            return FloryHuggins(self.N1, self.N2, self.chi, self.prefactor, A=self.A)
        return PengRobinson(self.Tc, self.Pc, self.omega, molar_mass=self.molar_mass,
                            k12=self.k12, R=self.R, T=self.T, eps_reg=self.eps_reg, A=self.A)

    def build_K(self, model) -> EntropyMatrix:
        if self.kappa_form == "molar":
            return EntropyMatrix.from_molar(self.kappa11, self.kappa12, self.kappa22, model.masses)
        return EntropyMatrix(self.kappa11, self.kappa12, self.kappa22)


@dataclass(frozen=True)
class SolverSection:
    rtol: float = 1e-10
    atol: float = 1e-13
    maxiter: int = 200
    restart: int = 30
    preconditioner: str = "frozen-coefficient"
    rebuild_drift: float = 0.1

    def build(self) -> SolverConfig:
        return SolverConfig(self.rtol, self.atol, self.maxiter, self.restart,
                            self.preconditioner, self.rebuild_drift)


@dataclass(frozen=True)
class InitSection:
    preset: str = "accuracy"
    mean1: float = 0.5
    mean2: float = 0.5
    amplitude: float = 0.01
    wavenumber: float = 6.283185307179586
    axis: str = "x"
    r1: float = 1.0
    r2: float = 0.2
    n: int = 8
    n1_liquid: float = 3.8146
    n1_gas: float = 0.0265
    n2_liquid: float = 3.5132
    n2_gas: float = 7.1339
    file: str = ""

    def __post_init__(self):
        if self.axis not in ("x", "y"):
            raise ConfigError(f"[init] axis must be x or y, got {self.axis!r}")


@dataclass(frozen=True)
class OutputSection:
    dir: str = "out"
    snapshot_interval: int = 100
    format: str = "csv"          # csv, vtk, both, none
    seed: int = 0                # reserved

    def __post_init__(self):
        if self.snapshot_interval < 1:
            raise ConfigError("[output] snapshot_interval must be at least 1")
        if self.format not in ("csv", "vtk", "both", "none"):
            raise ConfigError(f"[output] unknown format {self.format!r}")


_SECTIONS = {
    "grid": GridSection,
    "time": TimeSection,
    "model": ModelSection,
    "energy": EnergySection,
    "solver": SolverSection,
    "init": InitSection,
    "output": OutputSection,
}


@dataclass(frozen=True)
class RunConfig:
    grid: GridSection = field(default_factory=GridSection)
    time: TimeSection = field(default_factory=TimeSection)
    model: ModelSection = field(default_factory=ModelSection)
    energy: EnergySection = field(default_factory=EnergySection)
    solver: SolverSection = field(default_factory=SolverSection)
    init: InitSection = field(default_factory=InitSection)
    output: OutputSection = field(default_factory=OutputSection)

    def update(self, section: str, **values) -> "RunConfig":
        return replace(self, **{section: replace(getattr(self, section), **values)})

    def grid_spec(self) -> GridSpec:
        return self.grid.build()

    def params(self) -> ModelParams:
        model = self.energy.build_model()
        K = self.energy.build_K(model)
        m = self.model
        return ModelParams(model=model, K=K, dt=self.time.dt, M1=m.M1,
                           inv_Re_s1=1.0 / m.Re_s1, inv_Re_s2=1.0 / m.Re_s2,
                           inv_Re_v1=1.0 / m.Re_v1, inv_Re_v2=1.0 / m.Re_v2,
                           hydro=m.hydro, rho_floor=m.rho_floor)


# text conversion ----------------------------------------------------------------

def _fmt(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ", ".join(_fmt(float(v)) for v in value)
    return str(value)


def _convert(section, key, text, hint):
    text = text.strip()
    origin = typing.get_origin(hint)
    if origin is typing.Union:
        args = [a for a in typing.get_args(hint) if a is not type(None)]
        if text.lower() == "none" or text == "":
            return None
        hint = args[0]
    try:
        if hint is bool:
            low = text.lower()
            if low in ("true", "yes", "on", "1"):
                return True
            if low in ("false", "no", "off", "0"):
                return False
            raise ValueError(text)
        if hint is int:
            return int(text)
        if hint is float:
            return float(text)
        if hint is tuple:
            return tuple(float(p) for p in text.split(","))
        return text
    except ValueError:
        raise ConfigError(f"[{section}] {key}: cannot read {text!r} as {getattr(hint, '__name__', hint)}") from None


def parse_config(text: str) -> RunConfig:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    kwargs = {}
    for name in cp.sections():
        if name not in _SECTIONS:
            raise ConfigError(f"unknown section [{name}]")
        cls = _SECTIONS[name]
        hints = typing.get_type_hints(cls)
        allowed = {f.name for f in fields(cls)}
        vals = {}
        for key, text_val in cp.items(name):
            if key not in allowed:
                raise ConfigError(f"[{name}] unknown key {key!r}")
            vals[key] = _convert(name, key, text_val, hints[key])
        try:
            kwargs[name] = cls(**vals)
        except ConfigError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"[{name}] {exc}") from None
    return RunConfig(**kwargs)


def load_config(path) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text)


def serialize_config(cfg: RunConfig) -> str:
    out = io.StringIO()
    for name in _SECTIONS:
        sec = getattr(cfg, name)
        out.write(f"[{name}]\n")
        for f in fields(sec):
            out.write(f"{f.name} = {_fmt(getattr(sec, f.name))}\n")
        out.write("\n")
    return out.getvalue()
