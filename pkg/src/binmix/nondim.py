"""Characteristic scales and the map from physical to dimensionless parameters.

Every quantity kind has a single multiplicative factor built from
``(t0, l0, rho0, n0, T0)``; a physical value times that factor is the
dimensionless value.  Viscosities map to inverse Reynolds numbers.
"""
from __future__ import annotations

import configparser
from dataclasses import dataclass

import numpy as np

__all__ = [
    "CharacteristicScales",
    "KINDS",
    "scale_factor",
    "nondimensionalize",
    "read_scales",
    "read_physical",
    "methane_decane_physical",
    "METHANE_DECANE_SCALES",
]


@dataclass(frozen=True)
class CharacteristicScales:
    t0: float = 1.0      # s
    l0: float = 1.0      # m
    rho0: float = 1.0    # kg m^-d
    n0: float = 1.0      # mol m^-d
    T0: float = 1.0      # K

    def __post_init__(self):
        for name in ("t0", "l0", "rho0", "n0", "T0"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ValueError(f"characteristic scale {name} must be positive, got {v}")


def _factors(s: CharacteristicScales) -> dict:
    return {
        "time": 1.0 / s.t0,
        "length": 1.0 / s.l0,
        "density": 1.0 / s.rho0,
        "molar_density": 1.0 / s.n0,
        "temperature": 1.0 / s.T0,
        "mobility": 1.0 / (s.t0 * s.rho0),
        "viscosity": s.t0 / (s.rho0 * s.l0 ** 2),
        "kappa_mass": s.rho0 * s.t0 ** 2 / s.l0 ** 4,
        "kappa_molar": s.n0 ** 2 * s.t0 ** 2 / (s.rho0 * s.l0 ** 4),
        "molar_mass": s.n0 / s.rho0,
        "pressure": s.t0 ** 2 / (s.rho0 * s.l0 ** 2),
        "gas_constant": s.T0 * s.n0 * s.t0 ** 2 / (s.rho0 * s.l0 ** 2),
        "velocity": s.t0 / s.l0,
    }


KINDS = tuple(_factors(CharacteristicScales()))


def scale_factor(scales: CharacteristicScales, kind: str) -> float:
    try:
        return _factors(scales)[kind]
    except KeyError:
        raise ValueError(f"unknown quantity kind {kind!r}; expected one of {KINDS}") from None


def nondimensionalize(scales: CharacteristicScales, physical: dict) -> dict:
    """Convert ``{kind: {name: value}}`` to ``{name: dimensionless value}``.

    Values may be scalars or sequences.  Each viscosity ``name`` also yields
    ``Re_<name>``, its reciprocal dimensionless value.
    """
    out = {}
    for kind, entries in physical.items():
        f = scale_factor(scales, kind)
        for name, value in entries.items():
            if name in out:
                raise ValueError(f"parameter {name!r} given twice")
            arr = np.asarray(value, float) * f
            val = float(arr) if arr.ndim == 0 else tuple(float(a) for a in arr)
            out[name] = val
            if kind == "viscosity":
                out[f"Re_{name}"] = (1.0 / val if arr.ndim == 0
                                     else tuple(1.0 / a for a in val))
    return out


def _ini(path):
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    with open(path, encoding="utf-8") as fh:
        cp.read_file(fh)
    return cp


def _number(text):
    parts = [float(p) for p in text.split(",")]
    return parts[0] if len(parts) == 1 else tuple(parts)


def read_scales(path) -> CharacteristicScales:
    """``[scales]`` section with any of ``t0 l0 rho0 n0 T0``."""
    cp = _ini(path)
    if not cp.has_section("scales"):
        raise ValueError(f"{path}: missing [scales] section")
    vals = dict(cp.items("scales"))
    unknown = set(vals) - {"t0", "l0", "rho0", "n0", "T0"}
    if unknown:
        raise ValueError(f"{path}: unknown scale keys {sorted(unknown)}")
    return CharacteristicScales(**{k: float(v) for k, v in vals.items()})


def read_physical(path) -> dict:
    """One section per quantity kind, e.g. ``[viscosity] eta_s = 1e-4``."""
    cp = _ini(path)
    out = {}
    for sec in cp.sections():
        if sec not in KINDS:
            raise ValueError(f"{path}: unknown quantity kind [{sec}]")
        out[sec] = {k: _number(v) for k, v in cp.items(sec)}
    return out


# methane / n-decane at 330 K on a 80 nm box
METHANE_DECANE_SCALES = CharacteristicScales(t0=6.4171e-11, l0=2e-8, rho0=16.0428, n0=1e3, T0=273.0)


def methane_decane_physical() -> dict:
    """SI inputs of the gas-liquid droplet; component 1 is n-decane, 2 is methane."""
    return {
        "temperature": {"T": 330.0, "Tc": (617.7, 190.564)},
        "pressure": {"Pc": (2.103e6, 4.5992e6)},
        "molar_mass": {"molar_mass": (0.14228, 0.0160428)},
        "gas_constant": {"R": 8.3144598},
        "mobility": {"M1": 1e-12},
        "viscosity": {"eta_s": 1e-4, "eta_v": 0.33e-4},
        "kappa_molar": {"kappa_n11": 1.1246e-18, "kappa_n12": 8.9748e-20, "kappa_n22": 2.8649e-20},
        "length": {"domain": (-4e-8, 4e-8)},
    }
