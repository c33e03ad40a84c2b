"""Energy bookkeeping, dissipation, linear stability and growth-rate fitting."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .energy import EnergyModel, EntropyMatrix
from .grid import GridSpec, inner_product

__all__ = [
    "DiagnosticsRecord",
    "discrete_energy",
    "energy_parts",
    "component_masses",
    "dissipation_terms",
    "DispersionSetup",
    "dispersion_roots",
    "max_growth",
    "growth_rate_fit",
    "centered_amplitude",
    "isoperimetric_ratio",
    "line_profile",
]


@dataclass
class DiagnosticsRecord:
    step: int
    time: float
    energy: float
    mass1: float
    mass2: float
    kinetic: float = 0.0
    shear: float = 0.0
    volumetric: float = 0.0
    mixing: float = 0.0
    krylov_iters: int = 0
    residual: float = 0.0
    energy_residual: float = 0.0
    report: object = field(default=None, repr=False, compare=False)

    @property
    def dissipation(self):
        return self.shear + self.volumetric + self.mixing

    def as_dict(self):
        d = asdict(self)
        d.pop("report")
        return d


def energy_parts(state, model: EnergyModel, K: EntropyMatrix) -> dict:
    """Kinetic, EQ (``(q, q) - (A, 1)``) and gradient contributions to ``E_h``."""
    g: GridSpec = state.grid
    kinetic = 0.5 * (inner_product(g, "ew", state.u, state.u)
                     + inner_product(g, "ns", state.v, state.v))
    bulk = inner_product(g, "cell", state.q, state.q) - model.A * g.Lx * g.Ly
    grad = (0.5 * K.k11 * inner_product(g, "grad", state.rho1, state.rho1)
            + 0.5 * K.k22 * inner_product(g, "grad", state.rho2, state.rho2)
            + K.k12 * inner_product(g, "grad", state.rho1, state.rho2))
    return {"kinetic": kinetic, "bulk": bulk, "gradient": grad}


def discrete_energy(state, model: EnergyModel, K: EntropyMatrix) -> float:
    p = energy_parts(state, model, K)
    return p["kinetic"] + p["bulk"] + p["gradient"]


def component_masses(state) -> tuple[float, float]:
    g = state.grid
    dA = g.cell_area
    return (dA * float(np.sum(state.rho1[1:-1, 1:-1])),
            dA * float(np.sum(state.rho2[1:-1, 1:-1])))


def dissipation_terms(system, X) -> dict:
    """Shear, volumetric and mixing dissipation rates of the half-step solution ``X``."""
    from .scheme import discrete_strain

    g, c, p = system.grid, system.coeffs, system.params
    half = system.unpack(X) if not isinstance(X, dict) else X
    d11, d22, d12 = discrete_strain(g, c, half["u"], half["v"])
    tr = d11 + d22
    shear = (2.0 * inner_product(g, "cell", c.inv_Re_s, d11 * d11 + d22 * d22)
             + 4.0 * inner_product(g, "vc", system.Rs_v, d12 * d12))
    vol = inner_product(g, "cell", c.inv_Re_v * tr, tr)
    dmu = half["mu1"] - half["mu2"]
    mix = p.M1 * inner_product(g, "grad", dmu, dmu)
    return {"shear": shear, "volumetric": vol, "mixing": mix}


# linear stability ------------------------------------------------------------

@dataclass(frozen=True)
class DispersionSetup:
    """Constant base state and coefficients for the normal-mode analysis."""

    rho1: float
    rho2: float
    eta0: float          # shear coefficient 1/Re_s
    eta_bar0: float      # volumetric coefficient 1/Re_v
    M1: float
    K: EntropyMatrix
    C: tuple             # (h11, h12, h22) at the base state
    amplitude: float = 0.005

    def __post_init__(self):
        if not self.rho1 + self.rho2 > 0:
            raise ValueError("base density must be positive")

    @classmethod
    def from_model(cls, model: EnergyModel, rho1, rho2, Re_s, Re_v, M1, K, **kw):
        h11, h12, h22 = (float(x) for x in model.hessian(rho1, rho2))
        return cls(rho1, rho2, 1.0 / Re_s, 1.0 / Re_v, M1, K, (h11, h12, h22), **kw)


def dispersion_roots(setup: DispersionSetup, k: float) -> np.ndarray:
    """All four growth rates at wave number ``k``; the first is ``-(eta0/rho0) k^2``."""
    k = float(k)
    if k < 0:
        raise ValueError("wave number must be non-negative")
    rho0 = setup.rho1 + setup.rho2
    eta = 2.0 * setup.eta0 + setup.eta_bar0
    K = setup.K
    h11, h12, h22 = setup.C
    k2 = k * k
    H11 = h11 + K.k11 * k2
    H22 = h22 + K.k22 * k2
    H12 = h12 + K.k12 * k2
    p = np.array([setup.rho1, setup.rho2])
    Cm = np.array([[h11, h12], [h12, h22]])
    pCp = p @ Cm @ p
    pKp = p @ K.as_array() @ p
    mix = H11 + H22 - 2.0 * H12
    c3 = rho0
    c2 = k2 * (eta + rho0 * setup.M1 * (H11 + H22)) - k2 * (2.0 * rho0 * setup.M1 * H12)
    c1 = (pCp + pKp * k2) * k2 + eta * setup.M1 * mix * k2 * k2
    c0 = k2 * k2 * setup.M1 * rho0 ** 2 * (H11 * H22 - H12 ** 2)
    companion = np.array([[-c2 / c3, -c1 / c3, -c0 / c3],
                          [1.0, 0.0, 0.0],
                          [0.0, 1.0, 0.0]])
    cubic = np.linalg.eigvals(companion)
    cubic = cubic[np.lexsort((cubic.imag, -cubic.real))]
    factor = -(setup.eta0 / rho0) * k2
    return np.concatenate([[complex(factor, 0.0)], cubic.astype(complex)])


def max_growth(setup: DispersionSetup, k: float) -> float:
    return float(np.max(dispersion_roots(setup, k).real))


# growth fitting --------------------------------------------------------------

def centered_amplitude(state) -> float:
    """Grid L2 norm of ``rho1`` minus its mean."""
    g = state.grid
    r = state.rho1[1:-1, 1:-1]
    return float(np.sqrt(g.cell_area * np.sum((r - r.mean()) ** 2)))


def growth_rate_fit(times, amplitudes, window=None) -> tuple[float, float]:
    """Least-squares slope of ``log(amplitude)`` against time.

    ``window`` is an optional ``(start, stop)`` index range.  Returns
    ``(alpha, rms_residual)`` of the log-linear fit.
    """
    t = np.asarray(times, float)
    a = np.asarray(amplitudes, float)
    if t.shape != a.shape:
        raise ValueError("times and amplitudes differ in length")
    if window is not None:
        t = t[window[0]:window[1]]
        a = a[window[0]:window[1]]
    if t.size < 3:
        raise ValueError("growth fit needs at least 3 points")
    if np.any(~(a > 0)):
        raise ValueError("amplitudes must be positive in the fit window")
    y = np.log(a)
    A = np.column_stack([t, np.ones_like(t)])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    res = y - A @ coef
    return float(coef[0]), float(np.sqrt(np.mean(res ** 2)))


# droplet shape -----------------------------------------------------------------

def isoperimetric_ratio(grid: GridSpec, field, low, high) -> float:
    """``P^2 / (4 pi A)`` of the level set halfway between ``low`` and ``high``.

    ``field`` is an interior cell array; the perimeter comes from marching
    squares on the cell-centre lattice and the area from the enclosed polygons.
    Equals 1 for a circle and grows with shape irregularity.
    """
    from skimage.measure import find_contours

    f = np.asarray(field, float)
    if f.shape != (grid.Ny, grid.Nx):
        raise ValueError("isoperimetric_ratio expects an interior cell array")
    level = 0.5 * (low + high)
    padded = np.pad(f, 1, mode="constant", constant_values=min(low, high))
    perim = 0.0
    area = 0.0
    for c in find_contours(padded, level):
        y = c[:, 0] * grid.hy
        x = c[:, 1] * grid.hx
        perim += float(np.sum(np.hypot(np.diff(x), np.diff(y))))
        area += 0.5 * float(np.sum(x[:-1] * y[1:] - x[1:] * y[:-1]))
    area = abs(area)
    if area == 0:
        raise ValueError("no enclosed region at the mid level")
    return perim * perim / (4.0 * np.pi * area)


def line_profile(grid: GridSpec, field, y=0.0):
    """Values along the horizontal line ``y``, linearly interpolated between cell rows."""
    f = np.asarray(field, float)
    if f.shape == (grid.Ny + 2, grid.Nx + 2):
        f = f[1:-1, 1:-1]
    ys = grid.y_centers()[1:-1]
    xs = grid.x_centers()[1:-1]
    s = (y - ys[0]) / grid.hy
    j = int(np.clip(np.floor(s), 0, grid.Ny - 2))
    w = float(np.clip(s - j, 0.0, 1.0))
    return xs, (1.0 - w) * f[j] + w * f[j + 1]
