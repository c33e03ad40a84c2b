"""Bulk free-energy densities, energy-quadratization variables and entropy coefficients.

Every model is evaluated in mass densities ``(rho1, rho2)``.  Models that are
naturally written in molar densities (Peng-Robinson) carry molar masses and
convert with ``n_i = rho_i / m_i``; derivatives pick up the matching chain-rule
factors, so callers never see the molar form unless they ask for it.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import optimize

__all__ = [
    "DomainError",
    "EQShiftError",
    "RepulsionSingularityError",
    "EntropyMatrix",
    "EnergyModel",
    "DoubleWell",
    "FloryHuggins",
    "PengRobinson",
    "bulk_h",
    "bulk_grad_h",
    "bulk_hessian_h",
    "eq_vars",
    "pr_mixture_coeffs",
    "modified_h_m",
    "molar_to_mass",
    "mass_to_molar",
    "two_phase_equilibrium",
]

SQRT2 = math.sqrt(2.0)


class DomainError(ValueError):
    """Densities outside the admissible set of an energy model."""


class RepulsionSingularityError(DomainError):
    """Peng-Robinson co-volume exceeded (``b n >= 1``)."""


class EQShiftError(ValueError):
    """``h + A`` is not positive, so the quadratization variable is undefined."""


def _first_bad(mask, *arrays):
    idx = np.argwhere(np.atleast_1d(mask))[0]
    return tuple(float(np.atleast_1d(a)[tuple(idx)]) for a in arrays)


@dataclass(frozen=True)
class EntropyMatrix:
    """Gradient-energy coefficient matrix ``[[k11, k12], [k12, k22]]``."""

    k11: float
    k12: float
    k22: float

    def __post_init__(self):
        if self.k11 > 0 and self.k11 * self.k22 - self.k12 ** 2 > 0:
            return
        if self.k12 == 0 and self.k11 >= 0 and self.k22 >= 0:
            warnings.warn("entropy matrix is only positive semi-definite; "
                          "unique solvability is not guaranteed", stacklevel=3)
            return
        raise ValueError(f"entropy matrix ({self.k11}, {self.k12}, {self.k22}) "
                         "is not positive definite")

    @classmethod
    def from_molar(cls, k11: float, k12: float, k22: float, masses=(1.0, 1.0)):
        """Build from molar-density coefficients, ``k_rho_ij = k_n_ij / (m_i m_j)``."""
        m1, m2 = masses
        return cls(k11 / (m1 * m1), k12 / (m1 * m2), k22 / (m2 * m2))

    def to_molar(self, masses=(1.0, 1.0)) -> tuple[float, float, float]:
        m1, m2 = masses
        return self.k11 * m1 * m1, self.k12 * m1 * m2, self.k22 * m2 * m2

    def as_array(self) -> np.ndarray:
        return np.array([[self.k11, self.k12], [self.k12, self.k22]])


class EnergyModel:
    """Base class: subclasses implement the molar-form ``_h``, ``_grad``, ``_hess``.

    For mass-density models the molar masses are ``(1, 1)`` and the molar form
    coincides with the mass form.
    """

    name = "abstract"
    masses: tuple[float, float] = (1.0, 1.0)
    A: float = 1.0

    # molar-form hooks ------------------------------------------------------
    def _h(self, n1, n2):
        raise NotImplementedError

    def _grad(self, n1, n2):
        raise NotImplementedError

    def _hess(self, n1, n2):
        """Centred differences of the analytic gradient (step 1e-5)."""
        step = 1e-5
        g1p, g2p = self._grad(n1 + step, n2)
        g1m, g2m = self._grad(n1 - step, n2)
        h11 = (g1p - g1m) / (2 * step)
        h21 = (g2p - g2m) / (2 * step)
        g1p, g2p = self._grad(n1, n2 + step)
        g1m, g2m = self._grad(n1, n2 - step)
        h12 = (g1p - g1m) / (2 * step)
        h22 = (g2p - g2m) / (2 * step)
        off = 0.5 * (h12 + h21)
        return h11, off, h22

    # mass-form API ---------------------------------------------------------
    def h(self, rho1, rho2):
        m1, m2 = self.masses
        return self._h(np.asarray(rho1, float) / m1, np.asarray(rho2, float) / m2)

    def grad(self, rho1, rho2):
        m1, m2 = self.masses
        g1, g2 = self._grad(np.asarray(rho1, float) / m1, np.asarray(rho2, float) / m2)
        return g1 / m1, g2 / m2

    def hessian(self, rho1, rho2):
        m1, m2 = self.masses
        h11, h12, h22 = self._hess(np.asarray(rho1, float) / m1, np.asarray(rho2, float) / m2)
        return h11 / (m1 * m1), h12 / (m1 * m2), h22 / (m2 * m2)

    def eq_vars(self, rho1, rho2):
        """``(q, dq/drho1, dq/drho2)`` with ``q = sqrt(h + A)``."""
        shifted = self.h(rho1, rho2) + self.A
        if np.any(~(shifted > 0)):
            r1, r2, s = _first_bad(~(shifted > 0), rho1, rho2, shifted)
            raise EQShiftError(f"h + A = {s:.6g} <= 0 at (rho1, rho2) = ({r1:.6g}, {r2:.6g}); "
                               f"increase the shift A (currently {self.A:.6g})")
        q = np.sqrt(shifted)
        g1, g2 = self.grad(rho1, rho2)
        return q, g1 / (2 * q), g2 / (2 * q)

    # shift selection -------------------------------------------------------
    def _sample_min(self, box, samples=64):
        (lo1, hi1), (lo2, hi2) = box
        n1, n2 = np.meshgrid(np.linspace(lo1, hi1, samples), np.linspace(lo2, hi2, samples))
        vals = self._sample_h(n1.ravel(), n2.ravel())
        return float(np.min(vals))

    def _sample_h(self, n1, n2):
        return self._h(n1, n2)

    def check_shift(self, box, samples=64):
        """Raise if ``h + A <= 0`` anywhere on a ``samples``-square sample of ``box``."""
        lo = self._sample_min(box, samples)
        if lo + self.A <= 0:
            raise EQShiftError(f"min h = {lo:.6g} on the admissible box; A = {self.A:.6g} too small")


class DoubleWell(EnergyModel):
    """``h = rho1^2 (rho1 - 1)^2 + rho2^2 (rho2 - 1)^2``."""

    name = "double-well"

    def __init__(self, A: float = 1.0):
        self.A = float(A)
        self.check_shift(((0.0, 1.0), (0.0, 1.0)), samples=16)

    def _h(self, n1, n2):
        return n1 ** 2 * (n1 - 1) ** 2 + n2 ** 2 * (n2 - 1) ** 2

    def _grad(self, n1, n2):
        return 2 * n1 * (n1 - 1) * (2 * n1 - 1), 2 * n2 * (n2 - 1) * (2 * n2 - 1)

    def _hess(self, n1, n2):
        return 12 * n1 ** 2 - 12 * n1 + 2, np.zeros_like(n1 * n2), 12 * n2 ** 2 - 12 * n2 + 2

    def __repr__(self):
        return f"DoubleWell(A={self.A})"


class FloryHuggins(EnergyModel):
    """Flory-Huggins mixing energy scaled by ``prefactor = k_B T / m``."""

    name = "flory-huggins"

    def __init__(self, N1=1.0, N2=1.0, chi=2.5, prefactor=1.0, A=None,
                 box=((1e-6, 2.0), (1e-6, 2.0))):
        self.N1, self.N2, self.chi = float(N1), float(N2), float(chi)
        self.prefactor = float(prefactor)
        self.box = box
        if A is None:
            A = 1.0 + abs(self._sample_min(box))
        self.A = float(A)
        self.check_shift(box)

    @staticmethod
    def _validate(n1, n2):
        n1 = np.asarray(n1, float)
        n2 = np.asarray(n2, float)
        bad = ~((n1 > 0) & (n2 > 0))
        if np.any(bad):
            r1, r2 = _first_bad(bad, n1, n2)
            raise DomainError(f"Flory-Huggins energy needs positive densities, "
                              f"got (rho1, rho2) = ({r1:.6g}, {r2:.6g})")
        return n1, n2

    def _h(self, n1, n2):
        n1, n2 = self._validate(n1, n2)
        r = n1 + n2
        return self.prefactor * (n1 / self.N1 * np.log(n1 / r) + n2 / self.N2 * np.log(n2 / r)
                                 + self.chi * n1 * n2 / r)

    def _grad(self, n1, n2):
        n1, n2 = self._validate(n1, n2)
        r = n1 + n2
        c, chi = self.prefactor, self.chi
        g1 = (np.log(n1 / r) + 1 - n1 / r) / self.N1 - n2 / (self.N2 * r) + chi * n2 ** 2 / r ** 2
        g2 = (np.log(n2 / r) + 1 - n2 / r) / self.N2 - n1 / (self.N1 * r) + chi * n1 ** 2 / r ** 2
        return c * g1, c * g2

    def _hess(self, n1, n2):
        n1, n2 = self._validate(n1, n2)
        r = n1 + n2
        c, chi, N1, N2 = self.prefactor, self.chi, self.N1, self.N2
        h11 = (1 / n1 - 1 / r - n2 / r ** 2) / N1 + n2 / (N2 * r ** 2) - 2 * chi * n2 ** 2 / r ** 3
        h22 = (1 / n2 - 1 / r - n1 / r ** 2) / N2 + n1 / (N1 * r ** 2) - 2 * chi * n1 ** 2 / r ** 3
        h12 = -n2 / (N1 * r ** 2) - n1 / (N2 * r ** 2) + 2 * chi * n1 * n2 / r ** 3
        return c * h11, c * h12, c * h22

    def __repr__(self):
        return (f"FloryHuggins(N1={self.N1}, N2={self.N2}, chi={self.chi}, "
                f"prefactor={self.prefactor}, A={self.A:.6g})")


class PengRobinson(EnergyModel):
    """Peng-Robinson Helmholtz energy density of a binary mixture.

    Parameters are dimensionless critical temperatures/pressures, acentric
    factors and molar masses per component, the gas constant ``R``, the
    temperature ``T`` and the binary interaction ``k12``.  The ideal part is
    replaced by a quadratic below ``eps_reg`` so the energy stays finite (and
    C^1) as a component vanishes.
    """

    name = "peng-robinson"

    def __init__(self, Tc, Pc, omega, molar_mass=(1.0, 1.0), k12=0.0, R=1.0, T=1.0,
                 eps_reg=1e-6, A=None, box=((0.0, 4.8), (0.0, 9.0))):
        self.Tc = np.asarray(Tc, float)
        self.Pc = np.asarray(Pc, float)
        self.omega = np.asarray(omega, float)
        self.masses = tuple(float(m) for m in molar_mass)
        self.k12 = float(k12)
        self.R, self.T = float(R), float(T)
        if not eps_reg > 0:
            raise ValueError("eps_reg must be positive")
        self.eps_reg = float(eps_reg)
        self.box = box
        RT = self.R * self.T
        self.b_i = 0.07780 * self.R * self.Tc / self.Pc
        kappa = 0.37464 + 1.54226 * self.omega - 0.26992 * self.omega ** 2
        alpha = (1 + kappa * (1 - np.sqrt(self.T / self.Tc))) ** 2
        self.a_i = 0.45724 * self.R ** 2 * self.Tc ** 2 / self.Pc * alpha
        kij = np.array([[0.0, self.k12], [self.k12, 0.0]])
        self.a_ij = np.sqrt(np.outer(self.a_i, self.a_i)) * (1 - kij)
        self.RT = RT
        if A is None:
            A = 1.0 + abs(self._sample_min(box))
        self.A = float(A)
        self.check_shift(box)

    # pieces ----------------------------------------------------------------
    def _covolume(self, n1, n2):
        B = self.b_i[0] * n1 + self.b_i[1] * n2
        bad = ~(B < 1)
        if np.any(bad):
            x1, x2, xb = _first_bad(bad, n1, n2, B)
            raise RepulsionSingularityError(
                f"b n = {xb:.6g} >= 1 at molar densities ({x1:.6g}, {x2:.6g})")
        return B

    def _ideal(self, n):
        eps = self.eps_reg
        small = n < eps
        safe = np.where(small, eps, n)
        reg = n * (math.log(eps) - 1) + (n * n / (2 * eps) - eps / 2)
        return np.where(small, reg, safe * (np.log(safe) - 1))

    def _ideal_prime(self, n):
        eps = self.eps_reg
        small = n < eps
        safe = np.where(small, eps, n)
        return np.where(small, math.log(eps) - 1 + n / eps, np.log(safe))

    def _h(self, n1, n2):
        n1 = np.asarray(n1, float)
        n2 = np.asarray(n2, float)
        B = self._covolume(n1, n2)
        n = n1 + n2
        a = self.a_ij
        S = a[0, 0] * n1 * n1 + 2 * a[0, 1] * n1 * n2 + a[1, 1] * n2 * n2
        L = np.log((1 + (1 - SQRT2) * B) / (1 + (1 + SQRT2) * B))
        Bs = np.where(B > 0, B, 1.0)
        # S / B -> 0 with L / B -> -2 sqrt2 as n -> 0
        att = np.where(B > 0, S / (2 * SQRT2 * Bs) * L, 0.0)
        return (self.RT * (self._ideal(n1) + self._ideal(n2))
                - n * self.RT * np.log(1 - B) + att)

    def _grad(self, n1, n2):
        n1 = np.asarray(n1, float)
        n2 = np.asarray(n2, float)
        B = self._covolume(n1, n2)
        n = n1 + n2
        a, b = self.a_ij, self.b_i
        S = a[0, 0] * n1 * n1 + 2 * a[0, 1] * n1 * n2 + a[1, 1] * n2 * n2
        dS1 = 2 * (a[0, 0] * n1 + a[0, 1] * n2)
        dS2 = 2 * (a[0, 1] * n1 + a[1, 1] * n2)
        Lm = 1 + (1 - SQRT2) * B
        Lp = 1 + (1 + SQRT2) * B
        L = np.log(Lm / Lp)
        dL_dB = (1 - SQRT2) / Lm - (1 + SQRT2) / Lp
        Bs = np.where(B > 0, B, 1.0)
        rep = -self.RT * np.log(1 - B)
        out = []
        for dS, bi, ni in ((dS1, b[0], n1), (dS2, b[1], n2)):
            att = (dS * L / Bs - S * bi * L / Bs ** 2 + S * bi * dL_dB / Bs) / (2 * SQRT2)
            # near the vacuum the attraction behaves like -S, whose gradient -dS vanishes
            att = np.where(B > 0, att, -dS)
            out.append(self.RT * self._ideal_prime(ni) + rep + n * self.RT * bi / (1 - B) + att)
        return out[0], out[1]

    def _sample_h(self, n1, n2):
        B = self.b_i[0] * n1 + self.b_i[1] * n2
        ok = B < 0.999
        return self._h(n1[ok], n2[ok])

    def mixture_coeffs(self, n1, n2):
        """Van der Waals mixing: ``(a, b, a_i, b_i)`` at molar densities ``(n1, n2)``."""
        n1 = np.asarray(n1, float)
        n2 = np.asarray(n2, float)
        n = n1 + n2
        if np.any(~(n > 0)):
            raise DomainError("total molar density must be positive")
        y = (n1 / n, n2 / n)
        a = sum(y[i] * y[j] * self.a_ij[i, j] for i in range(2) for j in range(2))
        b = y[0] * self.b_i[0] + y[1] * self.b_i[1]
        if np.any(~(b * n < 1)):
            raise RepulsionSingularityError("b n >= 1")
        return a, b, self.a_i.copy(), self.b_i.copy()

    def molar_h(self, n1, n2):
        return self._h(n1, n2)

    def molar_grad(self, n1, n2):
        return self._grad(n1, n2)

    def __repr__(self):
        return (f"PengRobinson(Tc={self.Tc.tolist()}, Pc={self.Pc.tolist()}, "
                f"omega={self.omega.tolist()}, molar_mass={list(self.masses)}, "
                f"k12={self.k12}, R={self.R}, T={self.T}, eps_reg={self.eps_reg}, A={self.A:.6g})")


# functional surface ----------------------------------------------------------

def bulk_h(model: EnergyModel, rho1, rho2):
    return model.h(rho1, rho2)


def bulk_grad_h(model: EnergyModel, rho1, rho2):
    return model.grad(rho1, rho2)


def bulk_hessian_h(model: EnergyModel, rho1, rho2):
    return model.hessian(rho1, rho2)


def eq_vars(model: EnergyModel, rho1, rho2):
    return model.eq_vars(rho1, rho2)


def pr_mixture_coeffs(model: PengRobinson, n1, n2):
    if not isinstance(model, PengRobinson):
        raise TypeError("mixture coefficients are defined for Peng-Robinson models only")
    return model.mixture_coeffs(n1, n2)


def molar_to_mass(model: EnergyModel, n1, n2):
    m1, m2 = model.masses
    return np.multiply(n1, m1), np.multiply(n2, m2)


def mass_to_molar(model: EnergyModel, rho1, rho2):
    m1, m2 = model.masses
    return np.divide(rho1, m1), np.divide(rho2, m2)


def modified_h_m(model: EnergyModel, n1, n2, mu1, mu2):
    """Tangent-plane-shifted energy ``h(n) - mu1 n1 - mu2 n2`` in molar densities."""
    return model._h(np.asarray(n1, float), np.asarray(n2, float)) - mu1 * np.asarray(n1) - mu2 * np.asarray(n2)


def two_phase_equilibrium(model: EnergyModel, liquid, gas, fixed=0):
    """Coexisting bulk states with equal chemical potentials and pressure.

    One molar density of the liquid (index ``fixed``) is held at its guess,
    which removes the single thermodynamic degree of freedom of a binary
    two-phase system at fixed temperature.  Returns ``(liquid, gas, mu0)``.
    """
    liquid = np.asarray(liquid, float)
    gas = np.asarray(gas, float)

    def unpack(z):
        nl = liquid.copy()
        free = 1 - fixed
        nl[free] = z[0]
        return nl, z[1:3]

    def residual(z):
        nl, ng = unpack(z)
        ml = np.array(model._grad(nl[0], nl[1]))
        mg = np.array(model._grad(ng[0], ng[1]))
        pl = nl @ ml - model._h(nl[0], nl[1])
        pg = ng @ mg - model._h(ng[0], ng[1])
        return np.concatenate([ml - mg, [pl - pg]])

    z0 = np.array([liquid[1 - fixed], gas[0], gas[1]])
    sol = optimize.root(residual, z0, method="hybr", options={"xtol": 1e-14})
    if not sol.success:
        raise RuntimeError(f"two-phase equilibrium solve failed: {sol.message}")
    nl, ng = unpack(sol.x)
    mu0 = np.array(model._grad(nl[0], nl[1]))
    return nl, ng, mu0
