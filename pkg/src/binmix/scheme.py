"""Linear, second-order, energy-stable time stepping on the staggered grid.

One step solves a single linear system for the half-step vector
``X = (mu1, mu2, u, v, q, rho1, rho2)`` whose coefficients are frozen at the
extrapolated time level ``n + 1/2``; the new state is ``2 X - state_n``.
Row ``k`` of the operator is scaled so that pairing it with the ``k``-th
unknown block reproduces the discrete energy balance term by term, which is
what makes ``(A X, X)`` positive.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .analysis import DiagnosticsRecord, component_masses, discrete_energy, dissipation_terms
from .energy import EnergyModel, EntropyMatrix
from .grid import GridSpec, apply_dirichlet, apply_neumann, avg, diff, inner_product, laplacian

__all__ = [
    "PositivityError",
    "ModelParams",
    "State",
    "ExtrapolatedCoeffs",
    "StepSystem",
    "extrapolate",
    "assemble_system",
    "discrete_strain",
    "recover_state",
    "mass_consistent_densities",
    "step",
    "bootstrap",
]


class PositivityError(RuntimeError):
    """Total density fell below the floor at some interior cell."""

    def __init__(self, message, where=None, value=None):
        super().__init__(message)
        self.where = where
        self.value = value


@dataclass(frozen=True)
class ModelParams:
    """Physical and numerical parameters of one run (dimensionless)."""

    model: EnergyModel
    K: EntropyMatrix
    dt: float
    M1: float = 1e-3
    inv_Re_s1: float = 0.01
    inv_Re_s2: float = 0.01
    inv_Re_v1: float = 1.0 / 300
    inv_Re_v2: float = 1.0 / 300
    hydro: bool = True
    rho_floor: float = 1e-10

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("time step must be positive")
        if self.M1 < 0:
            raise ValueError("mobility must be non-negative")
        for name in ("inv_Re_s1", "inv_Re_s2", "inv_Re_v1", "inv_Re_v2"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")

    @classmethod
    def from_reynolds(cls, model, K, dt, M1, Re_s, Re_v, **kw):
        """Same Reynolds numbers for both components."""
        return cls(model=model, K=K, dt=dt, M1=M1, inv_Re_s1=1.0 / Re_s, inv_Re_s2=1.0 / Re_s,
                   inv_Re_v1=1.0 / Re_v, inv_Re_v2=1.0 / Re_v, **kw)

    def with_dt(self, dt):
        return replace(self, dt=dt)


@dataclass
class State:
    """Densities, momentum-like velocity ``u = sqrt(rho) v`` and the EQ variable."""

    grid: GridSpec
    rho1: np.ndarray
    rho2: np.ndarray
    u: np.ndarray
    v: np.ndarray
    q: np.ndarray
    t: float = 0.0
    n: int = 0

    @classmethod
    def initial(cls, grid, model, rho1, rho2, u=None, v=None, t=0.0):
        """Build a state from interior-or-ghosted densities; ``q = sqrt(h + A)``."""
        r1 = _as_cell(grid, rho1)
        r2 = _as_cell(grid, rho2)
        uu = grid.zeros("ew") if u is None else np.array(u, float)
        vv = grid.zeros("ns") if v is None else np.array(v, float)
        apply_dirichlet(grid, uu, vv)
        q = np.zeros_like(r1)
        q[:] = model.eq_vars(r1, r2)[0]
        return cls(grid, r1, r2, uu, vv, q, t=t, n=0)

    def copy(self):
        return State(self.grid, self.rho1.copy(), self.rho2.copy(), self.u.copy(),
                     self.v.copy(), self.q.copy(), self.t, self.n)

    @property
    def rho(self):
        return self.rho1 + self.rho2

    def apply_bc(self):
        g = self.grid
        for f in (self.rho1, self.rho2, self.q):
            apply_neumann(g, f)
        apply_dirichlet(g, self.u, self.v)
        return self

    def check_positivity(self, floor=1e-10):
        rho = self.rho[1:-1, 1:-1]
        bad = ~(rho > floor)
        if np.any(bad):
            j, i = np.argwhere(bad)[0]
            raise PositivityError(
                f"total density {rho[j, i]:.6g} <= {floor:g} at cell (i={i + 1}, j={j + 1}), "
                f"t={self.t:.6g}", where=(int(i) + 1, int(j) + 1), value=float(rho[j, i]))

    def physical_velocity(self):
        """Recover ``v = u / sqrt(rho)`` on the edges."""
        g = self.grid
        b = 1.0 / np.sqrt(self.rho)
        return self.u * avg(g, "x", b), self.v * avg(g, "y", b)


def _as_cell(grid, f):
    f = np.asarray(f, float)
    if f.shape == grid.shape("cell"):
        out = f.copy()
    elif f.shape == (grid.Ny, grid.Nx):
        out = grid.zeros("cell")
        out[1:-1, 1:-1] = f
    else:
        raise ValueError(f"cannot place array of shape {f.shape} on cells of {grid}")
    return apply_neumann(grid, out)


@dataclass(frozen=True)
class ExtrapolatedCoeffs:
    """Coefficient fields frozen at ``n + 1/2`` (cell fields carry Neumann ghosts)."""

    r1: np.ndarray
    r2: np.ndarray
    b: np.ndarray          # extrapolated 1/sqrt(rho)
    dq1: np.ndarray
    dq2: np.ndarray
    ubar: np.ndarray
    vbar: np.ndarray
    inv_Re_s: np.ndarray
    inv_Re_v: np.ndarray

    def means(self):
        """Interior means of the scalar coefficient fields (for preconditioning)."""
        sl = np.s_[1:-1, 1:-1]
        return {k: float(np.mean(getattr(self, k)[sl]))
                for k in ("r1", "r2", "b", "dq1", "dq2", "inv_Re_s", "inv_Re_v")}

    def mean_abs(self):
        sl = np.s_[1:-1, 1:-1]
        return {k: float(np.mean(np.abs(getattr(self, k)[sl])))
                for k in ("r1", "r2", "b", "dq1", "dq2", "inv_Re_s", "inv_Re_v")}

    @classmethod
    def constant(cls, grid, r1, r2, b, dq1, dq2, inv_Re_s, inv_Re_v):
        """Spatially uniform coefficients with zero advecting velocity."""
        c = lambda val: np.full(grid.shape("cell"), float(val))
        return cls(c(r1), c(r2), c(b), c(dq1), c(dq2), grid.zeros("ew"), grid.zeros("ns"),
                   c(inv_Re_s), c(inv_Re_v))


def extrapolate(state_n: State, state_nm1: State, params: ModelParams, order: int = 2):
    """Coefficients at ``n + 1/2``: ``(3 a^n - a^{n-1}) / 2`` (``order=2``) or ``a^n`` (``order=1``)."""
    g = state_n.grid
    if state_nm1.grid != g:
        raise ValueError("states live on different grids")
    for s in (state_n, state_nm1):
        s.check_positivity(params.rho_floor)
    model = params.model

    def parts(s):
        rho = s.rho
        _, dq1, dq2 = model.eq_vars(s.rho1, s.rho2)
        return {"r1": s.rho1, "r2": s.rho2, "b": 1.0 / np.sqrt(rho), "dq1": dq1, "dq2": dq2,
                "c1": s.rho1 / rho, "c2": s.rho2 / rho, "ubar": s.u, "vbar": s.v}

    pn = parts(state_n)
    if order == 1:
        ex = {k: np.array(val, float) for k, val in pn.items()}
    elif order == 2:
        pm = parts(state_nm1)
        ex = {k: 0.5 * (3.0 * pn[k] - pm[k]) for k in pn}
    else:
        raise ValueError("order must be 1 or 2")

    rho_bar = ex["r1"] + ex["r2"]
    bad = ~(rho_bar[1:-1, 1:-1] > params.rho_floor) | ~(ex["b"][1:-1, 1:-1] > 0)
    if np.any(bad):
        j, i = np.argwhere(bad)[0]
        raise PositivityError(f"extrapolated density not positive at cell (i={i + 1}, j={j + 1})",
                              where=(int(i) + 1, int(j) + 1), value=float(rho_bar[j + 1, i + 1]))
    for k in ("r1", "r2", "b", "dq1", "dq2", "c1", "c2"):
        apply_neumann(g, ex[k])
    apply_dirichlet(g, ex["ubar"], ex["vbar"])
    inv_s = ex["c1"] * params.inv_Re_s1 + ex["c2"] * params.inv_Re_s2
    inv_v = ex["c1"] * params.inv_Re_v1 + ex["c2"] * params.inv_Re_v2
    if not params.hydro:
        ex["ubar"][:] = 0.0
        ex["vbar"][:] = 0.0
    return ExtrapolatedCoeffs(ex["r1"], ex["r2"], ex["b"], ex["dq1"], ex["dq2"],
                              ex["ubar"], ex["vbar"], inv_s, inv_v)


def discrete_strain(grid: GridSpec, coeffs: ExtrapolatedCoeffs, u, v):
    """Strain components ``(D11, D22, D12)``; diagonal on cells, off-diagonal on vertices."""
    Bx = avg(grid, "x", coeffs.b)
    By = avg(grid, "y", coeffs.b)
    bu = Bx * u
    bv = By * v
    d11 = diff(grid, "x", bu)
    d22 = diff(grid, "y", bv)
    d12 = 0.5 * (diff(grid, "x", bv) + diff(grid, "y", bu))
    return d11, d22, d12


@dataclass
class _Layout:
    names: tuple
    shapes: dict
    slices: dict = field(default_factory=dict)
    size: int = 0

    def __post_init__(self):
        start = 0
        for nm in self.names:
            n = int(np.prod(self.shapes[nm]))
            self.slices[nm] = slice(start, start + n)
            start += n
        self.size = start


class StepSystem:
    """Matrix-free operator ``A`` and right-hand side ``G`` for one step.

    Immutable after construction.  ``apply`` maps a flat half-step vector to
    the flat residual-form left-hand side; ``G`` holds every step-``n`` term.
    """

    def __init__(self, grid: GridSpec, coeffs: ExtrapolatedCoeffs, params: ModelParams,
                 state_n: State | None = None):
        self.grid = grid
        self.coeffs = coeffs
        self.params = params
        self.hydro = params.hydro
        g = grid
        Nx, Ny = g.Nx, g.Ny
        names = ("mu1", "mu2", "u", "v", "q", "r1", "r2") if self.hydro else \
            ("mu1", "mu2", "q", "r1", "r2")
        shapes = {"mu1": (Ny, Nx), "mu2": (Ny, Nx), "q": (Ny, Nx), "r1": (Ny, Nx),
                  "r2": (Ny, Nx), "u": (Ny, Nx - 1), "v": (Ny - 1, Nx)}
        self.layout = _Layout(names, shapes)
        c = coeffs
        self.Bx = avg(g, "x", c.b)
        self.By = avg(g, "y", c.b)
        self.F1x = avg(g, "x", c.r1 * c.b)
        self.F1y = avg(g, "y", c.r1 * c.b)
        self.F2x = avg(g, "x", c.r2 * c.b)
        self.F2y = avg(g, "y", c.r2 * c.b)
        self.Rs_v = avg(g, "x", avg(g, "y", c.inv_Re_s))
        self.Vv = avg(g, "x", c.vbar)   # vertex
        self.Uu = avg(g, "y", c.ubar)   # vertex
        self.G = self._rhs(state_n) if state_n is not None else None

    # packing ---------------------------------------------------------------
    @property
    def size(self):
        return self.layout.size

    def unpack(self, X):
        """Flat vector -> dict of ghosted fields with boundary conditions applied."""
        g = self.grid
        L = self.layout
        out = {}
        for nm in ("mu1", "mu2", "q", "r1", "r2"):
            f = g.zeros("cell")
            f[1:-1, 1:-1] = X[L.slices[nm]].reshape(L.shapes[nm])
            out[nm] = apply_neumann(g, f)
        u = g.zeros("ew")
        v = g.zeros("ns")
        if self.hydro:
            u[1:-1, 1:-1] = X[L.slices["u"]].reshape(L.shapes["u"])
            v[1:-1, 1:-1] = X[L.slices["v"]].reshape(L.shapes["v"])
            apply_dirichlet(g, u, v)
        out["u"], out["v"] = u, v
        return out

    def pack(self, fields):
        L = self.layout
        X = np.empty(L.size)
        for nm in L.names:
            f = fields[nm]
            X[L.slices[nm]] = f[1:-1, 1:-1].ravel()
        return X

    def pack_state(self, s: State, mu1=None, mu2=None):
        g = self.grid
        z = g.zeros("cell")
        return self.pack({"mu1": z if mu1 is None else mu1, "mu2": z if mu2 is None else mu2,
                          "u": s.u, "v": s.v, "q": s.q, "r1": s.rho1, "r2": s.rho2})

    # operator --------------------------------------------------------------
    def convection(self, u, v):
        """Skew-symmetric convection of ``(u, v)`` by the frozen velocity (edge fields)."""
        g, c = self.grid, self.coeffs
        ax = lambda f: avg(g, "x", f)
        ay = lambda f: avg(g, "y", f)
        dx = lambda f: diff(g, "x", f)
        dy = lambda f: diff(g, "y", f)
        b = c.b
        cu = 0.5 * (c.ubar * dx(b * ax(u)) + ax(b * dx(c.ubar * u))) \
            + 0.5 * (ay(self.Vv * dy(self.Bx * u)) + self.Bx * dy(ay(u) * self.Vv))
        cv = 0.5 * (ax(self.Uu * dx(self.By * v)) + self.By * dx(self.Uu * ax(v))) \
            + 0.5 * (c.vbar * dy(b * ay(v)) + ay(b * dy(c.vbar * v)))
        return cu, cv

    def viscous(self, u, v):
        """Viscous force ``(div sigma)`` projected with ``A(1/sqrt(rho))`` (edge fields)."""
        g, c = self.grid, self.coeffs
        dx = lambda f: diff(g, "x", f)
        dy = lambda f: diff(g, "y", f)
        bu = self.Bx * u
        bv = self.By * v
        tr = c.inv_Re_v * (dx(bu) + dy(bv))
        shear_v = self.Rs_v * (dy(bu) + dx(bv))
        fu = self.Bx * (2.0 * dx(c.inv_Re_s * dx(bu)) + dy(shear_v) + dx(tr))
        fv = self.By * (2.0 * dy(c.inv_Re_s * dy(bv)) + dx(shear_v) + dy(tr))
        return fu, fv

    def apply_fields(self, f):
        """Operator on unpacked fields; returns a dict of row fields (ghosts meaningless)."""
        g, c, p = self.grid, self.coeffs, self.params
        dt = p.dt
        K = p.K
        dx = lambda w: diff(g, "x", w)
        dy = lambda w: diff(g, "y", w)
        mu1, mu2, q, r1, r2, u, v = (f[k] for k in ("mu1", "mu2", "q", "r1", "r2", "u", "v"))
        lap_dmu = laplacian(g, mu1 - mu2)
        rows = {}
        rows["mu1"] = 2.0 / dt * r1 - p.M1 * lap_dmu
        rows["mu2"] = 2.0 / dt * r2 + p.M1 * lap_dmu
        if self.hydro:
            rows["mu1"] = rows["mu1"] + dx(self.F1x * u) + dy(self.F1y * v)
            rows["mu2"] = rows["mu2"] + dx(self.F2x * u) + dy(self.F2y * v)
            cu, cv = self.convection(u, v)
            fu, fv = self.viscous(u, v)
            rows["u"] = (2.0 / dt * u + cu - fu
                         + self.F1x * dx(mu1) + self.F2x * dx(mu2))
            rows["v"] = (2.0 / dt * v + cv - fv
                         + self.F1y * dy(mu1) + self.F2y * dy(mu2))
        rows["q"] = 4.0 / dt * (q - c.dq1 * r1 - c.dq2 * r2)
        lr1 = laplacian(g, r1)
        lr2 = laplacian(g, r2)
        rows["r1"] = 2.0 / dt * (-mu1 + 2.0 * c.dq1 * q - (K.k11 * lr1 + K.k12 * lr2))
        rows["r2"] = 2.0 / dt * (-mu2 + 2.0 * c.dq2 * q - (K.k12 * lr1 + K.k22 * lr2))
        return rows

    def apply(self, X):
        X = np.asarray(X, float)
        if X.shape != (self.size,):
            raise ValueError(f"expected vector of length {self.size}, got {X.shape}")
        return self.pack(self.apply_fields(self.unpack(X)))

    __call__ = apply

    def _rhs(self, s: State):
        g, c, dt = self.grid, self.coeffs, self.params.dt
        z = g.zeros("cell")
        G = {"mu1": 2.0 / dt * s.rho1, "mu2": 2.0 / dt * s.rho2,
             "u": 2.0 / dt * s.u, "v": 2.0 / dt * s.v,
             "q": 4.0 / dt * (s.q - c.dq1 * s.rho1 - c.dq2 * s.rho2),
             "r1": z, "r2": z}
        return self.pack(G)

    def unpack_rhs(self):
        """Transport-row right-hand sides as cell fields."""
        L = self.layout
        out = {}
        for nm in ("mu1", "mu2"):
            f = self.grid.zeros("cell")
            f[1:-1, 1:-1] = self.G[L.slices[nm]].reshape(L.shapes[nm])
            out[nm] = f
        return out

    def energy_pairing(self, X, Y):
        """Grid inner product of two flat vectors (block weights ``hx * hy``)."""
        return self.grid.cell_area * float(np.dot(X, Y))


def assemble_system(state_n: State, coeffs: ExtrapolatedCoeffs, params: ModelParams) -> StepSystem:
    return StepSystem(state_n.grid, coeffs, params, state_n)


def mass_consistent_densities(system: StepSystem, X: np.ndarray) -> np.ndarray:
    """Shift the half-step densities by constants so each transport row balances in sum.

    Transport and diffusion fluxes telescope, so the summed transport rows
    pin the discrete masses; a Krylov residual with nonzero mean would
    otherwise leak mass at the solver tolerance every step.  A constant shift
    is invisible to the Laplacians in the chemical-potential rows, so the
    correction barely touches the remaining residual.
    """
    f = system.unpack(X)
    p = system.params
    rows = system.apply_fields(f)
    G = system.unpack_rhs()
    Y = X.copy()
    L = system.layout
    for nm, rn in (("mu1", "r1"), ("mu2", "r2")):
        defect = float(np.mean((G[nm] - rows[nm])[1:-1, 1:-1]))
        Y[L.slices[rn]] += 0.5 * p.dt * defect
    return Y


def recover_state(system: StepSystem, X: np.ndarray, state_n: State) -> tuple[State, dict]:
    """Full-step state ``2 X - state_n`` plus the half-step fields."""
    f = system.unpack(X)
    g = system.grid
    new = State(g, 2.0 * f["r1"] - state_n.rho1, 2.0 * f["r2"] - state_n.rho2,
                2.0 * f["u"] - state_n.u, 2.0 * f["v"] - state_n.v,
                2.0 * f["q"] - state_n.q, state_n.t + system.params.dt, state_n.n + 1)
    new.apply_bc()
    if not system.hydro:
        new.u[:] = 0.0
        new.v[:] = 0.0
    return new, f


def step(state_n: State, state_nm1: State, params: ModelParams, solver, order: int = 2, x0=None):
    """Advance one time step.

    ``solver`` is any object with ``solve(system, x0) -> (X, report)``.
    Returns ``(state_{n+1}, DiagnosticsRecord, X)`` where ``X`` is the
    half-step solution, useful as the next warm start.
    """
    coeffs = extrapolate(state_n, state_nm1, params, order=order)
    system = assemble_system(state_n, coeffs, params)
    X, report = solver.solve(system, x0)
    X = mass_consistent_densities(system, X)
    gnorm = float(np.linalg.norm(system.G))
    rnorm = float(np.linalg.norm(system.G - system.apply(X)))
    report.abs_residual = rnorm
    report.residual = rnorm / gnorm if gnorm > 0 else rnorm
    new, half = recover_state(system, X, state_n)
    new.check_positivity(params.rho_floor)
    diss = dissipation_terms(system, half)
    e_old = discrete_energy(state_n, params.model, params.K)
    e_new = discrete_energy(new, params.model, params.K)
    m1, m2 = component_masses(new)
    kinetic = 0.5 * (inner_product(new.grid, "ew", new.u, new.u)
                     + inner_product(new.grid, "ns", new.v, new.v))
    rec = DiagnosticsRecord(
        step=new.n, time=new.t, energy=e_new, mass1=m1, mass2=m2, kinetic=kinetic,
        shear=diss["shear"], volumetric=diss["volumetric"], mixing=diss["mixing"],
        krylov_iters=report.iterations, residual=report.residual,
        energy_residual=e_new - e_old + params.dt * sum(diss.values()), report=report)
    return new, rec, X


def bootstrap(state_0: State, params: ModelParams, solver, x0=None):
    """First step, using ``state_0`` for both time levels of the extrapolation."""
    return step(state_0, state_0, params, solver, order=2, x0=x0)
