"""Matrix-free Krylov solution of the step system.

The operator is nonsymmetric (convection, off-diagonal couplings), so a
restarted GMRES with right preconditioning is used: with right
preconditioning the minimized quantity is the true residual, which keeps the
convergence contract ``||A X - G|| <= max(rtol ||G||, atol)`` honest.

The preconditioner is the same step operator with every frozen coefficient
replaced by its domain mean and the advecting velocity set to zero.  Its
sparse matrix is recovered from the matrix-free operator by coloured probing
(the stencil reaches at most two cells, so a period-5 colouring separates all
columns that share a row) and factorized once with SuperLU.
"""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .scheme import ExtrapolatedCoeffs, StepSystem

__all__ = [
    "SolverConfig",
    "SolveReport",
    "NonConvergenceError",
    "Preconditioner",
    "assemble_sparse",
    "build_preconditioner",
    "gmres",
    "solve",
    "LinearSolver",
]


@dataclass(frozen=True)
class SolverConfig:
    rtol: float = 1e-10
    atol: float = 1e-13
    maxiter: int = 200
    restart: int = 30
    preconditioner: str = "frozen-coefficient"
    rebuild_drift: float = 0.10

    def __post_init__(self):
        if not (self.rtol > 0 and self.atol > 0):
            raise ValueError("tolerances must be positive")
        if self.maxiter < 1 or self.restart < 1:
            raise ValueError("maxiter and restart must be at least 1")
        if self.preconditioner not in ("none", "frozen-coefficient"):
            raise ValueError(f"unknown preconditioner {self.preconditioner!r}")


@dataclass
class SolveReport:
    iterations: int
    residual: float            # ||G - A X|| / ||G|| (absolute when G = 0)
    converged: bool
    abs_residual: float = 0.0
    precond_build_time: float = 0.0
    solve_time: float = 0.0
    rebuilt: bool = False


class NonConvergenceError(RuntimeError):
    def __init__(self, report: SolveReport):
        super().__init__(f"Krylov solver did not converge in {report.iterations} iterations "
                         f"(relative residual {report.residual:.3e})")
        self.report = report


# sparse probing ----------------------------------------------------------------

def _positions(system: StepSystem):
    """Cell-index coordinates (x, y) of every unknown."""
    L = system.layout
    xs, ys = [], []
    for nm in L.names:
        ny, nx = L.shapes[nm]
        ox = 1.5 if nm == "u" else 1.0
        oy = 1.5 if nm == "v" else 1.0
        X, Y = np.meshgrid(np.arange(nx) + ox, np.arange(ny) + oy)
        xs.append(X.ravel())
        ys.append(Y.ravel())
    return np.concatenate(xs), np.concatenate(ys)


def assemble_sparse(system: StepSystem, period: int = 5) -> sp.csc_matrix:
    """Sparse matrix of ``system.apply`` via coloured probing.

    Exact provided no row couples two unknowns of one block that are
    ``period`` or more cells apart, which holds for this scheme's stencils
    whenever ``period >= 5``.
    """
    L = system.layout
    px, py = _positions(system)
    fx = np.floor(px).astype(int)
    fy = np.floor(py).astype(int)
    rows_all, cols_all, vals_all = [], [], []
    for b, nm in enumerate(L.names):
        sl = L.slices[nm]
        ny, nx = L.shapes[nm]
        lookup = np.arange(sl.start, sl.stop).reshape(ny, nx)
        bx, by = fx[sl], fy[sl]
        off = 0.5 if nm == "u" else 0.0
        offy = 0.5 if nm == "v" else 0.0
        for a in range(period):
            for c in range(period):
                mask = ((bx % period) == a) & ((by % period) == c)
                if not np.any(mask):
                    continue
                e = np.zeros(L.size)
                e[sl][mask] = 1.0
                y = system.apply(e)
                nz = np.nonzero(y)[0]
                if nz.size == 0:
                    continue
                cx = a + period * np.round((px[nz] - off - a) / period).astype(int)
                cy = c + period * np.round((py[nz] - offy - c) / period).astype(int)
                ii = cx - 1
                jj = cy - 1
                ok = (ii >= 0) & (ii < nx) & (jj >= 0) & (jj < ny)
                rows_all.append(nz[ok])
                cols_all.append(lookup[jj[ok], ii[ok]])
                vals_all.append(y[nz[ok]])
    rows = np.concatenate(rows_all)
    cols = np.concatenate(cols_all)
    vals = np.concatenate(vals_all)
    return sp.csc_matrix((vals, (rows, cols)), shape=(L.size, L.size))


# preconditioner ----------------------------------------------------------------

def _operator_key(params):
    # the energy model only reaches the operator through the coefficients
    return params.K, params.dt, params.M1


class Preconditioner:
    """Direct solve with the constant-coefficient surrogate of a step operator."""

    def __init__(self, system: StepSystem):
        t0 = time.perf_counter()
        self.means = system.coeffs.means()
        self.scale = system.coeffs.mean_abs()
        self.params = system.params
        self.grid = system.grid
        self.hydro = system.hydro
        m = self.means
        coeffs = ExtrapolatedCoeffs.constant(system.grid, m["r1"], m["r2"], m["b"], m["dq1"],
                                             m["dq2"], m["inv_Re_s"], m["inv_Re_v"])
        self.surrogate = StepSystem(system.grid, coeffs, system.params)
        self.matrix = assemble_sparse(self.surrogate)
        try:
            self.lu = splu(self.matrix)
        except RuntimeError as exc:
            raise ValueError(f"preconditioner surrogate is singular ({exc}); "
                             "check that the entropy matrix is positive definite") from None
        self.build_time = time.perf_counter() - t0

    def __call__(self, r):
        return self.lu.solve(np.asarray(r, float))

    def compatible(self, system: StepSystem, drift: float) -> bool:
        """True while the system's coefficient means stay within ``drift`` of the build."""
        if (system.grid != self.grid or _operator_key(system.params) != _operator_key(self.params)
                or system.hydro != self.hydro):
            return False
        new = system.coeffs.means()
        cur = system.coeffs.mean_abs()
        for k, old in self.means.items():
            denom = max(abs(old), cur[k], self.scale[k], 1e-300)
            if abs(new[k] - old) > drift * denom:
                return False
        return True


def build_preconditioner(system: StepSystem) -> Preconditioner:
    return Preconditioner(system)


# GMRES -------------------------------------------------------------------------

def gmres(matvec, b, x0=None, M=None, rtol=1e-10, atol=1e-13, restart=30, maxiter=200):
    """Right-preconditioned restarted GMRES with modified Gram-Schmidt.

    Returns ``(x, iterations, residual_norm, converged)``; ``residual_norm`` is
    the recomputed ``||b - A x||``.
    """
    b = np.asarray(b, float)
    n = b.size
    x = np.zeros(n) if x0 is None else np.array(x0, float)
    prec = (lambda r: r) if M is None else M
    bnorm = float(np.linalg.norm(b))
    target = max(rtol * bnorm, atol)
    r = b - matvec(x)
    rnorm = float(np.linalg.norm(r))
    its = 0
    while rnorm > target and its < maxiter:
        m = min(restart, maxiter - its)
        V = np.zeros((m + 1, n))
        Z = np.zeros((m, n))
        H = np.zeros((m + 1, m))
        cs = np.zeros(m)
        sn = np.zeros(m)
        s = np.zeros(m + 1)
        s[0] = rnorm
        V[0] = r / rnorm
        k_used = 0
        for k in range(m):
            Z[k] = prec(V[k])
            w = matvec(Z[k])
            for i in range(k + 1):
                H[i, k] = np.dot(w, V[i])
                w -= H[i, k] * V[i]
            H[k + 1, k] = np.linalg.norm(w)
            if H[k + 1, k] > 0:
                V[k + 1] = w / H[k + 1, k]
            for i in range(k):
                t = cs[i] * H[i, k] + sn[i] * H[i + 1, k]
                H[i + 1, k] = -sn[i] * H[i, k] + cs[i] * H[i + 1, k]
                H[i, k] = t
            denom = np.hypot(H[k, k], H[k + 1, k])
            if denom == 0:
                cs[k], sn[k] = 1.0, 0.0
            else:
                cs[k], sn[k] = H[k, k] / denom, H[k + 1, k] / denom
            H[k, k] = denom
            H[k + 1, k] = 0.0
            s[k + 1] = -sn[k] * s[k]
            s[k] = cs[k] * s[k]
            its += 1
            k_used = k + 1
            if abs(s[k + 1]) <= target or denom == 0:
                break
        y = np.zeros(k_used)
        for i in range(k_used - 1, -1, -1):
            y[i] = (s[i] - H[i, i + 1:k_used] @ y[i + 1:k_used]) / H[i, i]
        x = x + y @ Z[:k_used]
        r = b - matvec(x)
        rnorm = float(np.linalg.norm(r))
    return x, its, rnorm, rnorm <= target


def solve(system: StepSystem, preconditioner=None, x0=None, config: SolverConfig = SolverConfig()):
    """Solve ``A X = G``; raises :class:`NonConvergenceError` on failure."""
    if system.G is None:
        raise ValueError("system has no right-hand side")
    G = system.G.copy()
    t0 = time.perf_counter()
    if x0 is not None and np.shape(x0) != G.shape:
        x0 = None
    X, its, rnorm, ok = gmres(system.apply, G, x0=x0, M=preconditioner, rtol=config.rtol,
                              atol=config.atol, restart=config.restart, maxiter=config.maxiter)
    gnorm = float(np.linalg.norm(G))
    report = SolveReport(iterations=its, residual=rnorm / gnorm if gnorm > 0 else rnorm,
                         converged=ok, abs_residual=rnorm,
                         solve_time=time.perf_counter() - t0)
    if not ok:
        raise NonConvergenceError(report)
    return X, report


class LinearSolver:
    """Stateful wrapper: caches the preconditioner and rebuilds on coefficient drift."""

    def __init__(self, config: SolverConfig = SolverConfig()):
        self.config = config
        self._prec: Preconditioner | None = None
        self.builds = 0

    def preconditioner_for(self, system: StepSystem):
        if self.config.preconditioner == "none":
            return None, False
        if self._prec is None or not self._prec.compatible(system, self.config.rebuild_drift):
            self._prec = build_preconditioner(system)
            self.builds += 1
            return self._prec, True
        return self._prec, False

    def solve(self, system: StepSystem, x0=None):
        prec, rebuilt = self.preconditioner_for(system)
        X, report = solve(system, prec, x0, self.config)
        report.rebuilt = rebuilt
        report.precond_build_time = prec.build_time if (prec is not None and rebuilt) else 0.0
        return X, report
