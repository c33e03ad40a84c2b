"""Staggered (MAC) grid function spaces and the discrete operators acting on them.

All fields are dense ``numpy`` arrays stored row-major, ``field[j, i]`` with ``j``
the y index (outer) and ``i`` the x index (inner).  The location of a field is
encoded entirely by its shape:

==========  =================  ============================================
location    shape              index meaning
==========  =================  ============================================
cell        (Ny + 2, Nx + 2)   cell centres, one ghost ring
ew          (Ny + 2, Nx + 1)   east-west edges, slot ``i`` holds ``i + 1/2``
ns          (Ny + 1, Nx + 2)   north-south edges, slot ``j`` holds ``j + 1/2``
vertex      (Ny + 1, Nx + 1)   cell corners
==========  =================  ============================================

Averages and differences move a field to the dual location along one axis.
Moving from a centred index to an edge index (``A``/``D``) covers every edge;
moving from edges to centres (``a``/``d``) only fills the non-ghost centres and
leaves the ghost slots at zero, so boundary conditions must be re-applied by
the caller when ghosts are needed downstream.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "GridSpec",
    "avg",
    "diff",
    "laplacian",
    "apply_neumann",
    "apply_dirichlet",
    "zero_vertex_boundary",
    "inner_product",
    "norm",
    "velocity_norm",
]

_AXES = {"x": 1, "y": 0}


@dataclass(frozen=True)
class GridSpec:
    """Uniform rectangular grid on ``[x0, x0 + Lx] x [y0, y0 + Ly]``."""

    Lx: float
    Ly: float
    Nx: int
    Ny: int
    x0: float = 0.0
    y0: float = 0.0
    _shapes: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if int(self.Nx) != self.Nx or int(self.Ny) != self.Ny:
            raise ValueError("cell counts must be integers")
        if self.Nx < 2 or self.Ny < 2:
            raise ValueError(f"need at least 2 cells per axis, got {self.Nx}x{self.Ny}")
        if not (self.Lx > 0 and self.Ly > 0):
            raise ValueError("domain lengths must be positive")
        Nx, Ny = self.Nx, self.Ny
        shapes = {
            (Ny + 2, Nx + 2): "cell",
            (Ny + 2, Nx + 1): "ew",
            (Ny + 1, Nx + 2): "ns",
            (Ny + 1, Nx + 1): "vertex",
        }
        object.__setattr__(self, "_shapes", shapes)

    @property
    def hx(self) -> float:
        return self.Lx / self.Nx

    @property
    def hy(self) -> float:
        return self.Ly / self.Ny

    @property
    def cell_area(self) -> float:
        return self.hx * self.hy

    def shape(self, location: str) -> tuple[int, int]:
        for shp, loc in self._shapes.items():
            if loc == location:
                return shp
        raise ValueError(f"unknown location {location!r}")

    def zeros(self, location: str) -> np.ndarray:
        return np.zeros(self.shape(location))

    def locate(self, f: np.ndarray) -> str:
        """Return the staggered location of ``f`` inferred from its shape."""
        try:
            return self._shapes[np.shape(f)]
        except KeyError:
            raise ValueError(
                f"array of shape {np.shape(f)} does not match any location on a "
                f"{self.Nx}x{self.Ny} grid"
            ) from None

    # coordinates -----------------------------------------------------------
    def x_centers(self) -> np.ndarray:
        """x of cell centres including the two ghost columns."""
        return self.x0 + (np.arange(self.Nx + 2) - 0.5) * self.hx

    def y_centers(self) -> np.ndarray:
        return self.y0 + (np.arange(self.Ny + 2) - 0.5) * self.hy

    def x_edges(self) -> np.ndarray:
        return self.x0 + np.arange(self.Nx + 1) * self.hx

    def y_edges(self) -> np.ndarray:
        return self.y0 + np.arange(self.Ny + 1) * self.hy

    def mesh(self, location: str) -> tuple[np.ndarray, np.ndarray]:
        """Coordinate arrays ``(X, Y)`` with the shape of ``location``."""
        xs = {"cell": self.x_centers, "ns": self.x_centers,
              "ew": self.x_edges, "vertex": self.x_edges}[location]()
        ys = {"cell": self.y_centers, "ew": self.y_centers,
              "ns": self.y_edges, "vertex": self.y_edges}[location]()
        return np.meshgrid(xs, ys)

    def interior(self, f: np.ndarray) -> np.ndarray:
        """View of the non-ghost entries of a field (boundary edges included)."""
        loc = self.locate(f)
        if loc == "cell":
            return f[1:-1, 1:-1]
        if loc == "ew":
            return f[1:-1, :]
        if loc == "ns":
            return f[:, 1:-1]
        return f


def _check(grid: GridSpec, f: np.ndarray) -> str:
    return grid.locate(f)


def _to_dual(grid: GridSpec, axis: str, f: np.ndarray, op) -> np.ndarray:
    _check(grid, f)
    ax = _AXES[axis]
    n_cells = grid.Nx if axis == "x" else grid.Ny
    n = f.shape[ax]
    lo = [slice(None)] * 2
    hi = [slice(None)] * 2
    lo[ax] = slice(None, -1)
    hi[ax] = slice(1, None)
    lo, hi = tuple(lo), tuple(hi)
    if n == n_cells + 2:
        # centre -> edge, every edge covered
        return op(f[hi], f[lo])
    # edge -> centre, ghost slots stay zero
    shp = list(f.shape)
    shp[ax] = n + 1
    out = np.zeros(shp)
    inner = [slice(None)] * 2
    inner[ax] = slice(1, -1)
    out[tuple(inner)] = op(f[hi], f[lo])
    return out


def avg(grid: GridSpec, axis: str, f: np.ndarray) -> np.ndarray:
    """Two-point average along ``axis`` onto the dual location.

    Covers both the centre-to-edge (``A_x``, ``A_y``) and edge-to-centre
    (``a_x``, ``a_y``) averages; the direction follows from the input location.
    """
    return _to_dual(grid, axis, f, lambda p, m: 0.5 * (p + m))


def diff(grid: GridSpec, axis: str, f: np.ndarray) -> np.ndarray:
    """Two-point difference quotient along ``axis`` onto the dual location."""
    h = grid.hx if axis == "x" else grid.hy
    inv = 1.0 / h
    return _to_dual(grid, axis, f, lambda p, m: (p - m) * inv)


def laplacian(grid: GridSpec, f: np.ndarray) -> np.ndarray:
    """Five-point Laplacian of a cell or edge field.

    The result is meaningful on the non-ghost centres (cell), on the interior
    east-west edges ``i = 1..Nx-1`` (ew) and on the interior north-south edges
    ``j = 1..Ny-1`` (ns).  Boundary conditions must already be applied.
    """
    loc = _check(grid, f)
    if loc == "cell":
        return diff(grid, "x", diff(grid, "x", f)) + diff(grid, "y", diff(grid, "y", f))
    if loc == "ew":
        out = diff(grid, "x", diff(grid, "x", f)) + diff(grid, "y", diff(grid, "y", f))
        out[:, 0] = 0.0
        out[:, -1] = 0.0
        return out
    if loc == "ns":
        out = diff(grid, "x", diff(grid, "x", f)) + diff(grid, "y", diff(grid, "y", f))
        out[0, :] = 0.0
        out[-1, :] = 0.0
        return out
    raise ValueError("laplacian is defined for cell and edge fields only")


def apply_neumann(grid: GridSpec, f: np.ndarray) -> np.ndarray:
    """Fill the ghost ring of a cell field by mirroring (in place; returns ``f``)."""
    if _check(grid, f) != "cell":
        raise ValueError("Neumann ghosts apply to cell fields")
    f[1:-1, 0] = f[1:-1, 1]
    f[1:-1, -1] = f[1:-1, -2]
    f[0, :] = f[1, :]
    f[-1, :] = f[-2, :]
    return f


def apply_dirichlet(grid: GridSpec, u: np.ndarray, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Impose homogeneous Dirichlet data on an edge velocity pair (in place).

    Normal components on the boundary are zeroed and the tangential ghost
    values are set to minus their interior neighbour, so that the edge-to-vertex
    averages vanish on the boundary.
    """
    if _check(grid, u) != "ew" or _check(grid, v) != "ns":
        raise ValueError("expected (ew, ns) fields")
    u[:, 0] = 0.0
    u[:, -1] = 0.0
    u[0, :] = -u[1, :]
    u[-1, :] = -u[-2, :]
    v[0, :] = 0.0
    v[-1, :] = 0.0
    v[:, 0] = -v[:, 1]
    v[:, -1] = -v[:, -2]
    return u, v


def zero_vertex_boundary(grid: GridSpec, f: np.ndarray) -> np.ndarray:
    """Zero the boundary ring of a vertex field (in place)."""
    if _check(grid, f) != "vertex":
        raise ValueError("expected a vertex field")
    f[0, :] = f[-1, :] = 0.0
    f[:, 0] = f[:, -1] = 0.0
    return f


def _trapezoid_weights(n_edges: int) -> np.ndarray:
    w = np.ones(n_edges)
    w[0] = w[-1] = 0.5
    return w


def inner_product(grid: GridSpec, kind: str, a: np.ndarray, b: np.ndarray) -> float:
    """Discrete integral of ``a * b``.

    ``kind`` is one of ``cell``, ``ew``, ``ns``, ``vc`` (vertex) or ``grad``.
    Edge and vertex products carry half weights on the boundary, which is what
    composing the edge-to-centre averages with the cell sum produces.  For
    ``grad`` both arguments are cell fields with ghosts applied and the result
    is ``[D_x a, D_x b]_ew + [D_y a, D_y b]_ns``.
    """
    expected = {"cell": "cell", "ew": "ew", "ns": "ns", "vc": "vertex", "grad": "cell"}
    if kind not in expected:
        raise ValueError(f"unknown inner product {kind!r}")
    for f in (a, b):
        if _check(grid, f) != expected[kind]:
            raise ValueError(f"{kind} inner product needs {expected[kind]} fields, "
                             f"got {grid.locate(f)}")
    dA = grid.cell_area
    if kind == "cell":
        return dA * float(np.sum(a[1:-1, 1:-1] * b[1:-1, 1:-1]))
    if kind == "ew":
        w = _trapezoid_weights(grid.Nx + 1)
        return dA * float(np.sum(a[1:-1, :] * b[1:-1, :] * w))
    if kind == "ns":
        w = _trapezoid_weights(grid.Ny + 1)[:, None]
        return dA * float(np.sum(a[:, 1:-1] * b[:, 1:-1] * w))
    if kind == "vc":
        w = np.outer(_trapezoid_weights(grid.Ny + 1), _trapezoid_weights(grid.Nx + 1))
        return dA * float(np.sum(a * b * w))
    return (inner_product(grid, "ew", diff(grid, "x", a), diff(grid, "x", b))
            + inner_product(grid, "ns", diff(grid, "y", a), diff(grid, "y", b)))


def norm(grid: GridSpec, f: np.ndarray) -> float:
    """Discrete L2 norm matching the location of ``f``."""
    kind = {"cell": "cell", "ew": "ew", "ns": "ns", "vertex": "vc"}[grid.locate(f)]
    return float(np.sqrt(inner_product(grid, kind, f, f)))


def velocity_norm(grid: GridSpec, u: np.ndarray, v: np.ndarray) -> float:
    return float(np.sqrt(inner_product(grid, "ew", u, u) + inner_product(grid, "ns", v, v)))
