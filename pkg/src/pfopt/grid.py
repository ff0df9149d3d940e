"""Uniform space-time meshes for 1D intervals and 2D rectangles.

Fields are plain ``numpy`` arrays laid out vertex-centered over the axes
(x1,) in 1D and (x1, x2) row-major in 2D; the boundary points belong to the
mesh and carry imposed values, never solved ones.  The grid owns the
boundary enumeration used by controls, fluxes and file output: in 1D the
two slots are (left, right); in 2D the slots run bottom edge, top edge,
left edge, right edge, each by increasing along-axis index, with the four
corner points excluded.  That ordering is a frozen contract.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "GridError",
    "GridSpec",
    "Grid",
    "make_grid",
    "laplacian",
    "stability_bound",
]


class GridError(ValueError):
    """Raised when a grid specification violates an invariant."""


@dataclass(frozen=True)
class GridSpec:
    """Resolution and extent of the space-time mesh.

    ``lengths`` and ``counts`` have one entry per spatial axis (1 or 2).
    Spacings follow the vertex-centered convention dt = T/(n_t - 1),
    dx_i = L_i/(n_i - 1).
    """

    dim: int
    lengths: tuple[float, ...]
    counts: tuple[int, ...]
    n_t: int
    t_final: float

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise GridError(f"dim must be 1 or 2, got {self.dim}")
        if len(self.lengths) != self.dim:
            raise GridError(f"lengths must have {self.dim} entries, got {self.lengths!r}")
        if len(self.counts) != self.dim:
            raise GridError(f"counts must have {self.dim} entries, got {self.counts!r}")
        for ax, n in enumerate(self.counts):
            if int(n) != n or n < 3:
                raise GridError(f"counts[{ax}] must be an integer >= 3, got {n!r}")
        for ax, length in enumerate(self.lengths):
            if not length > 0:
                raise GridError(f"lengths[{ax}] must be positive, got {length!r}")
        if int(self.n_t) != self.n_t or self.n_t < 2:
            raise GridError(f"n_t must be an integer >= 2, got {self.n_t!r}")
        if not self.t_final > 0:
            raise GridError(f"t_final must be positive, got {self.t_final!r}")


_EDGE_ORDER = ("bottom", "top", "left", "right")


class Grid:
    """Built mesh: spacings plus precomputed boundary enumeration.

    Construct through :func:`make_grid`.  Instances are immutable in use
    and safe to share across threads.
    """

    def __init__(self, spec: GridSpec):
        self.spec = spec
        self.dim = spec.dim
        self.nx = tuple(int(n) for n in spec.counts)
        self.lengths = tuple(float(L) for L in spec.lengths)
        self.nt = int(spec.n_t)
        self.t_final = float(spec.t_final)
        self.dt = self.t_final / (self.nt - 1)
        self.dx = tuple(L / (n - 1) for L, n in zip(self.lengths, self.nx))
        self.shape = self.nx if self.dim == 2 else (self.nx[0],)
        self.n_points = int(np.prod(self.shape))
        self._build_boundary()

    # -- boundary enumeration -------------------------------------------------

    def _build_boundary(self):
        if self.dim == 1:
            n = self.nx[0]
            dx = self.dx[0]
            self._b_index = (np.array([0, n - 1]),)
            self._b_neighbor = (np.array([1, n - 2]),)
            self.boundary_normal_dx = np.array([dx, dx])
            self.boundary_weights = np.array([1.0, 1.0])
            self.boundary_edges = ("left", "right")
        else:
            n1, n2 = self.nx
            dx1, dx2 = self.dx
            rows, cols, nbr_rows, nbr_cols = [], [], [], []
            normal, weight, edges, along = [], [], [], []
            # bottom (x2 = 0) and top (x2 = L2): along-index is i on axis x1
            for j, name in ((0, "bottom"), (n2 - 1, "top")):
                jn = 1 if j == 0 else n2 - 2
                for i in range(1, n1 - 1):
                    rows.append(i); cols.append(j)
                    nbr_rows.append(i); nbr_cols.append(jn)
                    normal.append(dx2); weight.append(dx1)
                    edges.append(name); along.append(i)
            # left (x1 = 0) and right (x1 = L1): along-index is j on axis x2
            for i, name in ((0, "left"), (n1 - 1, "right")):
                inb = 1 if i == 0 else n1 - 2
                for j in range(1, n2 - 1):
                    rows.append(i); cols.append(j)
                    nbr_rows.append(inb); nbr_cols.append(j)
                    normal.append(dx1); weight.append(dx2)
                    edges.append(name); along.append(j)
            self._b_index = (np.array(rows), np.array(cols))
            self._b_neighbor = (np.array(nbr_rows), np.array(nbr_cols))
            self.boundary_normal_dx = np.array(normal)
            self.boundary_weights = np.array(weight)
            self.boundary_edges = tuple(edges)
            self.boundary_along = np.array(along)
            # corner -> the two adjacent boundary slots whose average fills it
            self._corner_index = (
                np.array([0, 0, n1 - 1, n1 - 1]),
                np.array([0, n2 - 1, 0, n2 - 1]),
            )
            slot = {(r, c): k for k, (r, c) in enumerate(zip(rows, cols))}
            self._corner_sources = np.array(
                [
                    [slot[(1, 0)], slot[(0, 1)]],
                    [slot[(1, n2 - 1)], slot[(0, n2 - 2)]],
                    [slot[(n1 - 2, 0)], slot[(n1 - 1, 1)]],
                    [slot[(n1 - 2, n2 - 1)], slot[(n1 - 1, n2 - 2)]],
                ]
            )
        if self.dim == 1:
            self.boundary_along = np.array([0, self.nx[0] - 1])
        self.boundary_count = len(self.boundary_normal_dx)

    # -- coordinates -----------------------------------------------------------

    def axis(self, ax: int) -> np.ndarray:
        """Coordinates of mesh points along axis ``ax``."""
        return np.arange(self.nx[ax]) * self.dx[ax]

    def mesh(self) -> tuple[np.ndarray, ...]:
        """Coordinate arrays shaped like a field (one per axis)."""
        axes = [self.axis(a) for a in range(self.dim)]
        if self.dim == 1:
            return (axes[0],)
        return tuple(np.meshgrid(*axes, indexing="ij"))

    def times(self) -> np.ndarray:
        return np.arange(self.nt) * self.dt

    def boundary_coords(self) -> np.ndarray:
        """(boundary_count, dim) physical coordinates of boundary slots."""
        if self.dim == 1:
            return (self._b_index[0] * self.dx[0])[:, None]
        return np.stack(
            [self._b_index[0] * self.dx[0], self._b_index[1] * self.dx[1]], axis=1
        )

    # -- field access ----------------------------------------------------------

    def zeros(self) -> np.ndarray:
        return np.zeros(self.shape)

    def full(self, value: float) -> np.ndarray:
        return np.full(self.shape, float(value))

    def gather_boundary(self, f: np.ndarray) -> np.ndarray:
        """Values of ``f`` at the boundary slots, in enumeration order."""
        return f[self._b_index]

    def gather_boundary_neighbors(self, f: np.ndarray) -> np.ndarray:
        """Values of ``f`` at the interior neighbor of each boundary slot."""
        return f[self._b_neighbor]

    def scatter_boundary(self, f: np.ndarray, values, fill_corners: bool = True) -> None:
        """Write boundary values into ``f`` in place.

        In 2D the four corner points are not boundary slots; they receive the
        average of their two edge-neighbors' values.  Corners are cosmetic:
        no stencil ever reads them.
        """
        values = np.asarray(values, dtype=float)
        if values.ndim == 0:
            values = np.full(self.boundary_count, float(values))
        if values.shape != (self.boundary_count,):
            raise GridError(
                f"boundary data has shape {values.shape}, expected ({self.boundary_count},)"
            )
        f[self._b_index] = values
        if self.dim == 2 and fill_corners:
            f[self._corner_index] = 0.5 * (
                values[self._corner_sources[:, 0]] + values[self._corner_sources[:, 1]]
            )

    def interior(self, f: np.ndarray) -> np.ndarray:
        """View of the interior points of ``f``."""
        if self.dim == 1:
            return f[1:-1]
        return f[1:-1, 1:-1]

    def laplacian_interior(self, f: np.ndarray) -> np.ndarray:
        """Central second-difference quotient evaluated at interior points.

        Neighbor pairs are summed before the center term is subtracted so the
        stencil commutes bitwise with axis reversal; mirror-symmetric data
        stays mirror-symmetric to the last bit.
        """
        if self.dim == 1:
            return (f[2:] + f[:-2] - 2.0 * f[1:-1]) / self.dx[0] ** 2
        core = f[1:-1, 1:-1]
        return (f[2:, 1:-1] + f[:-2, 1:-1] - 2.0 * core) / self.dx[0] ** 2 + (
            f[1:-1, 2:] + f[1:-1, :-2] - 2.0 * core
        ) / self.dx[1] ** 2

    def cell_volumes(self) -> np.ndarray:
        """Trapezoidal cell volume per mesh point (half cells at the boundary,
        quarter cells at 2D corners)."""
        w = []
        for ax in range(self.dim):
            wa = np.full(self.nx[ax], self.dx[ax])
            wa[0] *= 0.5
            wa[-1] *= 0.5
            w.append(wa)
        if self.dim == 1:
            return w[0]
        return np.outer(w[0], w[1])

    def __repr__(self):
        return (
            f"Grid(dim={self.dim}, nx={self.nx}, lengths={self.lengths}, "
            f"nt={self.nt}, t_final={self.t_final})"
        )


def make_grid(spec: GridSpec) -> Grid:
    """Build a :class:`Grid` from a validated :class:`GridSpec`."""
    return Grid(spec)


def laplacian(f: np.ndarray, grid: Grid) -> np.ndarray:
    """Discrete Laplacian of a field.

    Returns a full-shaped array whose interior holds the 3-point (1D) or
    5-point (2D) central difference quotient.  Boundary entries are filled
    with zeros and carry no meaning; callers must not read them.
    """
    if not np.isfinite(f).all():
        raise GridError("laplacian input contains non-finite values")
    out = np.zeros_like(f, dtype=float)
    grid.interior(out)[...] = grid.laplacian_interior(f)
    return out


def stability_bound(grid: Grid, params) -> float:
    """Largest time step the explicit scheme tolerates on this grid.

    The binding diffusion coefficients are 1 (temperature) and 1/gamma
    (phase), so the bound is min(dx)^2 / (2 * dim * max(1, 1/gamma)).
    """
    dx_min = min(grid.dx)
    d_max = max(1.0, 1.0 / params.gamma)
    return dx_min**2 / (2.0 * grid.dim * d_max)
