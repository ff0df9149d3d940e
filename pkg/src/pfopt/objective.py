"""Cost functional, boundary quadrature and the control gradient.

The cost is the terminal phase mismatch plus a quadratic control penalty:

    J = 1/2 * sum_points (yt(T) - target)^2 * cellvol
      + alpha/2 * quadrature(u, u)

The space-time boundary quadrature uses piecewise-constant cells: weight
dt per boundary point in 1D, dt*dx1 on bottom/top edges and dt*dx2 on
left/right edges in 2D, summed over all time levels.  The gradient
component at (level k, slot b) is (alpha*u - flux) times that cell
measure, so a plain componentwise dot product against a control variation
approximates the continuous pairing.  Sums feeding cost values go through
``math.fsum`` so finite-difference checks are not limited by summation
error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import Grid
from .model import REALISM_BOUND, ModelParams

__all__ = ["CostReport", "cost", "boundary_quadrature", "gradient", "error_norm"]


@dataclass(frozen=True)
class CostReport:
    """Cost value and its pieces; realism fields are filled by drivers that
    have seen the whole temperature history."""

    J: float
    mismatch: float
    regularization: float
    error_norm: float
    realistic: bool | None = None
    phys_excess: float | None = None


def error_norm(final_ytilde: np.ndarray, target: np.ndarray) -> float:
    """Unweighted Euclidean norm of the terminal phase error vector."""
    diff = np.asarray(final_ytilde, dtype=float) - np.asarray(target, dtype=float)
    return math.sqrt(math.fsum((diff * diff).ravel()))


def cost(
    final_ytilde: np.ndarray,
    target: np.ndarray,
    u: np.ndarray,
    params: ModelParams,
    grid: Grid,
) -> CostReport:
    """Evaluate the cost of a terminal phase field under control ``u``."""
    final_ytilde = np.asarray(final_ytilde, dtype=float)
    target = np.asarray(target, dtype=float)
    if final_ytilde.shape != grid.shape or target.shape != grid.shape:
        raise ValueError(
            f"field shapes {final_ytilde.shape}/{target.shape} do not match grid {grid.shape}"
        )
    vol = grid.cell_volumes()
    diff = final_ytilde - target
    mismatch = 0.5 * math.fsum((diff * diff * vol).ravel())
    reg = 0.0
    if params.alpha != 0.0:
        reg = 0.5 * params.alpha * boundary_quadrature(u, u, grid)
    return CostReport(
        J=mismatch + reg,
        mismatch=mismatch,
        regularization=reg,
        error_norm=error_norm(final_ytilde, target),
    )


def boundary_quadrature(f: np.ndarray, s: np.ndarray, grid: Grid) -> float:
    """Space-time boundary integral of f*s by the piecewise-constant rule.

    Both arguments are (nt, boundary_count) mesh functions.  Every time
    level carries weight dt (the time weights therefore sum to T + dt);
    the spatial weight is 1 per point in 1D and the along-edge spacing in
    2D, corners excluded.
    """
    f = np.asarray(f, dtype=float)
    s = np.asarray(s, dtype=float)
    expected = (grid.nt, grid.boundary_count)
    if f.shape != expected or s.shape != expected:
        raise ValueError(f"boundary data shapes {f.shape}/{s.shape}, expected {expected}")
    return grid.dt * math.fsum((f * s * grid.boundary_weights[None, :]).ravel())


def gradient(flux: np.ndarray, u: np.ndarray, params: ModelParams, grid: Grid) -> np.ndarray:
    """Control gradient from the adjoint flux trace.

    Component (k, b) equals (alpha*u[k, b] - flux[k, b]) * dt * w_b with
    w_b the spatial quadrature weight of slot b.  The measure stays in the
    gradient (no preconditioning), so descent updates are u -= eps * g.
    """
    flux = np.asarray(flux, dtype=float)
    u = np.asarray(u, dtype=float)
    expected = (grid.nt, grid.boundary_count)
    if flux.shape != expected or u.shape != expected:
        raise ValueError(f"gradient inputs shaped {flux.shape}/{u.shape}, expected {expected}")
    return (params.alpha * u - flux) * (grid.dt * grid.boundary_weights[None, :])
