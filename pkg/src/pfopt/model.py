"""Physical parameters, reaction terms and the realism monitor.

Two reaction terms drive the phase equation: a plain cubic with a linear
temperature coupling, and a variant whose coupling is gated by a cubic
smoothstep of the phase value so that the forcing acts only across the
diffuse interface.  All functions are plain ``numpy`` ufunc compositions
and accept scalars or arrays alike.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np

__all__ = [
    "LINEAR",
    "LIMITER",
    "REALISM_BOUND",
    "ModelParams",
    "reaction_linear",
    "reaction_limiter",
    "reaction",
    "sigma",
    "sigma_prime",
    "adjoint_coupling",
    "h_term",
    "PhysicalityReport",
    "physicality_violation",
]

LINEAR = "linear"
LIMITER = "limiter"

# |beta*xi*(y - y_mt)| must stay below this for the cubic reaction term to
# keep three roots; beyond it the liquid phase destabilizes everywhere.
REALISM_BOUND = math.sqrt(3.0) / 36.0


@dataclass(frozen=True)
class ModelParams:
    """Coefficients of the coupled temperature / phase system.

    gamma   attachment kinetics coefficient (> 0)
    beta    supercooling strength
    xi      interface thickness scale (> 0)
    y_mt    melting temperature
    H       latent heat released per unit phase change (>= 0)
    alpha   boundary-control regularization weight (>= 0)
    reaction  "linear" or "limiter"
    eps0, eps1  smoothstep thresholds, used by the limiter kind only
    """

    gamma: float
    beta: float
    xi: float
    y_mt: float
    H: float
    alpha: float = 0.0
    reaction: str = LINEAR
    eps0: float = 0.0
    eps1: float = 0.2

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma!r}")
        if not self.xi > 0:
            raise ValueError(f"xi must be positive, got {self.xi!r}")
        if self.H < 0:
            raise ValueError(f"H must be nonnegative, got {self.H!r}")
        if self.alpha < 0:
            raise ValueError(f"alpha must be nonnegative, got {self.alpha!r}")
        if self.reaction not in (LINEAR, LIMITER):
            raise ValueError(f"reaction must be 'linear' or 'limiter', got {self.reaction!r}")
        if self.reaction == LIMITER and not (0.0 <= self.eps0 < self.eps1 <= 1.0):
            raise ValueError(
                f"limiter thresholds need 0 <= eps0 < eps1 <= 1, got ({self.eps0!r}, {self.eps1!r})"
            )

    def with_(self, **kw) -> "ModelParams":
        return replace(self, **kw)


def reaction_linear(y, ytilde, params: ModelParams):
    """Cubic double-well force with a linear temperature coupling:
    yt*(1-yt)*(yt-1/2) - beta*xi*(y - y_mt)."""
    return ytilde * (1.0 - ytilde) * (ytilde - 0.5) - params.beta * params.xi * (y - params.y_mt)


def sigma(ytilde, eps0: float, eps1: float):
    """Cubic smoothstep: 0 below eps0, 1 above eps1, 3s^2 - 2s^3 between."""
    s = np.clip((np.asarray(ytilde, dtype=float) - eps0) / (eps1 - eps0), 0.0, 1.0)
    return s * s * (3.0 - 2.0 * s)


def sigma_prime(ytilde, eps0: float, eps1: float):
    """Exact derivative of :func:`sigma`; zero outside (eps0, eps1)."""
    s = np.clip((np.asarray(ytilde, dtype=float) - eps0) / (eps1 - eps0), 0.0, 1.0)
    return 6.0 * s * (1.0 - s) / (eps1 - eps0)


def reaction_limiter(y, ytilde, params: ModelParams):
    """Double-well force whose temperature coupling is gated by the
    smoothstep, so it switches off outside the interface band:
    2*yt*(1-yt)*(yt - 1/2 + xi*beta/2 * Sigma(yt) * (y_mt - y))."""
    gate = sigma(ytilde, params.eps0, params.eps1)
    bracket = ytilde - 0.5 + params.xi * params.beta * 0.5 * gate * (params.y_mt - y)
    return 2.0 * ytilde * (1.0 - ytilde) * bracket


def reaction(y, ytilde, params: ModelParams):
    """Dispatch on ``params.reaction``."""
    if params.reaction == LINEAR:
        return reaction_linear(y, ytilde, params)
    return reaction_limiter(y, ytilde, params)


def adjoint_coupling(ztilde, z, params: ModelParams):
    """Coefficient multiplying q in the adjoint temperature equation.

    Equals minus the y-derivative of the reaction term: the constant
    beta*xi for the linear kind, beta*xi*zt*(1-zt)*Sigma(zt) for the
    limiter kind (``z`` is unused there).
    """
    if params.reaction == LINEAR:
        return params.beta * params.xi
    gate = sigma(ztilde, params.eps0, params.eps1)
    return params.beta * params.xi * (ztilde * gate - ztilde * ztilde * gate)


def h_term(ztilde, z, params: ModelParams):
    """Extra reaction coefficient of the adjoint phase equation, limiter
    kind: beta*(z - y_mt)*(S + zt*S' - 2*zt*S - zt^2*S') with S = Sigma(zt).

    Equals the yt-derivative of beta*(z - y_mt)*zt*(1-zt)*Sigma(zt).
    """
    s = sigma(ztilde, params.eps0, params.eps1)
    sp = sigma_prime(ztilde, params.eps0, params.eps1)
    return params.beta * (z - params.y_mt) * (
        s + ztilde * sp - 2.0 * ztilde * s - ztilde * ztilde * sp
    )


class PhysicalityReport(NamedTuple):
    """Outcome of the post-hoc realism scan of a temperature history."""

    max_coupling: float  # max over points/times of |beta*xi*(y - y_mt)|
    realistic: bool  # strictly below REALISM_BOUND everywhere
    time_level: int  # where the maximum occurred
    point: tuple[int, ...]  # mesh index of the maximum


def physicality_violation(y_traj, params: ModelParams) -> PhysicalityReport:
    """Scan a temperature trajectory for violations of the three-roots bound.

    ``y_traj`` may be an ndarray stacked over time levels or any object
    exposing ``nt`` and ``frame(k)``.  This is a monitor only; the solvers
    never enforce the bound.
    """
    scale = abs(params.beta * params.xi)
    best = -1.0
    best_level = 0
    best_point: tuple[int, ...] = (0,)
    if isinstance(y_traj, np.ndarray):
        frames = ((k, y_traj[k]) for k in range(y_traj.shape[0]))
    else:
        frames = ((k, y_traj.frame(k)) for k in range(y_traj.nt))
    for k, frame in frames:
        dev = np.abs(frame - params.y_mt)
        flat = int(np.argmax(dev))
        val = float(dev.flat[flat])
        if val > best:
            best = val
            best_level = k
            best_point = np.unravel_index(flat, frame.shape)
    max_coupling = scale * best
    return PhysicalityReport(
        max_coupling=max_coupling,
        realistic=bool(max_coupling < REALISM_BOUND),
        time_level=best_level,
        point=tuple(int(i) for i in best_point),
    )
