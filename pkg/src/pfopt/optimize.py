"""Gradient descent on the reduced cost, plus an independent
finite-difference oracle for the adjoint gradient.

One iteration is: solve the state system under the current control, sweep
the adjoint across the recorded history, assemble the gradient and update
u -= eps * g.  Step sizes follow an explicit schedule of (iterations, eps)
pairs; there is no line search.  Everything is deterministic for fixed
inputs.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np

from .adjoint import solve_adjoint
from .forward import BlowUpError, solve_forward, DEFAULT_MEMORY_BUDGET
from .grid import Grid
from .model import ModelParams, REALISM_BOUND
from .objective import CostReport, boundary_quadrature, cost, gradient

__all__ = [
    "OptimizeConfig",
    "HistoryRecord",
    "DescentHistory",
    "DescentResult",
    "descend",
    "GradCheckDirection",
    "GradCheckReport",
    "fd_gradient_check",
]


@dataclass(frozen=True)
class OptimizeConfig:
    """Descent schedule and stopping control.

    ``schedule`` is an ordered list of (iterations, step) pairs executed in
    sequence.  ``grad_tol`` (off by default) stops the loop once the
    Euclidean norm of the gradient falls below it.  ``max_iterations``
    caps the total across schedule entries; ``record_every`` thins the
    history (the first and last iterates are always recorded).
    """

    schedule: tuple[tuple[int, float], ...]
    grad_tol: float | None = None
    max_iterations: int | None = None
    record_every: int = 1

    def __post_init__(self):
        if not self.schedule:
            raise ValueError("schedule must contain at least one (iterations, step) entry")
        for n, eps in self.schedule:
            if int(n) != n or n < 0:
                raise ValueError(f"schedule iteration counts must be integers >= 0, got {n!r}")
            if not eps > 0:
                raise ValueError(f"schedule steps must be positive, got {eps!r}")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")

    @classmethod
    def fixed(cls, iterations: int, step: float, **kw) -> "OptimizeConfig":
        return cls(schedule=((iterations, step),), **kw)

    @property
    def total_iterations(self) -> int:
        total = sum(n for n, _ in self.schedule)
        if self.max_iterations is not None:
            total = min(total, self.max_iterations)
        return total


@dataclass(frozen=True)
class HistoryRecord:
    """One recorded iterate of the descent."""

    iteration: int
    J: float
    mismatch: float
    regularization: float
    error_norm: float
    grad_norm: float  # NaN on the final record (no gradient computed there)
    phys_excess: float
    wall_ms: float  # elapsed since descent start


@dataclass
class DescentHistory:
    records: list[HistoryRecord] = field(default_factory=list)

    def append(self, rec: HistoryRecord) -> None:
        if self.records and rec.iteration <= self.records[-1].iteration:
            raise ValueError("history iterations must be strictly increasing")
        self.records.append(rec)

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    @property
    def final(self) -> HistoryRecord:
        return self.records[-1]


@dataclass
class DescentResult:
    u_opt: np.ndarray
    history: DescentHistory
    report: CostReport  # cost of the final control, realism filled in


def _schedule_steps(config: OptimizeConfig):
    """Yield the step size for each iteration index, honoring the cap."""
    count = 0
    cap = config.total_iterations
    for n, eps in config.schedule:
        for _ in range(n):
            if count >= cap:
                return
            yield eps
            count += 1


def descend(
    scenario,
    params: ModelParams,
    grid: Grid,
    config: OptimizeConfig,
    memory_budget: int = DEFAULT_MEMORY_BUDGET,
) -> DescentResult:
    """Run scheduled gradient descent from the scenario's initial control.

    Returns the final control, the recorded history, and the final cost
    report.  On solver blow-up the partial history is attached to the
    raised :class:`~pfopt.forward.BlowUpError` as ``.history``.
    """
    target = np.asarray(scenario.target, dtype=float)
    u = np.array(scenario.u0, dtype=float)
    history = DescentHistory()
    t0 = time.perf_counter()
    total = config.total_iterations
    bxi = abs(params.beta * params.xi)

    def record(i, rep: CostReport, gnorm: float, excess: float):
        last = i == total
        if i % config.record_every == 0 or i == 0 or last:
            history.append(
                HistoryRecord(
                    iteration=i,
                    J=rep.J,
                    mismatch=rep.mismatch,
                    regularization=rep.regularization,
                    error_norm=rep.error_norm,
                    grad_norm=gnorm,
                    phys_excess=excess,
                    wall_ms=(time.perf_counter() - t0) * 1e3,
                )
            )

    try:
        i = 0
        stopped = False
        excess = float("nan")
        for eps in _schedule_steps(config):
            sol = solve_forward(scenario, u, params, grid, memory_budget=memory_budget)
            rep = cost(sol.final.ytilde, target, u, params, grid)
            excess = bxi * sol.max_temp_deviation
            flux = solve_adjoint(sol.ytilde, sol.y, target, params, grid).flux
            g = gradient(flux, u, params, grid)
            gnorm = float(np.linalg.norm(g))
            record(i, rep, gnorm, excess)
            if config.grad_tol is not None and gnorm < config.grad_tol:
                stopped = True
                break
            u = u - eps * g
            i += 1
        # final iterate: cost only, no gradient computed for it
        if not stopped:
            sol = solve_forward(scenario, u, params, grid, memory_budget=memory_budget)
            rep = cost(sol.final.ytilde, target, u, params, grid)
            excess = bxi * sol.max_temp_deviation
            record(i, rep, float("nan"), excess)
    except BlowUpError as err:
        err.history = history
        raise

    report = replace(rep, realistic=bool(excess < REALISM_BOUND), phys_excess=excess)
    return DescentResult(u_opt=u, history=history, report=report)


@dataclass(frozen=True)
class GradCheckDirection:
    """Comparison of adjoint and finite-difference directional derivatives."""

    adjoint_value: float
    fd_value: float
    rel_error: float


@dataclass(frozen=True)
class GradCheckReport:
    directions: tuple[GradCheckDirection, ...]
    h: float
    truncation_flag: bool  # h large relative to the control scale

    @property
    def max_rel_error(self) -> float:
        return max(d.rel_error for d in self.directions)


def fd_gradient_check(
    scenario,
    params: ModelParams,
    grid: Grid,
    u: np.ndarray,
    directions,
    h: float,
) -> GradCheckReport:
    """Compare the adjoint directional derivative with central differences.

    For each direction s the adjoint side is the componentwise sum of
    gradient * s; the finite-difference side is (J(u+hs) - J(u-hs))/(2h),
    each J from a fresh forward solve.  The relative error is measured
    against the larger magnitude of the two values.
    """
    if not h > 0:
        raise ValueError(f"finite-difference step must be positive, got {h!r}")
    u = np.asarray(u, dtype=float)
    target = np.asarray(scenario.target, dtype=float)

    sol = solve_forward(scenario, u, params, grid)
    flux = solve_adjoint(sol.ytilde, sol.y, target, params, grid).flux
    g = gradient(flux, u, params, grid)

    def reduced_cost(ctrl):
        s = solve_forward(scenario, ctrl, params, grid, keep_trajectory=False)
        return cost(s.final.ytilde, target, ctrl, params, grid).J

    results = []
    for s in directions:
        s = np.asarray(s, dtype=float)
        if s.shape != u.shape:
            raise ValueError(f"direction shape {s.shape} does not match control {u.shape}")
        if not np.any(s):
            raise ValueError("gradient-check directions must be nonzero")
        adj = float(np.sum(g * s))
        fd = (reduced_cost(u + h * s) - reduced_cost(u - h * s)) / (2.0 * h)
        denom = max(abs(adj), abs(fd))
        rel = abs(adj - fd) / denom if denom > 0 else 0.0
        results.append(GradCheckDirection(adjoint_value=adj, fd_value=fd, rel_error=rel))

    scale = max(1.0, float(np.max(np.abs(u))))
    return GradCheckReport(
        directions=tuple(results),
        h=h,
        truncation_flag=bool(h >= 0.1 * scale),
    )
