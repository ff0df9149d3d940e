"""Explicit-Euler solver for the coupled temperature / phase system.

One step advances the phase field first, then the temperature using the
just-computed discrete phase rate, so the latent-heat exchange is exact
with respect to the discrete phase update:

    yt^{k+1} = yt^k + dt/(gamma*xi^2) * (xi^2 * Lap yt^k + f(y^k, yt^k))
    y^{k+1}  = y^k  + dt * Lap y^k + H * (yt^{k+1} - yt^k)

on interior points; boundary points carry the control u (temperature) and
the fixed phase boundary value.  The full history of both fields is
recorded for the adjoint sweep.  When a dense history would exceed the
memory budget, only every s-th frame is kept and intermediate frames are
re-stepped on demand; recomputation is deterministic and reproduces the
dense frames bit for bit.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .grid import Grid
from .model import LINEAR, ModelParams
from .grid import stability_bound

__all__ = [
    "BlowUpError",
    "StabilityWarning",
    "State",
    "Trajectory",
    "ForwardSolution",
    "DEFAULT_MEMORY_BUDGET",
    "apply_dirichlet",
    "step",
    "solve_forward",
]

DEFAULT_MEMORY_BUDGET = 2 * 1024**3  # bytes of frame storage per solve


class BlowUpError(RuntimeError):
    """A field became non-finite; the step size is too large for the data."""

    def __init__(self, time_level: int, context: str = "forward"):
        super().__init__(
            f"{context} solve produced non-finite values at time level {time_level}"
        )
        self.time_level = time_level
        self.context = context


class StabilityWarning(UserWarning):
    """Emitted when dt exceeds the explicit-scheme bound; the solve proceeds."""


@dataclass
class State:
    """Temperature and phase fields at one time level."""

    y: np.ndarray
    ytilde: np.ndarray
    level: int


def apply_dirichlet(f: np.ndarray, boundary_values, grid: Grid) -> np.ndarray:
    """Copy of ``f`` with the given values imposed on the boundary slots.

    2D corner points receive the average of their two edge neighbors'
    prescribed values; they are cosmetic and never read by stencils.
    Applying twice is the same as applying once.
    """
    out = np.array(f, dtype=float, copy=True)
    grid.scatter_boundary(out, boundary_values)
    return out


def _step_into(
    y: np.ndarray,
    yt: np.ndarray,
    y_out: np.ndarray,
    yt_out: np.ndarray,
    u_next,
    ytilde_bc,
    params: ModelParams,
    grid: Grid,
) -> None:
    """Advance one level, writing the new fields into preallocated arrays.

    Inputs must already carry their boundary values; outputs get ``u_next``
    and ``ytilde_bc`` imposed.  Overflow is not an error here: the callers
    detect non-finite values and raise a structured blow-up error.
    """
    dt = grid.dt
    gx2 = params.gamma * params.xi**2
    yi = grid.interior(y)
    ti = grid.interior(yt)

    with np.errstate(over="ignore", invalid="ignore"):
        lap_t = grid.laplacian_interior(yt)
        if params.reaction == LINEAR:
            f0 = ti * (1.0 - ti) * (ti - 0.5) - (params.beta * params.xi) * (yi - params.y_mt)
        else:
            s = np.clip((ti - params.eps0) / (params.eps1 - params.eps0), 0.0, 1.0)
            gate = s * s * (3.0 - 2.0 * s)
            f0 = (2.0 * ti * (1.0 - ti)) * (
                ti - 0.5 + (params.xi * params.beta * 0.5) * gate * (params.y_mt - yi)
            )
        t_new = ti + (dt / gx2) * (params.xi**2 * lap_t + f0)

        lap_y = grid.laplacian_interior(y)
        y_new = yi + dt * lap_y + params.H * (t_new - ti)

    grid.interior(yt_out)[...] = t_new
    grid.interior(y_out)[...] = y_new
    grid.scatter_boundary(yt_out, ytilde_bc)
    grid.scatter_boundary(y_out, u_next)


def step(
    state: State,
    u_k,
    ytilde_bc,
    params: ModelParams,
    grid: Grid,
    u_next=None,
) -> State:
    """One explicit Euler step from level k to k+1.

    ``u_k`` is imposed on the temperature (and ``ytilde_bc`` on the phase)
    before the interior update; the result carries ``u_next`` (defaults to
    ``u_k``: piecewise-constant control over the step).
    """
    if u_next is None:
        u_next = u_k
    y = apply_dirichlet(state.y, u_k, grid)
    yt = apply_dirichlet(state.ytilde, ytilde_bc, grid)
    y_out = np.empty_like(y)
    yt_out = np.empty_like(yt)
    _step_into(y, yt, y_out, yt_out, u_next, ytilde_bc, params, grid)
    if not (np.isfinite(y_out).all() and np.isfinite(yt_out).all()):
        raise BlowUpError(state.level + 1)
    return State(y=y_out, ytilde=yt_out, level=state.level + 1)


class Trajectory:
    """Time history of one field, dense or checkpointed.

    ``frame(k)`` returns the field at level k.  Dense storage serves views
    into one (nt, ...) array.  Checkpointed storage keeps every s-th frame
    and re-steps the containing segment on demand; segments are cached one
    at a time, which makes complete backward sweeps cheap (each segment is
    rebuilt once).
    """

    def __init__(self, store: "_HistoryStore", which: int):
        self._store = store
        self._which = which  # 0 = temperature, 1 = phase

    @property
    def nt(self) -> int:
        return self._store.nt

    def frame(self, k: int) -> np.ndarray:
        return self._store.frame(k, self._which)

    def frames(self) -> np.ndarray:
        """Materialize the full (nt, ...) history (dense copy)."""
        return np.stack([self.frame(k) for k in range(self.nt)])


class _HistoryStore:
    """Shared backing for the paired temperature/phase histories."""

    def __init__(self, grid, params, u, ytilde_bc, stride, frames=None, checkpoints=None):
        self.grid = grid
        self.params = params
        self.u = u
        self.ytilde_bc = ytilde_bc
        self.nt = grid.nt
        self.stride = stride
        self.dense = frames is not None
        self._frames = frames
        self._checkpoints = checkpoints
        self._seg_base = -1
        self._seg = None

    def frame(self, k: int, which: int) -> np.ndarray:
        if not 0 <= k < self.nt:
            raise IndexError(f"time level {k} outside 0..{self.nt - 1}")
        if self.dense:
            return self._frames[k, which]
        base = (k // self.stride) * self.stride
        if base != self._seg_base:
            self._rebuild_segment(base)
        return self._seg[k - base, which]

    def _rebuild_segment(self, base: int) -> None:
        length = min(self.stride, self.nt - base)
        seg = np.empty((length, 2) + self.grid.shape)
        seg[0] = self._checkpoints[base // self.stride]
        for j in range(length - 1):
            k = base + j
            _step_into(
                seg[j, 0],
                seg[j, 1],
                seg[j + 1, 0],
                seg[j + 1, 1],
                self.u[k + 1],
                self.ytilde_bc,
                self.params,
                self.grid,
            )
        self._seg_base = base
        self._seg = seg


@dataclass
class ForwardSolution:
    """Everything the adjoint and the cost need from one forward solve.

    Trajectories are ``None`` when the solve ran with
    ``keep_trajectory=False`` (cost-only evaluations).
    """

    y: Trajectory | None
    ytilde: Trajectory | None
    final: State
    max_temp_deviation: float  # max over points/times of |y - y_mt|
    max_dev_level: int
    max_dev_point: tuple[int, ...]


def solve_forward(
    scenario,
    u: np.ndarray,
    params: ModelParams,
    grid: Grid,
    memory_budget: int = DEFAULT_MEMORY_BUDGET,
    keep_trajectory: bool = True,
) -> ForwardSolution:
    """Run the state system from the scenario's initial data under control u.

    ``scenario`` provides ``y_ini``, ``ytilde_ini`` and ``ytilde_bc``;
    ``u`` has shape (nt, boundary_count).  Frame 0 is the initial data with
    boundary values imposed; frame k carries the control values u[k].
    ``keep_trajectory=False`` skips history storage (cost-only evaluations).
    """
    nt = grid.nt
    u = np.asarray(u, dtype=float)
    if u.shape != (nt, grid.boundary_count):
        raise ValueError(
            f"control has shape {u.shape}, expected ({nt}, {grid.boundary_count})"
        )
    bound = stability_bound(grid, params)
    if grid.dt > bound:
        warnings.warn(
            f"dt={grid.dt:.3e} exceeds the explicit stability bound {bound:.3e}; "
            "the solve may blow up",
            StabilityWarning,
            stacklevel=2,
        )

    ytilde_bc = np.asarray(scenario.ytilde_bc, dtype=float)
    y0 = apply_dirichlet(np.asarray(scenario.y_ini, dtype=float), u[0], grid)
    yt0 = apply_dirichlet(np.asarray(scenario.ytilde_ini, dtype=float), ytilde_bc, grid)

    frame_bytes = 2 * grid.n_points * 8
    stride = 1
    frames = None
    checkpoints = None
    if keep_trajectory:
        if nt * frame_bytes <= memory_budget:
            frames = np.empty((nt, 2) + grid.shape)
            frames[0, 0] = y0
            frames[0, 1] = yt0
        else:
            stride = int(np.ceil(nt * frame_bytes / memory_budget))
            n_checkpoints = (nt + stride - 1) // stride
            checkpoints = np.empty((n_checkpoints, 2) + grid.shape)
            checkpoints[0, 0] = y0
            checkpoints[0, 1] = yt0

    # running realism scan: costs one reduction per step, saves a second sweep
    y_cur = np.array(y0)
    yt_cur = np.array(yt0)
    y_nxt = np.empty_like(y_cur)
    yt_nxt = np.empty_like(yt_cur)
    dev = np.abs(y_cur - params.y_mt)
    flat = int(np.argmax(dev))
    max_dev = float(dev.flat[flat])
    max_dev_level = 0
    max_dev_flat = flat

    for k in range(nt - 1):
        if frames is not None:
            y_cur = frames[k, 0]
            yt_cur = frames[k, 1]
            y_nxt = frames[k + 1, 0]
            yt_nxt = frames[k + 1, 1]
        _step_into(y_cur, yt_cur, y_nxt, yt_nxt, u[k + 1], ytilde_bc, params, grid)
        if not np.isfinite(y_nxt).all() or not np.isfinite(yt_nxt).all():
            raise BlowUpError(k + 1)
        dev = np.abs(y_nxt - params.y_mt)
        flat = int(np.argmax(dev))
        val = float(dev.flat[flat])
        if val > max_dev:
            max_dev = val
            max_dev_level = k + 1
            max_dev_flat = flat
        if checkpoints is not None and (k + 1) % stride == 0:
            checkpoints[(k + 1) // stride, 0] = y_nxt
            checkpoints[(k + 1) // stride, 1] = yt_nxt
        if frames is None:
            y_cur, y_nxt = y_nxt, y_cur
            yt_cur, yt_nxt = yt_nxt, yt_cur

    if frames is not None:
        final = State(y=np.array(frames[nt - 1, 0]), ytilde=np.array(frames[nt - 1, 1]), level=nt - 1)
    else:
        final = State(y=np.array(y_cur), ytilde=np.array(yt_cur), level=nt - 1)

    if keep_trajectory:
        store = _HistoryStore(
            grid, params, u, ytilde_bc, stride, frames=frames, checkpoints=checkpoints
        )
        traj_y = Trajectory(store, 0)
        traj_t = Trajectory(store, 1)
    else:
        traj_y = None
        traj_t = None
    point = np.unravel_index(max_dev_flat, grid.shape)
    return ForwardSolution(
        y=traj_y,
        ytilde=traj_t,
        final=final,
        max_temp_deviation=max_dev,
        max_dev_level=max_dev_level,
        max_dev_point=tuple(int(i) for i in point),
    )
