"""Profile constructors, interface extraction and the built-in scenarios.

A scenario bundles everything one optimization run needs: initial fields,
phase boundary values, the target phase profile, the initial control
guess, model parameters, grid resolution and a descent schedule.  The
built-in registry covers nine 1D studies (crystal growth extent under
three time/regularization settings, keeping two crystals separated under
varied regularization and guesses, and relocating a liquid gap) plus three
2D studies (relocating a crystal under either reaction kind, and splitting
one crystal into two).  Initial and target shapes are reconstructions with
round positions; every preset accepts grid/parameter/schedule overrides.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np

from .grid import Grid, GridSpec, make_grid
from .model import LIMITER, LINEAR, ModelParams
from .optimize import OptimizeConfig

__all__ = [
    "Interval",
    "Rect",
    "Disc",
    "ScenarioSpec",
    "tanh_step",
    "tanh_profile",
    "smooth_union",
    "disc_profile",
    "box_profile",
    "indicator_profile",
    "extract_interface",
    "builtin",
    "build_preset",
    "preset_names",
    "preset_summary",
    "UnknownPresetError",
]


# -- regions -------------------------------------------------------------------


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float


@dataclass(frozen=True)
class Rect:
    x1: tuple[float, float]
    x2: tuple[float, float]


@dataclass(frozen=True)
class Disc:
    center: tuple[float, float]
    radius: float


# -- profiles ------------------------------------------------------------------


def tanh_step(x, x0: float, xi: float, orientation: int = 1):
    """Scalar diffuse step 0.5*(1 - s*tanh((x - x0)/(2*xi))).

    Orientation +1 puts the solid (value 1) side left of ``x0``;
    orientation -1 puts it right.
    """
    if orientation not in (1, -1):
        raise ValueError(f"orientation must be +1 or -1, got {orientation!r}")
    return 0.5 * (1.0 - orientation * np.tanh((np.asarray(x, dtype=float) - x0) / (2.0 * xi)))


def tanh_profile(interfaces, xi: float, grid: Grid) -> np.ndarray:
    """1D multi-interface diffuse profile: product of oriented tanh steps.

    ``interfaces`` is a sequence of (position, orientation) pairs.  A slab
    of solid is two opposing steps, e.g. [(a, -1), (b, +1)] for solid on
    [a, b]; values stay strictly inside (0, 1).
    """
    if grid.dim != 1:
        raise ValueError("tanh_profile builds 1D fields; use disc/box profiles in 2D")
    x = grid.axis(0)
    out = np.ones_like(x)
    for x0, orientation in interfaces:
        if not 0.0 <= x0 <= grid.lengths[0]:
            raise ValueError(f"interface position {x0} outside the domain")
        out = out * tanh_step(x, x0, xi, orientation)
    return out


def smooth_union(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Fuzzy union of two [0, 1] profiles: a + b - a*b."""
    return a + b - a * b


def disc_profile(center: tuple[float, float], radius: float, xi: float, grid: Grid) -> np.ndarray:
    """2D diffuse disc: 0.5*(1 - tanh((|x - c| - r)/(2*xi)))."""
    x1, x2 = grid.mesh()
    r = np.sqrt((x1 - center[0]) ** 2 + (x2 - center[1]) ** 2)
    return 0.5 * (1.0 - np.tanh((r - radius) / (2.0 * xi)))


def box_profile(b1: tuple[float, float], b2: tuple[float, float], xi: float, grid: Grid) -> np.ndarray:
    """2D diffuse rectangle: per-axis slab products (rounded corners)."""
    x1, x2 = grid.mesh()
    s1 = tanh_step(x1, b1[1], xi, 1) * tanh_step(x1, b1[0], xi, -1)
    s2 = tanh_step(x2, b2[1], xi, 1) * tanh_step(x2, b2[0], xi, -1)
    return s1 * s2


def indicator_profile(region, grid: Grid) -> np.ndarray:
    """Sharp characteristic function of a region (1 inside, 0 outside).

    ``region`` is an :class:`Interval` (1D), a :class:`Rect` or
    :class:`Disc` (2D), a sequence of those (union), or ``None`` (empty).
    Mesh points exactly on the region boundary count as inside.
    """
    out = np.zeros(grid.shape)
    if region is None:
        return out
    regions = region if isinstance(region, (list, tuple)) else [region]
    for reg in regions:
        if isinstance(reg, Interval):
            if grid.dim != 1:
                raise ValueError("Interval regions require a 1D grid")
            x = grid.axis(0)
            out = np.maximum(out, ((x >= reg.lo) & (x <= reg.hi)).astype(float))
        elif isinstance(reg, Rect):
            if grid.dim != 2:
                raise ValueError("Rect regions require a 2D grid")
            x1, x2 = grid.mesh()
            inside = (x1 >= reg.x1[0]) & (x1 <= reg.x1[1]) & (x2 >= reg.x2[0]) & (x2 <= reg.x2[1])
            out = np.maximum(out, inside.astype(float))
        elif isinstance(reg, Disc):
            if grid.dim != 2:
                raise ValueError("Disc regions require a 2D grid")
            x1, x2 = grid.mesh()
            inside = (x1 - reg.center[0]) ** 2 + (x2 - reg.center[1]) ** 2 <= reg.radius**2
            out = np.maximum(out, inside.astype(float))
        else:
            raise TypeError(f"unsupported region type {type(reg).__name__}")
    return out


# -- interface extraction --------------------------------------------------------

_LEVEL = 0.5


def extract_interface(ytilde: np.ndarray, grid: Grid):
    """Locate the phase interface (the level-1/2 set).

    1D: returns an array of crossing positions found by linear
    interpolation between mesh points where ytilde - 1/2 changes sign.
    2D: returns a list of line segments ((x1a, x2a), (x1b, x2b)), one or
    two per mesh cell, from marching squares at the same level.
    """
    f = np.asarray(ytilde, dtype=float)
    if not np.isfinite(f).all():
        raise ValueError("interface extraction requires finite field values")
    if grid.dim == 1:
        return _crossings_1d(f, grid)
    return _marching_squares(f, grid)


def _crossings_1d(f: np.ndarray, grid: Grid) -> np.ndarray:
    x = grid.axis(0)
    g = f - _LEVEL
    out = []
    for i in range(len(f) - 1):
        a, b = g[i], g[i + 1]
        if a == 0.0:
            out.append(x[i])
        elif a * b < 0.0:
            out.append(x[i] + grid.dx[0] * a / (a - b))
    if g[-1] == 0.0:
        out.append(x[-1])
    return np.array(out)


def _edge_point(xa, ya, va, xb, yb, vb):
    t = (_LEVEL - va) / (vb - va)
    return (xa + t * (xb - xa), ya + t * (yb - ya))


# corner bit order: A=(i,j), B=(i+1,j), C=(i+1,j+1), D=(i,j+1); edges by index
# 0: A-B, 1: B-C, 2: C-D, 3: D-A
_SEGMENT_TABLE = {
    1: [(3, 0)],
    2: [(0, 1)],
    3: [(3, 1)],
    4: [(1, 2)],
    6: [(0, 2)],
    7: [(3, 2)],
    8: [(2, 3)],
    9: [(0, 2)],
    11: [(1, 2)],
    12: [(1, 3)],
    13: [(0, 1)],
    14: [(3, 0)],
}


def _marching_squares(f: np.ndarray, grid: Grid):
    x1 = grid.axis(0)
    x2 = grid.axis(1)
    n1, n2 = grid.nx
    segments = []
    for i in range(n1 - 1):
        for j in range(n2 - 1):
            corners = (
                (x1[i], x2[j], f[i, j]),
                (x1[i + 1], x2[j], f[i + 1, j]),
                (x1[i + 1], x2[j + 1], f[i + 1, j + 1]),
                (x1[i], x2[j + 1], f[i, j + 1]),
            )
            case = sum(1 << k for k, (_, _, v) in enumerate(corners) if v > _LEVEL)
            if case in (0, 15):
                continue
            edges = [(0, 1), (1, 2), (2, 3), (3, 0)]
            pts = {}
            for e, (ka, kb) in enumerate(edges):
                xa, ya, va = corners[ka]
                xb, yb, vb = corners[kb]
                if (va > _LEVEL) != (vb > _LEVEL):
                    pts[e] = _edge_point(xa, ya, va, xb, yb, vb)
            if case in (5, 10):
                center = 0.25 * sum(v for (_, _, v) in corners)
                center_solid = center > _LEVEL
                if (case == 5) == center_solid:
                    pairs = [(3, 2), (0, 1)]
                else:
                    pairs = [(3, 0), (1, 2)]
            else:
                pairs = _SEGMENT_TABLE[case]
            for ea, eb in pairs:
                if ea in pts and eb in pts:
                    segments.append((pts[ea], pts[eb]))
    return segments


# -- scenario spec ----------------------------------------------------------------


@dataclass
class ScenarioSpec:
    """A complete, runnable problem description."""

    name: str
    description: str
    grid: GridSpec
    params: ModelParams
    y_ini: np.ndarray
    ytilde_ini: np.ndarray
    ytilde_bc: np.ndarray  # (boundary_count,), constant in time
    target: np.ndarray
    u0: np.ndarray  # (nt, boundary_count)
    opt: OptimizeConfig

    def validate(self, grid: Grid | None = None) -> None:
        g = grid if grid is not None else make_grid(self.grid)
        for label, arr, shape in (
            ("y_ini", self.y_ini, g.shape),
            ("ytilde_ini", self.ytilde_ini, g.shape),
            ("target", self.target, g.shape),
            ("ytilde_bc", self.ytilde_bc, (g.boundary_count,)),
            ("u0", self.u0, (g.nt, g.boundary_count)),
        ):
            arr = np.asarray(arr)
            if arr.shape != shape:
                raise ValueError(f"{self.name}: {label} has shape {arr.shape}, expected {shape}")
            if not np.isfinite(arr).all():
                raise ValueError(f"{self.name}: {label} contains non-finite values")
        t = np.asarray(self.target)
        if t.min() < 0.0 or t.max() > 1.0:
            raise ValueError(f"{self.name}: target values must lie in [0, 1]")


# -- preset registry ---------------------------------------------------------------

PARAMS_1D = ModelParams(gamma=1.0, beta=2.0, xi=0.005, y_mt=0.5, H=1.0)
PARAMS_2D = ModelParams(
    gamma=3.0, beta=300.0, xi=0.0101, y_mt=1.0, H=2.0, reaction=LIMITER, eps0=0.0, eps1=0.2
)

_GRID_EXT = GridSpec(dim=1, lengths=(1.0,), counts=(400,), n_t=400_000, t_final=0.1)
_GRID_SEP = GridSpec(dim=1, lengths=(1.0,), counts=(200,), n_t=100_000, t_final=0.4)
_GRID_2D = GridSpec(dim=2, lengths=(0.6, 1.0), counts=(60, 100), n_t=8_000, t_final=0.081)


def _sym(f: np.ndarray) -> np.ndarray:
    """Force bitwise mirror symmetry of a 1D field."""
    return 0.5 * (f + f[::-1])


def _const_control(grid: Grid, values) -> np.ndarray:
    u = np.empty((grid.nt, grid.boundary_count))
    u[:] = np.asarray(values, dtype=float)
    return u


def _asym_guess(grid: Grid) -> np.ndarray:
    # cold left end, hot right end, constant in time
    return _const_control(grid, [0.0, 1.0])


def _build_extent(grid: Grid, params: ModelParams):
    """Seed crystal at the left wall; target: solid filling [0, 1/2].

    The melt is mildly supercooled (natural front travel ~0.085 per 0.1
    time units), so reaching x=0.5 needs sustained boundary cooling; at
    the halved horizon that demand exceeds the three-roots realism bound.
    """
    yt0 = tanh_profile([(0.05, 1)], params.xi, grid)
    y0 = grid.full(0.45)
    target = indicator_profile(Interval(0.0, 0.5), grid)
    return y0, yt0, np.array([1.0, 0.0]), target, _asym_guess(grid)


def _profile_width(params: ModelParams) -> float:
    """Equilibrium front width scale of the reaction kind in use.

    The factor-2 (limiter) cubic relaxes to 0.5*(1 - tanh(x/(2*xi)));
    the plain cubic's stationary front is wider by sqrt(2).  Targets built
    with the matching width are reachable shapes; a mismatched width puts
    an irreducible ~0.22 per interface into the terminal error norm.
    """
    return params.xi * (1.0 if params.reaction == LIMITER else math.sqrt(2.0))


def _build_separation(grid: Grid, params: ModelParams, symmetric_guess: bool):
    """Two interior crystals; target: both grown to the walls, gap kept."""
    xi = _profile_width(params)
    yt0 = smooth_union(
        tanh_profile([(0.15, -1), (0.35, 1)], xi, grid),
        tanh_profile([(0.65, -1), (0.85, 1)], xi, grid),
    )
    target = smooth_union(
        tanh_profile([(0.45, 1)], xi, grid),
        tanh_profile([(0.55, -1)], xi, grid),
    )
    yt0 = _sym(yt0)
    target = _sym(target)
    # mild ambient supercooling: the natural front speed (~17x the
    # undercooling) covers the required growth on the horizon timescale,
    # so the control only trims positions and the melt ends near its
    # initial temperature (a cold finish would shift the solid-phase value
    # off 1 and put an irreducible plateau error into the mismatch)
    y0 = grid.full(0.48)
    u0 = _const_control(grid, [0.0, 0.0]) if symmetric_guess else _asym_guess(grid)
    return y0, yt0, np.array([1.0, 1.0]), target, u0


def _build_gap(grid: Grid, params: ModelParams):
    """Solid domain with a liquid gap at [0.55, 0.75]; move it to [0.25, 0.45]."""
    xi = _profile_width(params)
    yt0 = smooth_union(
        tanh_profile([(0.55, 1)], xi, grid),
        tanh_profile([(0.75, -1)], xi, grid),
    )
    target = smooth_union(
        tanh_profile([(0.25, 1)], xi, grid),
        tanh_profile([(0.45, -1)], xi, grid),
    )
    y0 = grid.full(params.y_mt)
    return y0, yt0, np.array([1.0, 1.0]), target, _const_control(grid, [0.0, 0.0])


def _build_move2d(grid: Grid, params: ModelParams):
    """Disc crystal in the upper half; target: same disc in the lower half."""
    xi = params.xi
    yt0 = disc_profile((0.3, 0.7), 0.15, xi, grid)
    target = disc_profile((0.3, 0.3), 0.15, xi, grid)
    y0 = grid.full(params.y_mt)
    bc = np.zeros(grid.boundary_count)
    u0 = _const_control(grid, np.ones(grid.boundary_count))
    return y0, yt0, bc, target, u0


def _build_separate2d(grid: Grid, params: ModelParams):
    """Rectangular crystal in the center; target: two discs above and below."""
    xi = params.xi
    yt0 = box_profile((0.15, 0.45), (0.38, 0.62), xi, grid)
    target = smooth_union(
        disc_profile((0.3, 0.25), 0.12, xi, grid),
        disc_profile((0.3, 0.75), 0.12, xi, grid),
    )
    y0 = grid.full(params.y_mt)
    bc = np.zeros(grid.boundary_count)
    u0 = _const_control(grid, np.ones(grid.boundary_count))
    return y0, yt0, bc, target, u0


@dataclass(frozen=True)
class _Preset:
    description: str
    grid: GridSpec
    params: ModelParams
    opt: OptimizeConfig
    build: callable


_PRESETS: dict[str, _Preset] = {
    "exp1": _Preset(
        "1D growth extent: reach a half-domain crystal in T=0.1",
        _GRID_EXT,
        PARAMS_1D,
        OptimizeConfig.fixed(100, 3e15),
        _build_extent,
    ),
    "exp2": _Preset(
        "1D growth extent at halved time T=0.05 (unregularized)",
        dataclasses.replace(_GRID_EXT, t_final=0.05),
        PARAMS_1D,
        OptimizeConfig.fixed(100, 2e16),
        _build_extent,
    ),
    "exp3": _Preset(
        "1D growth extent at T=0.05 with control regularization",
        dataclasses.replace(_GRID_EXT, t_final=0.05),
        PARAMS_1D.with_(alpha=5e-11),
        OptimizeConfig.fixed(100, 2e16),
        _build_extent,
    ),
    "exp4": _Preset(
        "1D crystal separation at short time T=0.05",
        dataclasses.replace(_GRID_SEP, t_final=0.05),
        PARAMS_1D,
        OptimizeConfig.fixed(150, 2e14),
        lambda g, p: _build_separation(g, p, symmetric_guess=False),
    ),
    "exp5": _Preset(
        "1D crystal separation at T=0.4, asymmetric initial guess",
        _GRID_SEP,
        PARAMS_1D,
        OptimizeConfig.fixed(100, 3e13),
        lambda g, p: _build_separation(g, p, symmetric_guess=False),
    ),
    "exp6": _Preset(
        "1D crystal separation with mild regularization",
        _GRID_SEP,
        PARAMS_1D.with_(alpha=5e-10),
        OptimizeConfig.fixed(100, 1e13),
        lambda g, p: _build_separation(g, p, symmetric_guess=False),
    ),
    "exp7": _Preset(
        "1D crystal separation with stronger regularization",
        _GRID_SEP,
        PARAMS_1D.with_(alpha=1e-9),
        OptimizeConfig.fixed(125, 1e13),
        lambda g, p: _build_separation(g, p, symmetric_guess=False),
    ),
    "exp8": _Preset(
        "1D crystal separation with the symmetric zero initial guess",
        _GRID_SEP,
        PARAMS_1D,
        OptimizeConfig.fixed(100, 3e14),
        lambda g, p: _build_separation(g, p, symmetric_guess=True),
    ),
    "exp9": _Preset(
        "1D gap relocation: move the liquid gap from [0.55,0.75] to [0.25,0.45]",
        dataclasses.replace(_GRID_SEP, t_final=0.1),
        PARAMS_1D,
        OptimizeConfig(schedule=((225, 1e16), (25, 5e15))),
        _build_gap,
    ),
    "move2d-linear": _Preset(
        "2D crystal relocation north-to-south, plain cubic reaction",
        _GRID_2D,
        PARAMS_2D.with_(reaction=LINEAR),
        OptimizeConfig.fixed(400, 5.0),
        _build_move2d,
    ),
    "move2d-limiter": _Preset(
        "2D crystal relocation north-to-south, interface-gated reaction",
        _GRID_2D,
        PARAMS_2D,
        OptimizeConfig.fixed(5000, 5.0),
        _build_move2d,
    ),
    "separate2d": _Preset(
        "2D crystal split into two discs, interface-gated reaction",
        _GRID_2D,
        PARAMS_2D,
        OptimizeConfig.fixed(1000, 7.5),
        _build_separate2d,
    ),
}


class UnknownPresetError(KeyError):
    def __init__(self, name: str):
        names = ", ".join(_PRESETS)
        super().__init__(f"unknown preset {name!r}; available: {names}")


def preset_names() -> list[str]:
    return list(_PRESETS)


def preset_summary() -> list[tuple[str, str, GridSpec]]:
    """(name, description, grid spec) for every preset, in stable order."""
    return [(name, p.description, p.grid) for name, p in _PRESETS.items()]


def build_preset(
    name: str,
    grid_overrides: dict | None = None,
    params_overrides: dict | None = None,
    opt_overrides: dict | None = None,
) -> ScenarioSpec:
    """Materialize a preset, optionally overriding resolution, model
    parameters or the descent schedule.  Fields are rebuilt on the final
    grid, so resolution overrides stay consistent."""
    if name not in _PRESETS:
        raise UnknownPresetError(name)
    p = _PRESETS[name]
    gspec = dataclasses.replace(p.grid, **grid_overrides) if grid_overrides else p.grid
    params = p.params.with_(**params_overrides) if params_overrides else p.params
    opt = dataclasses.replace(p.opt, **opt_overrides) if opt_overrides else p.opt
    grid = make_grid(gspec)
    y0, yt0, ytbc, target, u0 = p.build(grid, params)
    spec = ScenarioSpec(
        name=name,
        description=p.description,
        grid=gspec,
        params=params,
        y_ini=y0,
        ytilde_ini=yt0,
        ytilde_bc=ytbc,
        target=target,
        u0=u0,
        opt=opt,
    )
    spec.validate(grid)
    return spec


def builtin(name: str) -> ScenarioSpec:
    """The preset exactly as registered (no overrides)."""
    return build_preset(name)
