"""Dirichlet boundary-temperature control of phase-field solidification.

The package couples an explicit finite-difference solver of a
temperature / phase-field system with its adjoint, assembles cost
gradients with respect to the time-dependent boundary temperature, and
drives scheduled gradient descent toward a prescribed terminal crystal
shape.  See the README for the CLI and the built-in scenarios.
"""

from .grid import Grid, GridError, GridSpec, laplacian, make_grid, stability_bound
from .model import (
    LIMITER,
    LINEAR,
    REALISM_BOUND,
    ModelParams,
    PhysicalityReport,
    adjoint_coupling,
    h_term,
    physicality_violation,
    reaction,
    reaction_limiter,
    reaction_linear,
    sigma,
    sigma_prime,
)
from .forward import (
    BlowUpError,
    ForwardSolution,
    StabilityWarning,
    State,
    Trajectory,
    apply_dirichlet,
    solve_forward,
    step,
)
from .adjoint import AdjointResult, AdjointState, adjoint_step, flux_from_p, solve_adjoint
from .objective import CostReport, boundary_quadrature, cost, error_norm, gradient
from .optimize import (
    DescentHistory,
    DescentResult,
    GradCheckReport,
    OptimizeConfig,
    descend,
    fd_gradient_check,
)
from .scenarios import (
    Disc,
    Interval,
    Rect,
    ScenarioSpec,
    build_preset,
    builtin,
    disc_profile,
    box_profile,
    extract_interface,
    indicator_profile,
    preset_names,
    preset_summary,
    smooth_union,
    tanh_profile,
    tanh_step,
)

__version__ = "0.1.0"
