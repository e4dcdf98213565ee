"""Regularised method of fundamental solutions for the 2-D Laplace Cauchy problem."""

__version__ = "0.1.0"

from .errors import ConfigError, GeometryError, MfsError, NoCornerError, SingularityError, SvdConvergenceError
from .geometry import (
    BoundaryGeometry,
    ExactSolution,
    PointSet,
    boundary_point_and_normal,
    cassini_radius,
    distribute_points,
    exact_trace,
    instability_demo,
)
from .assembly import MfsSystem, assemble, basis_normal_derivative, evaluate_expansion, fundamental_solution
from .svd import SvdFactors, compute_svd
from .regularization import (
    AlphaGrid,
    LCurve,
    error_decomposition,
    lcurve_corner,
    lcurve_sample,
    least_norm_solution,
    optimal_alpha,
    tikhonov_solve,
)
from .experiments import (
    CauchyProblem,
    NoiseSpec,
    add_noise,
    boundary_error,
    collocation_sweep,
    noise_sweep,
    param_scan,
    prepare,
    solve_cauchy,
)

__all__ = [name for name in dir() if not name.startswith("_")]
