"""
End-to-end Cauchy-problem experiments.

A :class:`CauchyProblem` fixes the geometry, exact solution and MFS layout.
:func:`prepare` does everything that does not depend on the noise realisation
(point placement, assembly, SVD, evaluation matrix on the boundary), so sweeps
over noise levels and seeds reuse a single factorisation.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .assembly import MfsSystem, assemble, evaluation_matrix
from .errors import MfsError
from .geometry import BoundaryGeometry, ExactSolution, PointSet, boundary_point_and_normal, distribute_points, exact_trace
from .regularization import (
    AlphaGrid,
    LCurve,
    least_norm_solution,
    lcurve_corner,
    lcurve_sample,
    optimal_alpha,
    tikhonov_norms,
    tikhonov_weights,
)
from .svd import SvdFactors, compute_svd

log = logging.getLogger(__name__)

__all__ = [
    "NoiseSpec",
    "CauchyProblem",
    "PreparedProblem",
    "ExperimentReport",
    "NoiseSweepReport",
    "ParamScanReport",
    "CollocationSweepReport",
    "add_noise",
    "boundary_error",
    "prepare",
    "solve_cauchy",
    "interior_error",
    "noise_sweep",
    "param_scan",
    "collocation_sweep",
    "FIT_WINDOW",
]

#: δ interval over which the sweep regressions are fitted.
FIT_WINDOW = (1e-9, 1.0)


@dataclass(frozen=True)
class NoiseSpec:
    """Uniform relative noise of level ``delta`` drawn from a seeded generator."""

    delta: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not self.delta >= 0:
            raise ValueError(f"noise level must be >= 0, got {self.delta}")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ValueError("seed must be an unsigned 64-bit integer")


def add_noise(values, spec: NoiseSpec) -> np.ndarray:
    """Multiply each entry by ``1 + ε_i`` with ``ε_i ~ U[-δ, δ]`` i.i.d.

    The draws come from a PCG64 generator seeded with ``spec.seed``, in index
    order, so calling this on the stacked ``(f; g)`` vector gives independent
    noise on the two data channels.
    """
    values = np.asarray(values, dtype=float)
    if spec.delta == 0:
        return values.copy()
    rng = np.random.default_rng(int(spec.seed))
    eps = rng.uniform(-spec.delta, spec.delta, size=values.shape)
    return values * (1.0 + eps)


def boundary_error(u_n, u_exact) -> float:
    """Maximum relative error ``max|u_N - u| / max|u|`` over the sample points."""
    u_n = np.asarray(u_n, dtype=float)
    u_exact = np.asarray(u_exact, dtype=float)
    scale = np.max(np.abs(u_exact))
    if not scale > 0:
        raise ValueError("exact solution vanishes on the evaluation grid")
    return float(np.max(np.abs(u_n - u_exact)) / scale)


# --------------------------------------------------------------------------
# problem setup
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class CauchyProblem:
    """Geometry, exact solution and MFS parameters of one experiment.

    ``radii`` is ``(R,)`` for the disk and the oval, ``(R_out, R_in)`` for the
    annulus.  ``eval_points`` boundary samples are taken per boundary
    component, uniformly in the polar angle over the full circle.
    """

    geometry: BoundaryGeometry
    exact: ExactSolution
    M: int
    N: int
    radii: tuple[float, ...]
    outer_sources: int | None = None
    eval_points: int = 2000

    def __post_init__(self):
        object.__setattr__(self, "radii", tuple(float(r) for r in np.atleast_1d(self.radii)))
        if self.eval_points < 1:
            raise ValueError("eval_points must be positive")

    def describe(self) -> dict:
        return {
            "geometry": asdict(self.geometry),
            "exact": asdict(self.exact),
            "M": self.M,
            "N": self.N,
            "radii": list(self.radii),
            "outer_sources": self.outer_sources,
            "eval_points": self.eval_points,
        }


@dataclass(frozen=True)
class PreparedProblem:
    problem: CauchyProblem
    points: PointSet
    system: MfsSystem
    svd: SvdFactors
    exact_weights: np.ndarray
    eval_theta: np.ndarray
    eval_component: np.ndarray
    eval_matrix: np.ndarray
    eval_exact: np.ndarray


def boundary_samples(geom: BoundaryGeometry, count: int):
    """Polar angles, component labels and points of the error-evaluation grid."""
    theta = 2 * math.pi * np.arange(count) / count
    thetas, labels, pts = [], [], []
    for which in geom.components:
        p, _ = boundary_point_and_normal(geom, theta, which)
        thetas.append(theta)
        labels.append(np.full(count, which))
        pts.append(p)
    return np.concatenate(thetas), np.concatenate(labels), np.vstack(pts)


def prepare(problem: CauchyProblem) -> PreparedProblem:
    """Place points, assemble with exact data and factorise."""
    pts = distribute_points(problem.geometry, problem.M, problem.N, problem.radii, problem.outer_sources)
    f, g = exact_trace(problem.exact, pts)
    system = assemble(pts, f, g)
    if system.matrix.shape[0] < system.matrix.shape[1]:
        raise MfsError(f"need 2M >= N, got 2M={system.matrix.shape[0]}, N={system.matrix.shape[1]}")
    svd = compute_svd(system.matrix)
    theta, labels, targets = boundary_samples(problem.geometry, problem.eval_points)
    return PreparedProblem(
        problem=problem,
        points=pts,
        system=system,
        svd=svd,
        exact_weights=least_norm_solution(svd, system.rhs),
        eval_theta=theta,
        eval_component=labels,
        eval_matrix=evaluation_matrix(pts, targets),
        eval_exact=problem.exact.value(targets),
    )


# --------------------------------------------------------------------------
# single solve
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ExperimentReport:
    """Outcome of one regularised solve.

    ``alpha`` is the parameter actually used: the L-curve corner unless an
    override was requested.  ``error_at`` maps extra α values to their
    boundary errors.
    """

    problem: CauchyProblem
    noise: NoiseSpec
    alpha: float
    max_relative_error: float
    suitable_alpha: float
    error_at_suitable: float
    optimal_alpha: float
    error_at_optimal: float
    residual_norm: float
    solution_norm: float
    weights: np.ndarray
    trace_theta: np.ndarray
    trace_component: np.ndarray
    trace_approx: np.ndarray
    trace_exact: np.ndarray
    lcurve: LCurve = field(repr=False)
    error_at: dict = field(default_factory=dict)
    rank: int = 0

    def summary(self) -> dict:
        return {
            "max_relative_error": self.max_relative_error,
            "alpha": self.alpha,
            "suitable_alpha": self.suitable_alpha,
            "error_at_suitable_alpha": self.error_at_suitable,
            "optimal_alpha": self.optimal_alpha,
            "error_at_optimal_alpha": self.error_at_optimal,
            "residual_norm": self.residual_norm,
            "solution_norm": self.solution_norm,
            "errors_at_alpha": [{"alpha": a, "max_relative_error": e} for a, e in self.error_at.items()],
            "numerical_rank": self.rank,
            "delta": self.noise.delta,
            "seed": self.noise.seed,
        }


def _errors_for(prep: PreparedProblem, b, alphas):
    W = tikhonov_weights(prep.svd, b, alphas)
    U = W @ prep.eval_matrix.T
    scale = np.max(np.abs(prep.eval_exact))
    return W, np.max(np.abs(U - prep.eval_exact[None, :]), axis=1) / scale


def noisy_rhs(prep: PreparedProblem, noise: NoiseSpec) -> np.ndarray:
    return add_noise(prep.system.rhs, noise)


def solve_cauchy(problem: CauchyProblem | PreparedProblem, noise: NoiseSpec, grid: AlphaGrid | None = None,
                 alpha: float | None = None, extra_alphas=(), residual="compatible") -> ExperimentReport:
    """Noisy data -> L-curve corner -> regularised weights -> boundary error.

    ``problem`` may be a :class:`PreparedProblem` to skip re-factorising.
    ``alpha`` overrides the corner (``0`` gives the unregularised least-norm
    solution); the corner and α_opt are still reported.  Without an override
    a curve that has no corner raises :class:`NoCornerError`; with one, the
    report carries NaN for the corner.
    """
    prep = problem if isinstance(problem, PreparedProblem) else prepare(problem)
    grid = grid or AlphaGrid()
    b = noisy_rhs(prep, noise)
    curve = lcurve_sample(prep.svd, b, grid, residual)
    if curve.has_corner or alpha is None:
        corner = lcurve_corner(curve)
    else:
        log.info("L-curve has no corner; using alpha=%g", alpha)
        corner = math.nan
    a_opt = optimal_alpha(prep.svd, b, prep.exact_weights, grid)
    used = corner if alpha is None else float(alpha)
    extra = [float(a) for a in extra_alphas]
    probe = [used, 0.0 if math.isnan(corner) else corner, a_opt] + extra
    W, errs = _errors_for(prep, b, probe)
    rho, _, eta = tikhonov_norms(prep.svd, b, [used])
    return ExperimentReport(
        problem=prep.problem,
        noise=noise,
        alpha=used,
        max_relative_error=float(errs[0]),
        suitable_alpha=corner,
        error_at_suitable=math.nan if math.isnan(corner) else float(errs[1]),
        optimal_alpha=a_opt,
        error_at_optimal=float(errs[2]),
        residual_norm=float(rho[0]),
        solution_norm=float(eta[0]),
        weights=W[0],
        trace_theta=prep.eval_theta,
        trace_component=prep.eval_component,
        trace_approx=prep.eval_matrix @ W[0],
        trace_exact=prep.eval_exact,
        lcurve=curve,
        error_at=dict(zip(extra, (float(e) for e in errs[3:]))),
        rank=prep.svd.rank,
    )


def interior_error(prep: PreparedProblem, weights, n_radial=50, n_angular=50) -> float:
    """Max interior error on a polar grid, relative to ``max|u|`` on the boundary.

    Radial samples sit strictly inside the domain at fractions
    ``k / (n_radial + 1)`` of the way from the inner boundary (or the origin)
    to the outer one.
    """
    geom = prep.problem.geometry
    theta = 2 * math.pi * np.arange(n_angular) / n_angular
    frac = np.arange(1, n_radial + 1) / (n_radial + 1)
    r_out = geom.radius(theta, "outer")
    r_in = geom.radius(theta, "inner") if geom.kind == "annulus" else np.zeros_like(theta)
    rr = r_in[None, :] + frac[:, None] * (r_out - r_in)[None, :]
    pts = np.column_stack([(rr * np.cos(theta)).ravel(), (rr * np.sin(theta)).ravel()])
    approx = evaluation_matrix(prep.points, pts) @ np.asarray(weights, dtype=float)
    exact = prep.problem.exact.value(pts)
    return float(np.max(np.abs(approx - exact)) / np.max(np.abs(prep.eval_exact)))


# --------------------------------------------------------------------------
# sweeps and scans
# --------------------------------------------------------------------------

def _map(fn, items, jobs):
    items = list(items)
    if jobs is None or jobs <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def _fit(x, y):
    slope, intercept = np.polyfit(np.log10(x), np.log10(y), 1)
    return {"slope": float(slope), "intercept": float(intercept)}


@dataclass(frozen=True)
class NoiseSweepReport:
    """Per-(δ, seed) rows, per-δ medians and the log-log regression fits.

    Each row is ``(delta, seed, optimal_alpha, error_at_optimal,
    suitable_alpha, error_at_suitable)``.  The fits are ``None`` when fewer
    than two distinct δ fall inside :data:`FIT_WINDOW`.
    """

    rows: list
    medians: list
    error_fit: dict | None
    alpha_fit: dict | None

    def summary(self) -> dict:
        return {"error_fit": self.error_fit, "alpha_fit": self.alpha_fit, "medians": self.medians}


def _sweep_cell(args):
    prep, delta, seed, grid, residual = args
    b = noisy_rhs(prep, NoiseSpec(delta, seed))
    a_opt = optimal_alpha(prep.svd, b, prep.exact_weights, grid)
    try:
        corner = lcurve_corner(lcurve_sample(prep.svd, b, grid, residual))
    except MfsError:
        corner = math.nan
    alphas = [a_opt] + ([corner] if math.isfinite(corner) else [])
    _, errs = _errors_for(prep, b, alphas)
    e_corner = float(errs[1]) if math.isfinite(corner) else math.nan
    return (float(delta), int(seed), a_opt, float(errs[0]), corner, e_corner)


def noise_sweep(problem: CauchyProblem | PreparedProblem, deltas, seeds, grid: AlphaGrid | None = None,
                residual="compatible", jobs=1) -> NoiseSweepReport:
    """Boundary error and α_opt against the noise level, with regression lines.

    For every δ the medians over ``seeds`` of ``e(α_opt)`` and ``α_opt`` are
    fitted by least squares in log10-log10 scale over :data:`FIT_WINDOW`.
    """
    deltas = [float(d) for d in deltas]
    seeds = [int(s) for s in seeds]
    if not deltas:
        raise ValueError("noise sweep needs at least one delta")
    if not seeds:
        raise ValueError("noise sweep needs at least one seed")
    if any(not d > 0 for d in deltas):
        raise ValueError("noise levels must be positive")
    prep = problem if isinstance(problem, PreparedProblem) else prepare(problem)
    grid = grid or AlphaGrid()
    cells = [(prep, d, s, grid, residual) for d in deltas for s in seeds]
    rows = _map(_sweep_cell, cells, jobs)

    medians = []
    for d in dict.fromkeys(deltas):
        sel = [r for r in rows if r[0] == d]
        medians.append({
            "delta": d,
            "optimal_alpha": float(np.median([r[2] for r in sel])),
            "error_at_optimal": float(np.median([r[3] for r in sel])),
        })
    lo, hi = FIT_WINDOW
    window = [m for m in medians if lo <= m["delta"] <= hi]
    if len({m["delta"] for m in window}) < 2:
        log.warning("fewer than two noise levels in the fit window; regression skipped")
        return NoiseSweepReport(rows, medians, None, None)
    x = [m["delta"] for m in window]
    return NoiseSweepReport(
        rows,
        medians,
        _fit(x, [m["error_at_optimal"] for m in window]),
        _fit(x, [m["optimal_alpha"] for m in window]),
    )


def _scan_cell(args):
    problem, noise, grid, residual = args
    try:
        rep = solve_cauchy(problem, noise, grid, residual=residual)
        return rep.max_relative_error, rep.suitable_alpha, ""
    except (MfsError, ValueError) as exc:
        return math.nan, math.nan, f"{type(exc).__name__}: {exc}"


@dataclass(frozen=True)
class ParamScanReport:
    """Rows ``(N, R, max_relative_error, suitable_alpha, error_message)``.

    Failed cells carry NaN values and a non-empty message.
    """

    rows: list

    def error_table(self):
        """``(N values, R values, e[i_R, j_N])`` as a dense array for contouring."""
        Ns = sorted({r[0] for r in self.rows})
        Rs = sorted({r[1] for r in self.rows})
        table = np.full((len(Rs), len(Ns)), np.nan)
        for N, R, e, *_ in self.rows:
            table[Rs.index(R), Ns.index(N)] = e
        return Ns, Rs, table


def param_scan(geometry: BoundaryGeometry, exact: ExactSolution, M, N_values, R_values, noise: NoiseSpec,
               grid: AlphaGrid | None = None, eval_points=2000, residual="compatible", jobs=1) -> ParamScanReport:
    """Boundary error at the L-curve corner over an ``(N, R)`` grid.

    For the annulus each ``R`` entry is an ``(R_out, R_in)`` pair.
    """
    cells, keys = [], []
    for R in R_values:
        for N in N_values:
            radii = tuple(np.atleast_1d(R).astype(float))
            try:
                problem = CauchyProblem(geometry, exact, int(M), int(N), radii, eval_points=eval_points)
            except (MfsError, ValueError) as exc:
                problem = exc
            keys.append((int(N), radii[0] if len(radii) == 1 else radii))
            cells.append((problem, noise, grid, residual))
    live = [c for c in cells if isinstance(c[0], CauchyProblem)]
    results = iter(_map(_scan_cell, live, jobs))
    rows = []
    for (N, R), cell in zip(keys, cells):
        if isinstance(cell[0], CauchyProblem):
            rows.append((N, R, *next(results)))
        else:
            rows.append((N, R, math.nan, math.nan, f"{type(cell[0]).__name__}: {cell[0]}"))
    return ParamScanReport(rows)


@dataclass(frozen=True)
class CollocationSweepReport:
    """Rows ``(M, max_relative_error, suitable_alpha)``."""

    rows: list


def collocation_sweep(geometry: BoundaryGeometry, exact: ExactSolution, M_values, N, radii, noise: NoiseSpec,
                      grid: AlphaGrid | None = None, eval_points=2000, residual="compatible", jobs=1):
    """Boundary error at the L-curve corner for each number of collocation points."""
    M_values = [int(m) for m in M_values]
    if any(b <= a for a, b in zip(M_values, M_values[1:])):
        raise ValueError("M values must be strictly increasing")
    cells = [(CauchyProblem(geometry, exact, m, int(N), radii, eval_points=eval_points), noise, grid, residual)
             for m in M_values]
    out = _map(_scan_cell, cells, jobs)
    return CollocationSweepReport([(m, e, a) for m, (e, a, _) in zip(M_values, out)])
