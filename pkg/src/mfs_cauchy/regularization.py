"""
Least-norm and Tikhonov solutions from an SVD, and L-curve corner detection.

With ``A = sum_i σ_i u_i v_iᵀ`` and Fourier coefficients ``β_i = u_i · b``,
the Tikhonov solution for parameter ``α`` is

    w_α = sum_{i <= r} γ_i β_i / σ_i v_i,    γ_i = σ_i² / (σ_i² + α²),

so the residual and solution norms along the whole α axis come in closed
form without re-solving.

Corner detection
----------------
The L-curve is the parametric curve ``(log ρ(α), log η(α))``.  Its signed
curvature is estimated from central differences with respect to ``log α`` on
a log-uniform grid, smoothed by a 5-point local quadratic fit, and maximised.
The maximiser is then refined once on a finer grid spanning one decade on
either side.

By default the curvature uses the *compatible* residual
``ρ_c = ||U_rᵀ (A w_α - b)||``, i.e. the residual without the component of
``b`` orthogonal to the range of ``A``.  For the tall MFS systems that
incompatible component (mostly noise) dominates ``ρ`` and squeezes the
log-residual axis, which pushes the maximum-curvature point about a decade
towards over-regularisation.  ``residual="full"`` uses the true residual.
The stored ``residual_norms`` are always the true Euclidean residuals.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.signal import savgol_filter

from .errors import NoCornerError
from .svd import SvdFactors, compute_svd

__all__ = [
    "AlphaGrid",
    "RegularizedSolution",
    "LCurve",
    "compute_svd",
    "filter_factors",
    "least_norm_solution",
    "tikhonov_solve",
    "tikhonov_weights",
    "tikhonov_norms",
    "error_decomposition",
    "lcurve_curvature",
    "lcurve_sample",
    "lcurve_corner",
    "optimal_alpha",
    "weight_errors",
    "MIN_CORNER_CURVATURE",
]

_RESIDUAL_MODES = ("compatible", "full")

#: Peak curvatures below this (natural-log axes) mean the curve has no corner.
MIN_CORNER_CURVATURE = 0.5


@dataclass(frozen=True)
class AlphaGrid:
    """Log-uniform regularisation-parameter grid.

    With ``relative=True`` (default) the bounds are multiples of ``σ_1``.
    ``refine_points`` points over ``± refine_decades`` around a coarse optimum
    are used for the refinement pass.
    """

    lo: float = 1e-10
    hi: float = 1.0
    points: int = 200
    relative: bool = True
    refine_points: int = 50
    refine_decades: float = 1.0

    def __post_init__(self):
        if not (0 < self.lo < self.hi):
            raise ValueError(f"alpha grid needs 0 < lo < hi, got lo={self.lo}, hi={self.hi}")
        if self.points < 10:
            raise ValueError(f"alpha grid needs at least 10 points, got {self.points}")
        if self.refine_points < 5:
            raise ValueError("refinement needs at least 5 points")
        if not self.refine_decades > 0:
            raise ValueError("refine_decades must be positive")

    def values(self, sigma_max=1.0) -> np.ndarray:
        scale = float(sigma_max) if self.relative else 1.0
        return np.logspace(np.log10(self.lo * scale), np.log10(self.hi * scale), self.points)

    def refined(self, center) -> np.ndarray:
        c = np.log10(center)
        return np.logspace(c - self.refine_decades, c + self.refine_decades, self.refine_points)

    def step(self) -> float:
        """Coarse grid spacing as a multiplicative factor."""
        return (self.hi / self.lo) ** (1.0 / (self.points - 1))


@dataclass(frozen=True)
class RegularizedSolution:
    weights: np.ndarray
    alpha: float
    residual_norm: float
    solution_norm: float


# --------------------------------------------------------------------------
# closed forms
# --------------------------------------------------------------------------

def filter_factors(svd: SvdFactors, alpha) -> np.ndarray:
    """Tikhonov filter factors for the first ``rank`` singular values."""
    s = svd.singular_values[: svd.rank]
    s2 = s * s
    return s2 / (s2 + float(alpha) ** 2)


def _split(svd: SvdFactors, b):
    b = np.asarray(b, dtype=float).ravel()
    if b.shape != (svd.shape[0],):
        raise ValueError(f"rhs must have length {svd.shape[0]}, got {b.size}")
    Ur = svd.left_vectors[:, : svd.rank]
    beta = Ur.T @ b
    perp = float(np.linalg.norm(b - Ur @ beta))
    return beta, perp


def _gammas(svd, alphas):
    s = svd.singular_values[: svd.rank]
    s2 = s * s
    a2 = np.asarray(alphas, dtype=float)[:, None] ** 2
    return s2 / (s2 + a2)


def tikhonov_norms(svd: SvdFactors, b, alphas):
    """Residual, compatible residual and solution norms over ``alphas``.

    Returns
    -------
    rho, rho_compatible, eta : ndarray
    """
    beta, perp = _split(svd, b)
    s = svd.singular_values[: svd.rank]
    gam = _gammas(svd, alphas)
    rho_c = np.sqrt(np.sum(((1.0 - gam) * beta) ** 2, axis=1))
    rho = np.hypot(rho_c, perp)
    eta = np.sqrt(np.sum((gam * beta / s) ** 2, axis=1))
    return rho, rho_c, eta


def tikhonov_weights(svd: SvdFactors, b, alphas) -> np.ndarray:
    """Regularised weight vectors, one row per α."""
    beta, _ = _split(svd, b)
    s = svd.singular_values[: svd.rank]
    gam = _gammas(svd, alphas)
    return (gam * (beta / s)) @ svd.right_vectors[:, : svd.rank].T


def least_norm_solution(svd: SvdFactors, b) -> np.ndarray:
    """Minimum-norm least-squares solution ``sum_{i<=r} (u_i·b)/σ_i v_i``."""
    beta, _ = _split(svd, b)
    s = svd.singular_values[: svd.rank]
    return svd.right_vectors[:, : svd.rank] @ (beta / s)


def tikhonov_solve(svd: SvdFactors, b, alpha) -> RegularizedSolution:
    """Minimiser of ``||A w - b||² + α² ||w||²`` (least-norm solution for α = 0)."""
    alpha = float(alpha)
    if not alpha >= 0:
        raise ValueError(f"alpha must be non-negative, got {alpha}")
    w = tikhonov_weights(svd, b, [alpha])[0]
    rho, _, _ = tikhonov_norms(svd, b, [alpha])
    return RegularizedSolution(w, alpha, float(rho[0]), float(np.linalg.norm(w)))


def error_decomposition(svd: SvdFactors, b_exact, b_noisy, alpha):
    """Split ``w_α(b_noisy) - w_0(b_exact)`` into perturbation and regularisation parts.

    Returns
    -------
    perturbation, regularization : ndarray
        ``sum γ_i (u_i·Δb)/σ_i v_i`` and ``sum (γ_i - 1)(u_i·b)/σ_i v_i``.
    """
    beta, _ = _split(svd, b_exact)
    s = svd.singular_values[: svd.rank]
    gam = filter_factors(svd, alpha)
    Vr = svd.right_vectors[:, : svd.rank]
    delta_beta = svd.left_vectors[:, : svd.rank].T @ (
        np.asarray(b_noisy, dtype=float) - np.asarray(b_exact, dtype=float))
    perturbation = Vr @ (gam * delta_beta / s)
    regularization = Vr @ ((gam - 1.0) * beta / s)
    return perturbation, regularization


def weight_errors(svd: SvdFactors, b, w_ref, alphas) -> np.ndarray:
    """``||w_ref - w_α||`` over ``alphas``."""
    W = tikhonov_weights(svd, b, alphas)
    return np.linalg.norm(W - np.asarray(w_ref, dtype=float)[None, :], axis=1)


# --------------------------------------------------------------------------
# L-curve
# --------------------------------------------------------------------------

def lcurve_curvature(alphas, rho, eta, smooth=True) -> np.ndarray:
    """Signed curvature of ``(log ρ, log η)`` parametrised by ``log α``.

    Positive values mean the curve turns counter-clockwise, which is the
    sense of the L-curve corner.  Degenerate points (non-positive norms, or
    a curve that does not move) are returned as NaN.
    """
    alphas = np.asarray(alphas, dtype=float)
    rho = np.asarray(rho, dtype=float)
    eta = np.asarray(eta, dtype=float)
    valid = (rho > 0) & (eta > 0) & np.isfinite(rho) & np.isfinite(eta)
    if np.count_nonzero(valid) < 5:
        raise NoCornerError("L-curve has fewer than 5 non-degenerate points")
    t = np.log(alphas)
    with np.errstate(divide="ignore", invalid="ignore"):
        x = np.where(valid, np.log(np.where(valid, rho, 1.0)), np.nan)
        y = np.where(valid, np.log(np.where(valid, eta, 1.0)), np.nan)
        dx = np.gradient(x, t)
        dy = np.gradient(y, t)
        ddx = np.gradient(dx, t)
        ddy = np.gradient(dy, t)
        speed2 = dx * dx + dy * dy
        kappa = (dx * ddy - ddx * dy) / speed2 ** 1.5
    finite_speed = speed2[np.isfinite(speed2)]
    if finite_speed.size == 0 or finite_speed.max() <= 0:
        raise NoCornerError("L-curve does not move along the alpha grid")
    # curvature of a curve that has barely moved is pure rounding noise
    still = ~(speed2 > 1e-12 * finite_speed.max())
    kappa[still | ~np.isfinite(kappa)] = np.nan
    if smooth and kappa.size >= 5:
        bad = np.isnan(kappa)
        kappa = savgol_filter(np.where(bad, 0.0, kappa), 5, 2, mode="interp")
        kappa[bad] = np.nan
    return kappa


def _argmax_prefer_larger(values) -> int:
    v = np.where(np.isnan(values), -np.inf, values)
    if not np.any(np.isfinite(v)):
        raise NoCornerError("curvature is undefined everywhere on the grid")
    return int(v.size - 1 - np.argmax(v[::-1]))


def _argmin_prefer_larger(values) -> int:
    return _argmax_prefer_larger(-np.asarray(values, dtype=float))


@dataclass(frozen=True)
class LCurve:
    """Sampled L-curve with curvature and the coarse corner.

    ``corner_index`` is ``None`` when the peak curvature stays below
    ``min_curvature``: a nearly straight curve (typically exact data) has no
    corner worth the name.
    """

    alphas: np.ndarray
    residual_norms: np.ndarray
    solution_norms: np.ndarray
    compatible_residual_norms: np.ndarray
    curvatures: np.ndarray
    corner_index: int | None
    residual_mode: str = "compatible"
    grid: AlphaGrid = field(default_factory=AlphaGrid, repr=False)
    _svd: SvdFactors | None = field(default=None, repr=False, compare=False)
    _rhs: np.ndarray | None = field(default=None, repr=False, compare=False)

    @property
    def points(self) -> np.ndarray:
        """``(log10 ρ, log10 η)`` per α."""
        with np.errstate(divide="ignore"):
            return np.column_stack([np.log10(self.residual_norms), np.log10(self.solution_norms)])

    @property
    def has_corner(self) -> bool:
        return self.corner_index is not None

    @property
    def corner_alpha(self) -> float:
        if self.corner_index is None:
            raise NoCornerError(
                f"L-curve peak curvature {np.nanmax(self.curvatures):.3g} is too small for a corner")
        return float(self.alphas[self.corner_index])


def _curvature_on(svd, b, alphas, residual):
    rho, rho_c, eta = tikhonov_norms(svd, b, alphas)
    kappa = lcurve_curvature(alphas, rho_c if residual == "compatible" else rho, eta)
    return rho, rho_c, eta, kappa


def lcurve_sample(svd: SvdFactors, b, grid: AlphaGrid | None = None, residual="compatible",
                  min_curvature=MIN_CORNER_CURVATURE) -> LCurve:
    """Sample the L-curve on ``grid`` and locate its coarse corner.

    Raises
    ------
    NoCornerError
        If the curve is degenerate (e.g. ``b = 0``), so that no curvature
        can be computed at all.
    """
    if residual not in _RESIDUAL_MODES:
        raise ValueError(f"residual must be one of {_RESIDUAL_MODES}, got {residual!r}")
    grid = grid or AlphaGrid()
    if svd.rank == 0:
        raise NoCornerError("matrix has numerical rank 0")
    alphas = grid.values(svd.singular_values[0])
    rho, rho_c, eta, kappa = _curvature_on(svd, b, alphas, residual)
    idx = _argmax_prefer_larger(kappa)
    if not kappa[idx] >= min_curvature:
        idx = None
    b = np.array(b, dtype=float)
    b.setflags(write=False)
    return LCurve(alphas, rho, eta, rho_c, kappa, idx, residual, grid, svd, b)


def lcurve_corner(curve: LCurve, refine=True) -> float:
    """α at the maximum-curvature point, refined once around the coarse corner.

    Raises :class:`NoCornerError` for curves without a corner.
    """
    if curve.curvatures.size < 5:
        raise NoCornerError("L-curve needs at least 5 points")
    coarse = curve.corner_alpha
    if not refine or curve._svd is None:
        return coarse
    fine = curve.grid.refined(coarse)
    _, _, _, kappa = _curvature_on(curve._svd, curve._rhs, fine, curve.residual_mode)
    return float(fine[_argmax_prefer_larger(kappa)])


def optimal_alpha(svd: SvdFactors, b_noisy, w_exact, grid: AlphaGrid | None = None) -> float:
    """α minimising ``||w_exact - w_α||`` over the grid, refined once."""
    grid = grid or AlphaGrid()
    alphas = grid.values(svd.singular_values[0])
    coarse = alphas[_argmin_prefer_larger(weight_errors(svd, b_noisy, w_exact, alphas))]
    fine = grid.refined(coarse)
    return float(fine[_argmin_prefer_larger(weight_errors(svd, b_noisy, w_exact, fine))])
