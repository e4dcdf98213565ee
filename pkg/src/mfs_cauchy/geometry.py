"""
Boundary curves, exact harmonic test solutions and MFS point distributions.

Three domain families are supported:

* the unit disk,
* the interior of a Cassini oval ``r(θ) = a sqrt(cos 2θ + sqrt((b/a)^4 - sin^2 2θ))``,
* an annulus ``r_inner < |x| < r_outer``.

Cauchy data are prescribed on an arc ``Γ₁`` of the outer boundary, given by an
angular interval ``[θ_lo, θ_hi)``.  Collocation points are placed at the
midpoints of ``M`` equal angular cells of that arc, sources at the midpoints of
``N`` equal angular cells of a full circle of radius ``R`` (two circles for the
annulus).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import GeometryError, SingularityError

__all__ = [
    "BoundaryGeometry",
    "PointSet",
    "ExactSolution",
    "cassini_radius",
    "cassini_radius_derivative",
    "boundary_point_and_normal",
    "distribute_points",
    "exact_trace",
    "instability_demo",
    "SINGULARITY_GUARD",
]

QUARTER_ARC = (0.0, 0.5 * math.pi)

#: Exact solutions refuse to evaluate closer than this to a pole.
SINGULARITY_GUARD = 1e-10

_FD_STEP = 1e-7


def _frozen(arr) -> np.ndarray:
    out = np.array(arr, dtype=float)
    out.setflags(write=False)
    return out


# --------------------------------------------------------------------------
# Cassini oval
# --------------------------------------------------------------------------

def _check_cassini(a, b):
    if not (a > 0 and b > a):
        raise GeometryError(f"Cassini oval needs b > a > 0, got a={a}, b={b}")


def cassini_radius(theta, a, b):
    """Polar radius of the Cassini oval with parameters ``b > a > 0``.

    Accepts scalar or array ``theta`` and returns the same shape.
    """
    _check_cassini(a, b)
    theta = np.asarray(theta, dtype=float)
    c2 = np.cos(2.0 * theta)
    s2 = np.sin(2.0 * theta)
    root = np.sqrt((b / a) ** 4 - s2 ** 2)
    r = a * np.sqrt(c2 + root)
    return float(r) if r.ndim == 0 else r


def cassini_radius_derivative(theta, a, b, method="analytic"):
    """dr/dθ of the Cassini oval.

    ``method="analytic"`` uses ``r' = -r sin 2θ / sqrt((b/a)^4 - sin^2 2θ)``;
    ``method="fd"`` is a centred finite difference with step 1e-7, kept as a
    cross-check.
    """
    _check_cassini(a, b)
    theta = np.asarray(theta, dtype=float)
    if method == "analytic":
        s2 = np.sin(2.0 * theta)
        root = np.sqrt((b / a) ** 4 - s2 ** 2)
        dr = -cassini_radius(theta, a, b) * s2 / root
    elif method == "fd":
        h = _FD_STEP
        dr = (cassini_radius(theta + h, a, b) - cassini_radius(theta - h, a, b)) / (2 * h)
    else:
        raise ValueError(f"unknown derivative method {method!r}")
    dr = np.asarray(dr, dtype=float)
    return float(dr) if dr.ndim == 0 else dr


# --------------------------------------------------------------------------
# Geometry
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class BoundaryGeometry:
    """A domain from one of the three supported families.

    Use the :meth:`unit_disk`, :meth:`cassini` and :meth:`annulus`
    constructors rather than filling the fields by hand.
    """

    kind: str
    a: float | None = None
    b: float | None = None
    r_inner: float | None = None
    r_outer: float | None = None
    cauchy_arc: tuple[float, float] = QUARTER_ARC

    def __post_init__(self):
        if self.kind == "disk":
            pass
        elif self.kind == "cassini":
            _check_cassini(self.a, self.b)
        elif self.kind == "annulus":
            if not (self.r_inner is not None and self.r_outer is not None
                    and 0 < self.r_inner < self.r_outer):
                raise GeometryError(
                    f"annulus needs 0 < r_inner < r_outer, got {self.r_inner}, {self.r_outer}")
        else:
            raise GeometryError(f"unknown geometry kind {self.kind!r}")
        lo, hi = (float(t) for t in self.cauchy_arc)
        if not (0.0 <= lo < hi <= 2 * math.pi) or hi - lo >= 2 * math.pi:
            raise GeometryError(f"cauchy_arc must be a strict sub-interval of [0, 2π), got {self.cauchy_arc}")
        object.__setattr__(self, "cauchy_arc", (lo, hi))

    @classmethod
    def unit_disk(cls, cauchy_arc=QUARTER_ARC):
        return cls("disk", cauchy_arc=cauchy_arc)

    @classmethod
    def cassini(cls, a=1.0, b=1.01, cauchy_arc=QUARTER_ARC):
        return cls("cassini", a=float(a), b=float(b), cauchy_arc=cauchy_arc)

    @classmethod
    def annulus(cls, r_inner=0.5, r_outer=1.0, cauchy_arc=QUARTER_ARC):
        return cls("annulus", r_inner=float(r_inner), r_outer=float(r_outer), cauchy_arc=cauchy_arc)

    @property
    def components(self) -> tuple[str, ...]:
        """Names of the boundary components (``"outer"`` and, for the annulus, ``"inner"``)."""
        return ("outer", "inner") if self.kind == "annulus" else ("outer",)

    def _check_which(self, which):
        if which not in ("outer", "inner"):
            raise ValueError(f"which must be 'outer' or 'inner', got {which!r}")
        if which == "inner" and self.kind != "annulus":
            raise GeometryError(f"{self.kind} geometry has no inner boundary")

    def radius(self, theta, which="outer"):
        self._check_which(which)
        theta = np.asarray(theta, dtype=float)
        if self.kind == "cassini":
            return np.asarray(cassini_radius(theta, self.a, self.b))
        if self.kind == "disk":
            return np.ones_like(theta)
        rad = self.r_outer if which == "outer" else self.r_inner
        return np.full_like(theta, rad)

    def radius_derivative(self, theta, which="outer", method="analytic"):
        self._check_which(which)
        theta = np.asarray(theta, dtype=float)
        if self.kind == "cassini":
            return np.asarray(cassini_radius_derivative(theta, self.a, self.b, method))
        return np.zeros_like(theta)

    def max_outer_radius(self) -> float:
        if self.kind == "cassini":
            return self.a * math.sqrt(1.0 + (self.b / self.a) ** 2)
        return 1.0 if self.kind == "disk" else float(self.r_outer)

    def in_closure(self, points) -> np.ndarray:
        """Boolean mask of points lying in the closed domain."""
        p = np.atleast_2d(np.asarray(points, dtype=float))
        rho = np.hypot(p[:, 0], p[:, 1])
        phi = np.mod(np.arctan2(p[:, 1], p[:, 0]), 2 * math.pi)
        inside = rho <= self.radius(phi, "outer")
        if self.kind == "annulus":
            inside &= rho >= self.r_inner
        return inside


def boundary_point_and_normal(geom: BoundaryGeometry, theta, which="outer", derivative="analytic"):
    """Boundary points and unit outward normals at polar angles ``theta``.

    The normal is ``(r' sinθ + r cosθ, -r' cosθ + r sinθ) / sqrt(r'^2 + r^2)``,
    which reduces to the radial direction on circles.  On the inner boundary of
    the annulus the outward normal of the domain points towards the origin, so
    the radial direction is negated.

    Returns
    -------
    point, normal : ndarray
        Shapes ``(2,)`` for scalar ``theta``, else ``(len(theta), 2)``.
    """
    geom._check_which(which)
    scalar = np.ndim(theta) == 0
    th = np.atleast_1d(np.asarray(theta, dtype=float))
    r = geom.radius(th, which)
    dr = geom.radius_derivative(th, which, derivative)
    cos, sin = np.cos(th), np.sin(th)
    point = np.column_stack([r * cos, r * sin])
    scale = np.hypot(dr, r)
    normal = np.column_stack([(dr * sin + r * cos) / scale, (-dr * cos + r * sin) / scale])
    if which == "inner":
        normal = -normal
    if scalar:
        return point[0], normal[0]
    return point, normal


# --------------------------------------------------------------------------
# Point distributions
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class PointSet:
    """Collocation points on the Cauchy arc and the exterior source points."""

    collocation: np.ndarray
    normals: np.ndarray
    collocation_angles: np.ndarray
    sources: np.ndarray
    source_angles: np.ndarray
    radii: tuple[float, ...]
    geometry: BoundaryGeometry = field(repr=False)

    @property
    def M(self) -> int:
        return self.collocation.shape[0]

    @property
    def N(self) -> int:
        return self.sources.shape[0]


def _cell_midpoints(lo, hi, count):
    # θ_i = lo + (hi - lo)(i - 1/2)/count, i = 1..count
    return lo + (hi - lo) * (np.arange(count) + 0.5) / count


def _circle_sources(radius, count):
    ang = 2 * math.pi * np.arange(count) / count + math.pi / count if count else np.empty(0)
    return radius * np.column_stack([np.cos(ang), np.sin(ang)]), ang


def distribute_points(geom: BoundaryGeometry, M: int, N: int, radii, outer_sources: int | None = None) -> PointSet:
    """Uniform collocation points on ``Γ₁`` and sources on exterior circle(s).

    Parameters
    ----------
    geom : BoundaryGeometry
    M, N : int
        Number of collocation and source points.
    radii : float or sequence
        ``R`` for the disk and the oval, ``(R_out, R_in)`` for the annulus.
    outer_sources : int, optional
        Annulus only: how many of the ``N`` sources go on the outer circle.
        Defaults to ``ceil(N/2)``; the rest go on the inner circle.
    """
    if M < 1 or N < 1:
        raise GeometryError(f"need M >= 1 and N >= 1, got M={M}, N={N}")
    radii = tuple(float(r) for r in np.atleast_1d(radii))

    lo, hi = geom.cauchy_arc
    theta = _cell_midpoints(lo, hi, M)
    colloc, normals = boundary_point_and_normal(geom, theta, "outer")

    if geom.kind == "annulus":
        if len(radii) != 2:
            raise GeometryError("annulus needs radii=(R_out, R_in)")
        r_out, r_in = radii
        if not (r_out > geom.r_outer and 0 < r_in < geom.r_inner):
            raise GeometryError(
                f"annulus sources need R_out > {geom.r_outer} and 0 < R_in < {geom.r_inner}, got {radii}")
        n_out = math.ceil(N / 2) if outer_sources is None else int(outer_sources)
        if not 0 <= n_out <= N:
            raise GeometryError(f"outer_sources must lie in [0, N], got {outer_sources}")
        s_out, a_out = _circle_sources(r_out, n_out)
        s_in, a_in = _circle_sources(r_in, N - n_out)
        sources = np.vstack([s_out, s_in])
        angles = np.concatenate([a_out, a_in])
    else:
        if len(radii) != 1:
            raise GeometryError(f"{geom.kind} geometry takes a single source radius")
        sources, angles = _circle_sources(radii[0], N)

    if np.any(geom.in_closure(sources)):
        raise GeometryError(f"source radii {radii} put sources inside the closed domain")

    return PointSet(
        collocation=_frozen(colloc),
        normals=_frozen(normals),
        collocation_angles=_frozen(theta),
        sources=_frozen(sources),
        source_angles=_frozen(angles),
        radii=radii,
        geometry=geom,
    )


# --------------------------------------------------------------------------
# Exact solutions
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ExactSolution:
    """One of the closed-form harmonic functions used as ground truth.

    ``exp_trig``:       u = e^x cos y - e^y sin x
    ``dipole``:         u = ln|x - (x0, 0)| - ln|x + (x0, 0)|
    ``inverse_radial``: u = x / (x^2 + y^2)
    ``sine_cosh``:      u = n^-k sin(n x) cosh(n y)
    """

    kind: str
    offset: float = 0.2
    n: float = 1.0
    k: float = 1.0

    def __post_init__(self):
        if self.kind not in ("exp_trig", "dipole", "inverse_radial", "sine_cosh"):
            raise ValueError(f"unknown exact solution {self.kind!r}")
        if self.kind == "dipole" and not self.offset > 0:
            raise ValueError("dipole offset must be positive")
        if self.kind == "sine_cosh" and not (self.n >= 1 and self.k > 0):
            raise ValueError("sine_cosh needs n >= 1 and k > 0")

    @classmethod
    def exp_trig(cls):
        return cls("exp_trig")

    @classmethod
    def dipole(cls, offset=0.2):
        return cls("dipole", offset=float(offset))

    @classmethod
    def inverse_radial(cls):
        return cls("inverse_radial")

    @classmethod
    def sine_cosh(cls, n, k):
        return cls("sine_cosh", n=float(n), k=float(k))

    def singular_points(self) -> np.ndarray:
        if self.kind == "dipole":
            return np.array([[self.offset, 0.0], [-self.offset, 0.0]])
        if self.kind == "inverse_radial":
            return np.zeros((1, 2))
        return np.empty((0, 2))

    def _guard(self, p):
        sing = self.singular_points()
        if len(sing) == 0:
            return
        dist = np.hypot(p[:, None, 0] - sing[None, :, 0], p[:, None, 1] - sing[None, :, 1])
        if np.any(dist < SINGULARITY_GUARD):
            raise SingularityError(f"{self.kind} evaluated within {SINGULARITY_GUARD} of a singular point")

    def value(self, points) -> np.ndarray:
        p = np.atleast_2d(np.asarray(points, dtype=float))
        self._guard(p)
        x, y = p[:, 0], p[:, 1]
        if self.kind == "exp_trig":
            return np.exp(x) * np.cos(y) - np.exp(y) * np.sin(x)
        if self.kind == "dipole":
            x0 = self.offset
            return 0.5 * (np.log((x - x0) ** 2 + y ** 2) - np.log((x + x0) ** 2 + y ** 2))
        if self.kind == "inverse_radial":
            return x / (x ** 2 + y ** 2)
        return self.n ** -self.k * np.sin(self.n * x) * np.cosh(self.n * y)

    def gradient(self, points) -> np.ndarray:
        p = np.atleast_2d(np.asarray(points, dtype=float))
        self._guard(p)
        x, y = p[:, 0], p[:, 1]
        if self.kind == "exp_trig":
            ux = np.exp(x) * np.cos(y) - np.exp(y) * np.cos(x)
            uy = -np.exp(x) * np.sin(y) - np.exp(y) * np.sin(x)
        elif self.kind == "dipole":
            x0 = self.offset
            dm = (x - x0) ** 2 + y ** 2
            dp = (x + x0) ** 2 + y ** 2
            ux = (x - x0) / dm - (x + x0) / dp
            uy = y / dm - y / dp
        elif self.kind == "inverse_radial":
            r4 = (x ** 2 + y ** 2) ** 2
            ux = (y ** 2 - x ** 2) / r4
            uy = -2 * x * y / r4
        else:
            amp = self.n ** (1 - self.k)
            ux = amp * np.cos(self.n * x) * np.cosh(self.n * y)
            uy = amp * np.sin(self.n * x) * np.sinh(self.n * y)
        return np.column_stack([ux, uy])


def exact_trace(sol: ExactSolution, pts: PointSet):
    """Exact Cauchy data ``(f, g) = (u, ∂u/∂n)`` at the collocation points."""
    f = sol.value(pts.collocation)
    g = np.einsum("ij,ij->i", sol.gradient(pts.collocation), pts.normals)
    return f, g


def instability_demo(n, k, samples=1000):
    """Sup norms of the classical unstable Cauchy pair on the unit square.

    Data ``f = n^-k sin(n x)`` on ``[0, 1] x {0}`` and solution
    ``u = n^-k sin(n x) cosh(n y)`` on ``[0, 1]^2``, both sampled on a uniform
    grid with ``samples`` points per axis.

    Returns
    -------
    (sup_f, sup_u) : tuple of float
    """
    if not n >= 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if not k > 0:
        raise ValueError(f"k must be positive, got {k}")
    if samples < 2:
        raise ValueError("need at least 2 samples per axis")
    t = np.linspace(0.0, 1.0, samples)
    sin_part = np.abs(np.sin(n * t)) * n ** -float(k)
    sup_f = float(sin_part.max())
    sup_u = float((sin_part[:, None] * np.cosh(n * t)[None, :]).max())
    return sup_f, sup_u
