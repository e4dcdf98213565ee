"""
MFS kernels and the collocation system.

The potential is approximated by ``u_N(x) = sum_j w_j φ*(|x - ξ_j|)`` with the
2-D fundamental solution ``φ*(r) = -ln(r) / (2π)``.  Forcing ``u_N = f`` and
``∂u_N/∂n = g`` at the ``M`` collocation points gives a ``2M x N`` system
whose first ``M`` rows hold potentials and last ``M`` rows hold fluxes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import SingularityError
from .geometry import PointSet

__all__ = [
    "MfsSystem",
    "fundamental_solution",
    "basis_normal_derivative",
    "assemble",
    "evaluate_expansion",
    "evaluation_matrix",
]

_TWO_PI = 2.0 * math.pi


def fundamental_solution(r):
    """``-ln(r) / (2π)``; rejects ``r <= 0``."""
    r = np.asarray(r, dtype=float)
    if np.any(~(r > 0)):
        raise SingularityError("fundamental solution needs r > 0")
    out = -np.log(r) / _TWO_PI
    return float(out) if out.ndim == 0 else out


def basis_normal_derivative(x, xi, n):
    """Normal derivative at ``x`` of ``φ*(|x - ξ|)``: ``-((x - ξ)·n) / (2π |x - ξ|²)``.

    Broadcasts over leading dimensions of ``x``, ``xi`` and ``n`` (last axis of
    length 2).
    """
    d = np.asarray(x, dtype=float) - np.asarray(xi, dtype=float)
    r2 = np.sum(d * d, axis=-1)
    if np.any(~(r2 > 0)):
        raise SingularityError("normal derivative evaluated at a source point")
    out = -np.sum(d * np.asarray(n, dtype=float), axis=-1) / (_TWO_PI * r2)
    return float(out) if np.ndim(out) == 0 else out


def _offsets(targets, sources):
    t = np.atleast_2d(np.asarray(targets, dtype=float))
    d = t[:, None, :] - sources[None, :, :]
    r2 = np.einsum("ijk,ijk->ij", d, d)
    if np.any(~(r2 > 0)):
        raise SingularityError("target coincides with a source point")
    return d, r2


@dataclass(frozen=True)
class MfsSystem:
    """The dense collocation matrix, its right-hand side and the points it came from."""

    matrix: np.ndarray
    rhs: np.ndarray
    points: PointSet

    @property
    def dirichlet_block(self) -> np.ndarray:
        return self.matrix[: self.points.M]

    @property
    def neumann_block(self) -> np.ndarray:
        return self.matrix[self.points.M:]

    def row_norm_ratio(self) -> float:
        """Ratio of Frobenius norms of the potential rows to the flux rows."""
        return float(np.linalg.norm(self.dirichlet_block) / np.linalg.norm(self.neumann_block))

    def with_rhs(self, rhs) -> "MfsSystem":
        rhs = np.array(rhs, dtype=float)
        if rhs.shape != self.rhs.shape:
            raise ValueError(f"rhs must have shape {self.rhs.shape}, got {rhs.shape}")
        rhs.setflags(write=False)
        return MfsSystem(self.matrix, rhs, self.points)


def assemble(points: PointSet, f, g) -> MfsSystem:
    """Build ``A`` and ``b = (f; g)`` for the given collocation/source layout."""
    f = np.asarray(f, dtype=float).ravel()
    g = np.asarray(g, dtype=float).ravel()
    M = points.M
    if f.shape != (M,) or g.shape != (M,):
        raise ValueError(f"f and g must each have length M={M}, got {f.size} and {g.size}")
    d, r2 = _offsets(points.collocation, points.sources)
    potential = -0.5 * np.log(r2) / _TWO_PI
    flux = -np.einsum("ijk,ik->ij", d, points.normals) / (_TWO_PI * r2)
    matrix = np.vstack([potential, flux])
    if not np.all(np.isfinite(matrix)):
        raise SingularityError("non-finite entries in the MFS matrix")
    rhs = np.concatenate([f, g])
    matrix.setflags(write=False)
    rhs.setflags(write=False)
    return MfsSystem(matrix, rhs, points)


def evaluation_matrix(points: PointSet, targets) -> np.ndarray:
    """Matrix ``E`` with ``E[k, j] = φ*(|t_k - ξ_j|)``, so that ``u_N = E @ w``."""
    _, r2 = _offsets(targets, points.sources)
    return -0.5 * np.log(r2) / _TWO_PI


def evaluate_expansion(w, points: PointSet, targets) -> np.ndarray:
    """Values of ``u_N = sum_j w_j φ_j`` at ``targets`` (shape ``(K, 2)``)."""
    w = np.asarray(w, dtype=float).ravel()
    if w.shape != (points.N,):
        raise ValueError(f"weight vector must have length N={points.N}, got {w.size}")
    return evaluation_matrix(points, targets) @ w
