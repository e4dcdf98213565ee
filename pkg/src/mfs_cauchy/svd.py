"""
One-sided (Hestenes) Jacobi SVD.

Columns of the working matrix are orthogonalised pairwise by plane rotations
until every pair is orthogonal to working precision; the column norms are then
the singular values, the normalised columns the left singular vectors, and the
accumulated rotations the right singular vectors.  Disjoint pairs of a
round-robin schedule are rotated together, so each sweep costs ``n - 1``
vectorised steps for ``n`` columns.

One-sided Jacobi computes small singular values to high relative accuracy,
which matters for the severely ill-conditioned MFS matrices.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SvdConvergenceError

__all__ = ["SvdFactors", "compute_svd", "jacobi_svd", "RANK_TOL"]

#: σ_i counts towards the numerical rank when σ_i > RANK_TOL * σ_1.
RANK_TOL = 1e-12


@dataclass(frozen=True)
class SvdFactors:
    """Thin SVD ``A = U diag(σ) Vᵀ`` of a tall matrix.

    ``left_vectors`` is ``m x n`` (thin), ``right_vectors`` is ``n x n``,
    ``singular_values`` is non-increasing and ``rank`` counts the values above
    ``RANK_TOL * σ_1``.
    """

    left_vectors: np.ndarray
    singular_values: np.ndarray
    right_vectors: np.ndarray
    rank: int
    sweeps: int = 0

    @property
    def shape(self) -> tuple[int, int]:
        return self.left_vectors.shape[0], self.right_vectors.shape[0]

    @property
    def U(self):
        return self.left_vectors

    @property
    def s(self):
        return self.singular_values

    @property
    def V(self):
        return self.right_vectors

    def reconstruct(self) -> np.ndarray:
        return (self.left_vectors * self.singular_values) @ self.right_vectors.T

    def coefficients(self, b) -> np.ndarray:
        """Fourier coefficients ``u_i · b`` for ``i = 1..n``."""
        return self.left_vectors.T @ np.asarray(b, dtype=float)


def _round_robin(n):
    """Rounds of disjoint index pairs covering every pair of ``range(n)`` once.

    Odd ``n`` gets a dummy player ``n`` whose pairs are dropped.
    """
    players = list(range(n + (n % 2)))
    m = len(players)
    rounds = []
    for _ in range(m - 1):
        p, q = [], []
        for k in range(m // 2):
            i, j = players[k], players[m - 1 - k]
            if i < n and j < n:
                p.append(min(i, j))
                q.append(max(i, j))
        rounds.append((np.array(p, dtype=int), np.array(q, dtype=int)))
        players = [players[0], players[-1]] + players[1:-1]
    return rounds


def _complete_orthonormal(U, good):
    """Replace the columns of ``U`` not flagged ``good`` by an orthonormal completion."""
    m, n = U.shape
    basis = [U[:, j] for j in range(n) if good[j]]
    out = U.copy()
    candidates = iter(np.eye(m))
    for j in range(n):
        if good[j]:
            continue
        for e in candidates:
            v = e.copy()
            for _ in range(2):
                for q in basis:
                    v -= (q @ v) * q
            norm = np.linalg.norm(v)
            if norm > 0.5:
                v /= norm
                basis.append(v)
                out[:, j] = v
                break
    return out


def jacobi_svd(matrix, tol=None, max_sweeps=None):
    """Raw one-sided Jacobi iteration.

    Returns ``(U, s, V, sweeps)`` with unsorted singular values.

    Raises
    ------
    SvdConvergenceError
        If some pair is still non-orthogonal after ``max_sweeps`` sweeps
        (default ``100 * min(m, n)``).
    """
    A = np.array(matrix, dtype=float, copy=True)
    if A.ndim != 2:
        raise ValueError("expected a 2-D matrix")
    m, n = A.shape
    if m < n:
        raise ValueError(f"one-sided Jacobi needs a tall matrix (m >= n), got {m}x{n}")
    if tol is None:
        tol = np.finfo(float).eps * np.sqrt(m)
    if max_sweeps is None:
        max_sweeps = 100 * max(min(m, n), 1)
    V = np.eye(n)
    rounds = _round_robin(n)

    sweeps = 0
    converged = n < 2
    while not converged:
        if sweeps >= max_sweeps:
            raise SvdConvergenceError(f"Jacobi SVD not converged after {sweeps} sweeps")
        sweeps += 1
        rotated = False
        for p, q in rounds:
            Ap, Aq = A[:, p], A[:, q]
            alpha = np.einsum("ij,ij->j", Ap, Ap)
            beta = np.einsum("ij,ij->j", Aq, Aq)
            gamma = np.einsum("ij,ij->j", Ap, Aq)
            active = np.abs(gamma) > tol * np.sqrt(alpha * beta)
            if not np.any(active):
                continue
            rotated = True
            p, q = p[active], q[active]
            Ap, Aq = Ap[:, active], Aq[:, active]
            alpha, beta, gamma = alpha[active], beta[active], gamma[active]
            zeta = (beta - alpha) / (2.0 * gamma)
            sign = np.where(zeta >= 0, 1.0, -1.0)
            t = sign / (np.abs(zeta) + np.sqrt(1.0 + zeta * zeta))
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = c * t
            A[:, p] = c * Ap - s * Aq
            A[:, q] = s * Ap + c * Aq
            Vp, Vq = V[:, p], V[:, q]
            V[:, p] = c * Vp - s * Vq
            V[:, q] = s * Vp + c * Vq
        converged = not rotated

    sigma = np.linalg.norm(A, axis=0)
    good = sigma > np.finfo(float).tiny
    U = np.zeros_like(A)
    U[:, good] = A[:, good] / sigma[good]
    if not np.all(good):
        U = _complete_orthonormal(U, good)
    return U, sigma, V, sweeps


def compute_svd(matrix, rank_tol=RANK_TOL, max_sweeps=None) -> SvdFactors:
    """Thin SVD of a tall matrix, singular values sorted non-increasing."""
    U, sigma, V, sweeps = jacobi_svd(matrix, max_sweeps=max_sweeps)
    order = np.argsort(-sigma, kind="stable")
    U, sigma, V = U[:, order], sigma[order], V[:, order]
    rank = int(np.count_nonzero(sigma > rank_tol * sigma[0])) if sigma.size and sigma[0] > 0 else 0
    for arr in (U, sigma, V):
        arr.setflags(write=False)
    return SvdFactors(U, sigma, V, rank, sweeps)
