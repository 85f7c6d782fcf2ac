"""Small dense Hermitian primitives: top eigenpair and HPD solves."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

MAX_EIG_DIM = 64
_POWER_ITER_CAP = 10_000
_POWER_ITER_RTOL = 1e-12


class NonConvergenceError(RuntimeError):
    """Power iteration failed to converge within the iteration cap."""


class NotPositiveDefiniteError(RuntimeError):
    """Cholesky factorization hit a nonpositive pivot."""

    def __init__(self, pivot: int):
        self.pivot = pivot
        super().__init__(f"matrix is not positive definite (pivot {pivot} <= 0)")


@dataclass(frozen=True)
class HermitianMatrix:
    """Square complex matrix, symmetrized to (A + A^H)/2 on construction."""

    entries: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.entries, dtype=complex)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("HermitianMatrix requires a square matrix")
        scale = max(1.0, float(np.max(np.abs(a)))) if a.size else 1.0
        if np.max(np.abs(a - a.conj().T)) > 1e-10 * scale:
            raise ValueError("matrix deviates from Hermitian beyond tolerance")
        sym = 0.5 * (a + a.conj().T)
        sym.setflags(write=False)
        object.__setattr__(self, "entries", sym)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]


def top_eigpair(A: HermitianMatrix, start: np.ndarray | None = None) -> tuple[float, np.ndarray]:
    """Maximal eigenvalue and unit eigenvector of a small Hermitian matrix.

    Shifted power iteration from a deterministic start (all-ones unless
    `start` is given), accelerated by repeated squaring of the iteration
    matrix so that near-degenerate eigenvalue gaps still converge within
    the cap.  The shift keeps the iteration targeted at the maximal
    eigenvalue rather than the maximal modulus when the matrix is
    indefinite.  Raises NonConvergenceError at the iteration cap.
    """
    M = A.entries
    n = A.dim
    if n > MAX_EIG_DIM:
        raise ValueError(f"top_eigpair supports dimension <= {MAX_EIG_DIM}, got {n}")
    norm = float(np.linalg.norm(M))
    if norm == 0.0:
        v = np.ones(n, dtype=complex) / np.sqrt(n)
        return 0.0, v
    # Gershgorin lower bound plus a margin so the shifted matrix is strictly PD;
    # the extra shift slows nothing because squaring separates any gap.
    radii = np.sum(np.abs(M), axis=1) - np.abs(np.diag(M))
    lower = float(np.min(np.real(np.diag(M)) - radii))
    sigma = max(0.0, -lower) + 0.01 * norm
    B = (M + sigma * np.eye(n)) / (norm + sigma)

    if start is None:
        x = np.ones(n, dtype=complex)
    else:
        x = np.asarray(start, dtype=complex).copy()
    x /= np.linalg.norm(x)

    lam_prev = None
    for _ in range(_POWER_ITER_CAP):
        y = M @ x
        lam = float(np.real(np.vdot(x, y)))
        if lam_prev is not None and abs(lam - lam_prev) <= _POWER_ITER_RTOL * (abs(lam) + norm):
            if np.linalg.norm(y - lam * x) <= 1e-9 * norm:
                return lam, x
        lam_prev = lam
        w = B @ x
        x = w / np.linalg.norm(w)
        B = B @ B
        B = B / np.linalg.norm(B)
    raise NonConvergenceError(f"power iteration did not converge in {_POWER_ITER_CAP} iterations")


def _failing_pivot(M: np.ndarray) -> int:
    """Left-looking Cholesky scan, returning the first nonpositive pivot index."""
    n = M.shape[0]
    L = np.zeros_like(M)
    for j in range(n):
        d = float(np.real(M[j, j])) - float(np.real(np.vdot(L[j, :j], L[j, :j])))
        if not d > 0.0 or not np.isfinite(d):
            return j
        L[j, j] = np.sqrt(d)
        if j + 1 < n:
            L[j + 1:, j] = (M[j + 1:, j] - L[j + 1:, :j] @ L[j, :j].conj()) / L[j, j]
    return n - 1


def cholesky(A: HermitianMatrix) -> np.ndarray:
    """Lower-triangular L with L L^H = A; NotPositiveDefiniteError otherwise."""
    try:
        return np.linalg.cholesky(A.entries)
    except np.linalg.LinAlgError:
        raise NotPositiveDefiniteError(_failing_pivot(A.entries)) from None


def hpd_solve(A: HermitianMatrix, B: np.ndarray) -> np.ndarray:
    """Solve A X = B for Hermitian positive definite A via Cholesky."""
    B = np.asarray(B, dtype=complex)
    L = cholesky(A)
    Y = solve_triangular(L, B, lower=True, check_finite=False)
    return solve_triangular(L.conj().T, Y, lower=False, check_finite=False)
