"""Regularized PSD design matrices with cached Cholesky factors.

Covers every design matrix the bandit algorithms maintain: rank-one
weighted updates, symmetric (possibly PSD-breaking) noise additions with
eigenvalue-floor repair, ellipsoidal norms through triangular solves and
log-determinants for the determinant-doubling switch rule.
"""

import math

import numpy as np
from scipy import linalg


def default_floor(d, lam):
    """Eigenvalue floor lam * 4 sqrt(d) / (4 sqrt(d) + 1)."""
    s = 4.0 * math.sqrt(d)
    return lam * s / (s + 1.0)


class DesignMatrix:
    """Symmetric PSD matrix with lazily cached lower-Cholesky factor."""

    def __init__(self, M, floor=0.0):
        M = np.array(M, dtype=float)
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise ValueError("design matrix must be square")
        if not np.array_equal(M, M.T):
            raise ValueError("design matrix must be exactly symmetric")
        self.dim = M.shape[0]
        self.M = M
        self.floor = float(floor)
        self._chol = None

    @property
    def chol(self):
        if self._chol is None:
            try:
                self._chol = linalg.cholesky(self.M, lower=True)
            except linalg.LinAlgError as exc:
                raise ValueError("design matrix is not positive definite") from exc
        return self._chol

    def copy(self):
        out = DesignMatrix(self.M.copy(), floor=self.floor)
        if self._chol is not None:
            out._chol = self._chol.copy()
        return out

    def rank_one_update(self, x, w):
        """Add w * x x^T in place. Invalidates the cached factor."""
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise ValueError("dimension mismatch in rank-one update")
        if w < 0:
            raise ValueError("rank-one weight must be nonnegative")
        if w > 0:
            # outer products are elementwise symmetric, so M stays exact
            self.M = self.M + w * np.outer(x, x)
        self._chol = None
        return self

    def add_symmetric_noise(self, noise):
        """Add a symmetric perturbation, clipping eigenvalues up to floor.

        Returns True when a repair (eigenvalue clip) was needed.
        """
        noise = np.asarray(noise, dtype=float)
        if noise.shape != (self.dim, self.dim):
            raise ValueError("dimension mismatch in noise update")
        if not np.allclose(noise, noise.T, rtol=0.0, atol=1e-12):
            raise ValueError("noise matrix must be symmetric")
        self.M = 0.5 * (self.M + self.M.T) + 0.5 * (noise + noise.T)
        self._chol = None
        eigmin = float(np.linalg.eigvalsh(self.M)[0])
        if eigmin >= self.floor:
            return False
        vals, vecs = np.linalg.eigh(self.M)
        vals = np.maximum(vals, self.floor)
        M = (vecs * vals) @ vecs.T
        self.M = 0.5 * (M + M.T)
        return True

    def inv_norm(self, x):
        """Mahalanobis norm ||x||_{M^-1} via triangular solve."""
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise ValueError("dimension mismatch in norm query")
        y = linalg.solve_triangular(self.chol, x, lower=True)
        return float(np.linalg.norm(y))

    def inv_norms(self, X):
        """||x||_{M^-1} for each row of X."""
        X = np.asarray(X, dtype=float)
        Y = linalg.solve_triangular(self.chol, X.T, lower=True)
        return np.sqrt(np.sum(Y * Y, axis=0))

    def norm(self, x):
        """Direct norm ||x||_M = sqrt(x^T M x)."""
        x = np.asarray(x, dtype=float)
        return float(math.sqrt(max(x @ self.M @ x, 0.0)))

    def log_det(self):
        return 2.0 * float(np.sum(np.log(np.diag(self.chol))))

    def solve(self, b):
        """M^{-1} b through the cached factor."""
        L = self.chol
        y = linalg.solve_triangular(L, np.asarray(b, dtype=float), lower=True)
        return linalg.solve_triangular(L.T, y, lower=False)


def new_regularized(d, lam, floor=None):
    """lam * I with the default eigenvalue floor lam*4sqrt(d)/(4sqrt(d)+1)."""
    if d < 1:
        raise ValueError("dimension must be at least 1")
    if lam <= 0:
        raise ValueError("regularizer lambda must be positive")
    if floor is None:
        floor = default_floor(d, lam)
    return DesignMatrix(lam * np.eye(d), floor=floor)
