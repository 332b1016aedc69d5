"""SVD-path ridge regression.

The design matrix is factored once; every regularization value and every
target column is then solved from that single factorization:

    X = U diag(s) V^T        (thin SVD, rank-truncated)
    W(lam) = V diag(s / (s^2 + lam)) U^T Y

which equals the normal-equations solution (X^T X + lam I)^-1 X^T Y
restricted to the retained rank.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

RANK_TRUNCATION_REL = 1e-12


class DegenerateDesignError(ValueError):
    """The design matrix is all-zero (no retained singular values)."""


@dataclass(frozen=True)
class RidgePath:
    """Immutable thin SVD of a training design, shared across solves."""

    left_vectors: np.ndarray  # n x r
    singular_values: np.ndarray  # r, non-increasing, positive
    right_vectors: np.ndarray  # p x r
    training_row_count: int

    @property
    def rank(self) -> int:
        return self.singular_values.size


def factor(X: np.ndarray) -> RidgePath:
    """Thin SVD of the n-by-p design, truncating singular values below
    ``RANK_TRUNCATION_REL`` times the largest."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"design must be 2-D, got shape {X.shape}")
    n, p = X.shape
    if n < 2 or p < 1:
        raise ValueError(f"need n >= 2 and p >= 1, got {n}x{p}")
    if not np.all(np.isfinite(X)):
        raise ValueError("design contains non-finite values")
    U, s, Vt = np.linalg.svd(X, full_matrices=False)
    if s[0] == 0.0:
        raise DegenerateDesignError("degenerate design: all singular values zero")
    keep = s >= RANK_TRUNCATION_REL * s[0]
    return RidgePath(
        left_vectors=np.ascontiguousarray(U[:, keep]),
        singular_values=np.ascontiguousarray(s[keep]),
        right_vectors=np.ascontiguousarray(Vt[keep].T),
        training_row_count=n,
    )


def solve(path: RidgePath, Y: np.ndarray, lam: float) -> np.ndarray:
    """Ridge weights W(lam), shape p-by-v, for targets Y (n-by-v)."""
    if lam <= 0:
        raise ValueError("lam must be > 0; use solve_lstsq for the unpenalized fit")
    UtY = _project(path, Y)
    shrink = path.singular_values / (path.singular_values**2 + lam)
    return path.right_vectors @ (shrink[:, None] * UtY)


def solve_lstsq(path: RidgePath, Y: np.ndarray) -> np.ndarray:
    """Minimum-norm least-squares weights (lam = 0) via the pseudoinverse
    of the retained rank; avoids 0/0 at truncated singular values."""
    UtY = _project(path, Y)
    inv = 1.0 / path.singular_values
    return path.right_vectors @ (inv[:, None] * UtY)


def solve_path(path: RidgePath, Y: np.ndarray, lambda_grid) -> np.ndarray:
    """Weights for every lam in the grid; shape len(grid) x p x v."""
    UtY = _project(path, Y)
    s = path.singular_values
    grid = np.asarray(lambda_grid, dtype=np.float64)
    if grid.size == 0 or np.any(grid <= 0):
        raise ValueError("lambda grid must be nonempty and positive")
    out = np.empty((grid.size, path.right_vectors.shape[0], UtY.shape[1]))
    for i, lam in enumerate(grid):
        shrink = s / (s**2 + lam)
        out[i] = path.right_vectors @ (shrink[:, None] * UtY)
    return out


def predict(W: np.ndarray, X_new: np.ndarray) -> np.ndarray:
    """Predictions X_new @ W for new design rows."""
    W = np.asarray(W, dtype=np.float64)
    X_new = np.asarray(X_new, dtype=np.float64)
    if X_new.ndim != 2 or W.ndim != 2 or X_new.shape[1] != W.shape[0]:
        raise ValueError(
            f"shape mismatch: X_new {X_new.shape} vs W {W.shape}"
        )
    return X_new @ W


def _project(path: RidgePath, Y: np.ndarray) -> np.ndarray:
    Y = np.asarray(Y, dtype=np.float64)
    if Y.ndim == 1:
        Y = Y[:, None]
    if Y.shape[0] != path.training_row_count:
        raise ValueError(
            f"Y has {Y.shape[0]} rows, factorization was built on "
            f"{path.training_row_count}"
        )
    return path.left_vectors.T @ Y
