"""Residual information removal.

Removes the part of representation B that representation A linearly
explains: fit a ridge map A -> B, subtract the prediction, keep the
residual. The default is cross-validated (fit on training folds,
residualize held-out rows) so the removal itself cannot leak; in-sample
removal is available behind a flag for comparison.
"""

from __future__ import annotations

import numpy as np

from brainalign import ridge
from brainalign.crossval import (
    DEFAULT_INNER_FOLDS,
    DEFAULT_LAMBDA_GRID,
    FoldScheme,
    _train_stats,
    fit_fold,
    select_lambda,
)


def remove_information(
    A: np.ndarray,
    B: np.ndarray,
    scheme: FoldScheme,
    lambda_grid=DEFAULT_LAMBDA_GRID,
    inner_folds: int = DEFAULT_INNER_FOLDS,
    in_sample: bool = False,
) -> np.ndarray:
    """Residual of B after removing what A linearly explains.

    Cross-validated mode: for each fold the ridge map is fit on the
    training rows only (per-column lambda by inner CV, same machinery as
    the encoding fits) and held-out rows receive B - B_hat. The output is
    in B's original units.
    """
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    if A.shape[0] != B.shape[0]:
        raise ValueError(f"row mismatch: A {A.shape} vs B {B.shape}")
    grid = np.asarray(lambda_grid, dtype=np.float64)

    if in_sample:
        am, asc, _ = _train_stats(A)
        bm, bsc, _ = _train_stats(B)
        Az = (A - am) / asc
        Bz = (B - bm) / bsc
        lam_sel = select_lambda(Az, Bz, inner_folds, grid)
        path = ridge.factor(Az)
        W = np.empty((A.shape[1], B.shape[1]))
        for lam in np.unique(lam_sel):
            cols = lam_sel == lam
            W[:, cols] = ridge.solve(path, Bz[:, cols], float(lam))
        return B - ((Az @ W) * bsc + bm)

    if A.shape[0] != scheme.n_samples:
        raise ValueError("fold scheme does not match the data")
    resid = np.empty_like(B)
    for fold in range(scheme.n_folds):
        tr = scheme.train_indices(fold)
        te = scheme.test_indices(fold)
        pred, _, _ = fit_fold(A, B, tr, te, inner_folds, grid)
        resid[te] = B[te] - pred
    return resid


def remove_masked_prediction(
    joint: np.ndarray,
    mask_truth: np.ndarray,
    scheme: FoldScheme,
    lambda_grid=DEFAULT_LAMBDA_GRID,
    inner_folds: int = DEFAULT_INNER_FOLDS,
    in_sample: bool = False,
) -> np.ndarray:
    """Remove an externally supplied target-encoding matrix from a joint
    representation; alias of :func:`remove_information` with the mask
    truth as the source, named so reports label the contrast correctly."""
    return remove_information(
        mask_truth, joint, scheme, lambda_grid, inner_folds, in_sample
    )
