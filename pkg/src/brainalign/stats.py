"""Correlation and hypothesis-test primitives.

The Student-t tail probability is computed in-repo through the regularized
incomplete beta function (continued fraction, modified Lentz), so the
package carries no special-function dependency. Target accuracy 1e-12,
verified against high-precision reference values in the test suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

_MAX_ITER = 400
_EPS = 1e-16
_TINY = 1e-300


class ZeroVarianceError(ValueError):
    """A t-test sample (or difference vector) has zero variance."""


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta function (Lentz)."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _TINY:
        d = _TINY
    d = 1.0 / d
    h = d
    for m in range(1, _MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return h
    raise RuntimeError(f"incomplete beta did not converge for a={a}, b={b}, x={x}")


def betainc(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta function I_x(a, b)."""
    if a <= 0 or b <= 0:
        raise ValueError("a and b must be positive")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_bt = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    bt = math.exp(ln_bt)
    if x < (a + 1.0) / (a + b + 2.0):
        return bt * _betacf(a, b, x) / a
    return 1.0 - bt * _betacf(b, a, 1.0 - x) / b


def student_t_sf(t: float, dof: float) -> float:
    """P(T > t) for Student's t with ``dof`` degrees of freedom."""
    if dof < 1:
        raise ValueError("dof must be >= 1")
    if not math.isfinite(t):
        return 0.0 if t > 0 else 1.0
    x = dof / (dof + t * t)
    p_two = betainc(dof / 2.0, 0.5, x)
    return 0.5 * p_two if t >= 0 else 1.0 - 0.5 * p_two


def student_t_sf_array(t: np.ndarray, dof: float) -> np.ndarray:
    """Elementwise :func:`student_t_sf`; NaN inputs give NaN."""
    t = np.asarray(t, dtype=np.float64)
    out = np.full(t.shape, np.nan)
    flat_t = t.ravel()
    flat_o = out.ravel()
    for i, ti in enumerate(flat_t):
        if np.isfinite(ti) or ti in (np.inf, -np.inf):
            flat_o[i] = student_t_sf(float(ti), dof)
    return out


def pearson(a, b) -> float:
    """Pearson correlation of two vectors of length >= 3.

    Returns NaN (a flagged undefined value, excluded from downstream
    averages) if either vector is constant.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError(f"length mismatch: {a.shape} vs {b.shape}")
    if a.size < 3:
        raise ValueError("need at least 3 samples")
    da = a - a.mean()
    db = b - b.mean()
    na = np.sqrt(np.dot(da, da))
    nb = np.sqrt(np.dot(db, db))
    if na == 0.0 or nb == 0.0:
        return float("nan")
    return float(np.dot(da, db) / (na * nb))


def pearson_columns(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Columnwise Pearson correlation of two n-by-v arrays.

    Constant columns (in either input) yield NaN.
    """
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    if A.shape != B.shape:
        raise ValueError(f"shape mismatch: {A.shape} vs {B.shape}")
    if A.shape[0] < 3:
        raise ValueError("need at least 3 samples")
    da = A - A.mean(axis=0)
    db = B - B.mean(axis=0)
    na = np.sqrt(np.einsum("ij,ij->j", da, da))
    nb = np.sqrt(np.einsum("ij,ij->j", db, db))
    denom = na * nb
    with np.errstate(invalid="ignore", divide="ignore"):
        r = np.einsum("ij,ij->j", da, db) / denom
    r[denom == 0.0] = np.nan
    return r


@dataclass
class TestResult:
    __test__ = False  # data container, not a pytest collectible

    statistic: float
    p_value: float
    dof: int
    tail: str  # "one_sided_greater" | "two_sided"


def one_sample_ttest(x, mu0: float = 0.0, tail: str = "one_sided_greater") -> TestResult:
    """One-sample t-test of ``x`` against ``mu0``."""
    if tail not in ("one_sided_greater", "two_sided"):
        raise ValueError(f"unknown tail {tail!r}")
    x = np.asarray(x, dtype=np.float64)
    n = x.size
    if n < 3:
        raise ValueError("need at least 3 samples")
    sd = x.std(ddof=1)
    if sd == 0.0:
        raise ZeroVarianceError("sample has zero variance")
    t = (x.mean() - mu0) / (sd / math.sqrt(n))
    dof = n - 1
    if tail == "one_sided_greater":
        p = student_t_sf(t, dof)
    else:
        p = 2.0 * student_t_sf(abs(t), dof)
    return TestResult(statistic=float(t), p_value=float(p), dof=dof, tail=tail)


def paired_ttest(x, y, tail: str = "two_sided") -> TestResult:
    """Paired t-test: one-sample test on x - y against 0.

    Identical vectors (or a constant offset) give zero-variance
    differences and raise :class:`ZeroVarianceError`.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise ValueError(f"length mismatch: {x.shape} vs {y.shape}")
    return one_sample_ttest(x - y, 0.0, tail=tail)


def bh_fdr(p_values, q: float) -> np.ndarray:
    """Benjamini-Hochberg step-up selection mask at level ``q``.

    NaN p-values are never selected and do not count toward the number of
    tests.
    """
    p = np.asarray(p_values, dtype=np.float64)
    mask = np.zeros(p.shape, dtype=bool)
    valid = np.flatnonzero(~np.isnan(p))
    m = valid.size
    if m == 0:
        return mask
    order = valid[np.argsort(p[valid], kind="stable")]
    thresh = q * np.arange(1, m + 1) / m
    below = p[order] <= thresh
    if not below.any():
        return mask
    k = np.flatnonzero(below)[-1]
    mask[order[: k + 1]] = True
    return mask
