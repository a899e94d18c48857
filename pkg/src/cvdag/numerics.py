"""Dense linear-algebra and statistical primitives.

Covariance, residual conditional variance, partial correlation via Schur
complements, and the Fisher z independence decision. Everything operates on
plain float64 numpy arrays; reductions go through numpy's pairwise-summing
kernels for reproducibility.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from statistics import NormalDist

import numpy as np

from .errors import (
    DegenerateDesignError,
    InsufficientSamplesError,
    NumericalDegeneracyError,
    ValidationError,
)

# Ridge added (once) to a Gram matrix that fails Cholesky: 1e-10 * trace/dim.
GRAM_JITTER = 1e-10


@dataclass(frozen=True, eq=False)
class Dataset:
    """An n x p observation matrix with one name per column."""

    names: tuple[str, ...]
    data: np.ndarray = field(repr=False)

    def __post_init__(self):
        data = np.asarray(self.data, dtype=float)
        if data.ndim != 2:
            raise ValidationError(f"dataset must be 2-D, got shape {data.shape}")
        if data.shape[0] < 1:
            raise ValidationError("dataset needs at least one row")
        if len(self.names) != data.shape[1]:
            raise ValidationError(
                f"{len(self.names)} names for {data.shape[1]} columns"
            )
        if not np.all(np.isfinite(data)):
            raise ValidationError("dataset contains missing or non-finite entries")
        data = data.copy()
        data.flags.writeable = False
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "names", tuple(str(s) for s in self.names))

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def p(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class IndependenceDecision:
    """Outcome of a two-sided Fisher z test; statistic is +inf when |r| = 1."""

    dependent: bool
    statistic: float
    threshold: float

    @property
    def independent(self) -> bool:
        return not self.dependent


def _cholesky(a: np.ndarray, *, jitter: bool, error=NumericalDegeneracyError):
    """Lower Cholesky factor of a symmetric matrix, with one optional ridge retry."""
    try:
        return np.linalg.cholesky(a)
    except np.linalg.LinAlgError:
        if not jitter or a.shape[0] == 0:
            raise error("matrix is not positive definite") from None
    ridge = GRAM_JITTER * np.trace(a) / a.shape[0]
    try:
        return np.linalg.cholesky(a + ridge * np.eye(a.shape[0]))
    except np.linalg.LinAlgError:
        raise error("matrix is not positive definite even after jitter") from None


def schur_variances(
    mat: np.ndarray,
    given: tuple[int, ...] | list[int],
    targets,
    *,
    jitter: bool = False,
    error=NumericalDegeneracyError,
) -> np.ndarray:
    """Diagonal of the Schur complement of ``mat`` over ``given`` at ``targets``.

    For a covariance this is Var(X_t | X_given) per target; for a Gram matrix of
    centered columns it is the residual sum of squares of each target column
    regressed on the ``given`` columns. One factorization serves all targets.
    """
    targets = np.asarray(list(targets), dtype=int)
    base = mat[targets, targets]
    if len(given) == 0:
        return base.copy()
    s = list(given)
    low = _cholesky(mat[np.ix_(s, s)], jitter=jitter, error=error)
    w = np.linalg.solve(low, mat[np.ix_(s, targets)])
    out = base - np.einsum("ij,ij->j", w, w)
    return np.maximum(out, 0.0)


def sample_covariance(data: Dataset) -> np.ndarray:
    """p x p covariance of mean-centered columns, denominator n - 1."""
    if data.n < 2:
        raise InsufficientSamplesError("covariance needs at least 2 rows")
    centered = data.data - data.data.mean(axis=0)
    cov = centered.T @ centered / (data.n - 1)
    return (cov + cov.T) / 2.0


def conditional_variance(data: Dataset, j: int, given) -> float:
    """Residual variance of column j regressed on centered columns ``given``.

    Columns are centered (implicit intercept) and the denominator is
    n - |given| - 1; an empty conditioning set yields the sample variance.
    """
    given = tuple(given)
    _check_condition_args(data.p, j, given)
    if data.n <= len(given) + 1:
        raise InsufficientSamplesError(
            f"n={data.n} rows cannot support conditioning on {len(given)} columns"
        )
    centered = data.data - data.data.mean(axis=0)
    gram = centered.T @ centered
    rss = schur_variances(gram, given, [j], jitter=True, error=DegenerateDesignError)
    return float(rss[0] / (data.n - len(given) - 1))


def conditional_variances_from_gram(
    gram: np.ndarray, n: int, given, targets
) -> np.ndarray:
    """Batch form of :func:`conditional_variance` on a precomputed centered Gram.

    Used by the ordering search: one factorization of the conditioning block
    prices every remaining candidate at a step.
    """
    given = tuple(given)
    if n <= len(given) + 1:
        raise InsufficientSamplesError(
            f"n={n} rows cannot support conditioning on {len(given)} columns"
        )
    rss = schur_variances(gram, given, targets, jitter=True, error=DegenerateDesignError)
    return rss / (n - len(given) - 1)


def partial_correlation(cov: np.ndarray, j: int, k: int, given) -> float:
    """Partial correlation of variables j and k given ``given``, from a covariance.

    Computed as the normalized off-diagonal of the 2x2 Schur complement; works
    for sample and population covariances alike.
    """
    given = tuple(given)
    if j == k:
        raise ValidationError("partial correlation needs two distinct variables")
    _check_condition_args(cov.shape[0], j, given)
    _check_condition_args(cov.shape[0], k, given)
    idx = [j, k]
    block = cov[np.ix_(idx, idx)]
    if given:
        s = list(given)
        low = _cholesky(cov[np.ix_(s, s)], jitter=False)
        w = np.linalg.solve(low, cov[np.ix_(s, idx)])
        block = block - w.T @ w
    denom = block[0, 0] * block[1, 1]
    if denom <= 0.0:
        raise NumericalDegeneracyError(
            "conditional variance vanished; submatrix not positive definite"
        )
    r = block[0, 1] / math.sqrt(denom)
    return float(min(1.0, max(-1.0, r)))


def residual_partial_correlation(
    centered: np.ndarray, gram: np.ndarray, j: int, k: int, given
) -> float:
    """Sample partial correlation as the correlation of regression residuals.

    Identical to :func:`partial_correlation` on the sample covariance in exact
    arithmetic, but bounded in [-1, 1] by construction and stable when the
    conditioning columns span many orders of magnitude. ``centered`` holds the
    mean-centered data and ``gram`` its Gram matrix.
    """
    given = tuple(given)
    cols = [j, k]
    if not given:
        resid = centered[:, cols]
    else:
        s = list(given)
        low = _cholesky(gram[np.ix_(s, s)], jitter=True, error=DegenerateDesignError)
        half = np.linalg.solve(low, gram[np.ix_(s, cols)])
        coef = np.linalg.solve(low.T, half)
        resid = centered[:, cols] - centered[:, s] @ coef
    norms = np.einsum("ij,ij->j", resid, resid)
    if np.any(norms <= 0.0):
        return 0.0
    r = float(resid[:, 0] @ resid[:, 1] / math.sqrt(norms[0] * norms[1]))
    return min(1.0, max(-1.0, r))


def fisher_z_test(r: float, n: int, s: int, alpha: float) -> IndependenceDecision:
    """Two-sided Fisher z decision for a (partial) correlation r.

    The statistic is sqrt(n - s - 3) * |atanh(r)| compared against the standard
    normal critical value at level alpha. |r| >= 1 short-circuits to dependence
    with an infinite statistic.
    """
    if not 0.0 < alpha < 1.0:
        raise ValidationError(f"alpha must lie in (0, 1), got {alpha}")
    if n <= s + 3:
        raise InsufficientSamplesError(
            f"Fisher z needs n > s + 3 (n={n}, conditioning size s={s})"
        )
    threshold = NormalDist().inv_cdf(1.0 - alpha / 2.0)
    if abs(r) >= 1.0:
        return IndependenceDecision(True, math.inf, threshold)
    # guard atanh against r rounded to within 1e-12 of +-1
    r = min(1.0 - 1e-12, max(-(1.0 - 1e-12), r))
    statistic = math.sqrt(n - s - 3) * abs(math.atanh(r))
    return IndependenceDecision(statistic > threshold, statistic, threshold)


def cholesky_solve(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve a x = b for symmetric positive definite a via Cholesky."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {a.shape}")
    if not np.allclose(a, a.T, rtol=0.0, atol=1e-8 * max(1.0, abs(a).max())):
        raise NumericalDegeneracyError("matrix is not symmetric")
    low = _cholesky(a, jitter=False)
    y = np.linalg.solve(low, b)
    return np.linalg.solve(low.T, y)


def _check_condition_args(p: int, j: int, given: tuple[int, ...]):
    if not 0 <= j < p:
        raise ValidationError(f"variable index {j} out of range for p={p}")
    for s in given:
        if not 0 <= s < p:
            raise ValidationError(f"conditioning index {s} out of range for p={p}")
    if j in given:
        raise ValidationError(f"variable {j} cannot appear in its conditioning set")
    if len(set(given)) != len(given):
        raise ValidationError("conditioning set contains duplicates")
