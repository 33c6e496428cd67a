"""Dense least-squares solvers used by every estimator in the package.

All fits go through a QR decomposition with column pivoting so that
near-collinear designs (correlated macro series inside a subspace) are
handled stably and rank deficiency is detected from the pivot magnitudes.
The module is purely functional: inputs are never mutated and there is no
internal state, so everything here is safe to call from any number of
workers.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

__all__ = [
    "DesignMatrix",
    "RegressionFit",
    "bic_score",
    "ols_fit",
    "ridge_fit",
    "elastic_net_fit",
    "principal_components",
]

# A pivot below this fraction of the largest pivot marks the column as
# numerically dependent.
RANK_TOL = 1e-10

# Floor on the residual sum of squares inside the BIC so that exact fits
# produce a large negative but finite score (keeps exp-based weights usable).
_RSS_FLOOR = 1e-300


@dataclass(frozen=True)
class DesignMatrix:
    """A dense regressor matrix with labelled columns.

    Parameters
    ----------
    values : ndarray, shape (rows, columns)
        Regressor values. Every entry must be finite.
    column_labels : tuple of str
        One distinct label per column.
    """

    values: np.ndarray
    column_labels: tuple[str, ...]

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "column_labels", tuple(self.column_labels))
        if values.ndim != 2:
            raise ValueError("design matrix must be two-dimensional")
        if values.shape[0] < 1 or values.shape[1] < 1:
            raise ValueError("empty design matrix")
        if len(self.column_labels) != values.shape[1]:
            raise ValueError(
                f"expected {values.shape[1]} column labels, got {len(self.column_labels)}"
            )
        if len(set(self.column_labels)) != len(self.column_labels):
            raise ValueError("column labels must be distinct")
        if not np.all(np.isfinite(values)):
            raise ValueError("design matrix contains non-finite values")

    @classmethod
    def _trusted(cls, values: np.ndarray, column_labels: tuple) -> "DesignMatrix":
        # Fast path for column slices of an already-validated matrix.
        obj = object.__new__(cls)
        object.__setattr__(obj, "values", values)
        object.__setattr__(obj, "column_labels", column_labels)
        return obj

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def columns(self) -> int:
        return self.values.shape[1]


@dataclass
class RegressionFit:
    """Result of a single linear fit.

    Attributes
    ----------
    coefficients : ndarray, shape (columns,)
    residuals : ndarray, shape (rows,)
    rss : float
        Residual sum of squares.
    bic : float
        ``rows * ln(rss / rows) + columns * ln(rows)`` (see `bic_score`).
    sigma2 : float
        Residual variance ``rss / (rows - rank)``; NaN when no degrees of
        freedom remain.
    rank_deficient : bool
        True when the design did not have full column rank; the reported
        coefficients are then the minimum-norm solution.
    xtx_inv_diag : ndarray or None
        Diagonal of ``(X'X)^{-1}`` for full-rank OLS fits, used by callers
        that need conventional coefficient variances. None otherwise.
    converged : bool
        Always True for direct solvers; set by iterative solvers.
    n_iter : int
        Iterations used by iterative solvers, 0 for direct ones.
    """

    coefficients: np.ndarray
    residuals: np.ndarray
    rss: float
    bic: float
    sigma2: float
    rank_deficient: bool
    xtx_inv_diag: np.ndarray | None = None
    converged: bool = True
    n_iter: int = 0


def bic_score(rss: float, n_obs: int, n_params: int) -> float:
    """Bayesian information criterion, ``n*ln(rss/n) + p*ln(n)``.

    The convention is fixed here once for the whole package; only
    differences of scores matter downstream, so any affine-consistent
    convention would do. ``rss`` is floored at a tiny positive value so
    exact fits stay finite.
    """
    n = float(n_obs)
    return n * np.log(max(rss, _RSS_FLOOR) / n) + n_params * np.log(n)


def _check_response(X: DesignMatrix, y: np.ndarray) -> np.ndarray:
    y = np.asarray(y, dtype=float).ravel()
    if y.shape[0] != X.rows:
        raise ValueError(f"response has {y.shape[0]} rows, design has {X.rows}")
    if not np.all(np.isfinite(y)):
        raise ValueError("response contains non-finite values")
    return y


def _finish_fit(X: DesignMatrix, y, beta, rank, xtx_inv_diag=None) -> RegressionFit:
    residuals = y - X.values @ beta
    rss = float(residuals @ residuals)
    dof = X.rows - rank
    sigma2 = rss / dof if dof > 0 else float("nan")
    return RegressionFit(
        coefficients=beta,
        residuals=residuals,
        rss=rss,
        bic=bic_score(rss, X.rows, X.columns),
        sigma2=sigma2,
        rank_deficient=rank < X.columns,
        xtx_inv_diag=xtx_inv_diag,
    )


def ols_fit(X: DesignMatrix, y: np.ndarray) -> RegressionFit:
    """Least-squares fit via column-pivoted QR.

    Minimises ``||y - X beta||^2``. On full-rank designs the solution comes
    from the triangular factor; rank-deficient designs (any pivot smaller
    than ``RANK_TOL`` times the largest) fall back to the minimum-norm
    solution and are flagged.

    Parameters
    ----------
    X : DesignMatrix
    y : array_like, shape (rows,)

    Returns
    -------
    RegressionFit
    """
    y = _check_response(X, y)
    A = X.values
    Q, R, piv = scipy.linalg.qr(A, mode="economic", pivoting=True,
                                check_finite=False)
    diag = np.abs(np.diag(R))
    if diag.size == 0 or diag[0] <= 0.0:
        rank = 0
    else:
        rank = int(np.sum(diag > RANK_TOL * diag[0]))

    if rank == X.columns:
        z = scipy.linalg.solve_triangular(R, Q.T @ y, lower=False,
                                          check_finite=False)
        beta = np.empty_like(z)
        beta[piv] = z
        # diag of (X'X)^{-1} = row sums of squares of R^{-1}, unpivoted.
        r_inv = scipy.linalg.solve_triangular(R, np.eye(X.columns), lower=False,
                                              check_finite=False)
        xtx_inv_diag = np.empty(X.columns)
        xtx_inv_diag[piv] = np.sum(r_inv**2, axis=1)
        return _finish_fit(X, y, beta, rank, xtx_inv_diag)

    beta, _, _, _ = np.linalg.lstsq(A, y, rcond=RANK_TOL)
    return _finish_fit(X, y, beta, rank)


def ridge_fit(
    X: DesignMatrix,
    y: np.ndarray,
    penalty: float,
    penalized_columns,
) -> RegressionFit:
    """Ridge fit shrinking only the requested columns.

    Minimises ``||y - X beta||^2 + penalty * sum_{j in penalized} beta_j^2``.
    Intercept, shock and essential-control columns are typically left out of
    ``penalized_columns`` and carry no shrinkage. Solved as an augmented
    least-squares problem through the same pivoted-QR path as `ols_fit`, so
    ``penalty = 0`` reproduces OLS exactly.

    The reported residuals, rss and bic refer to the original data, not the
    augmented system.
    """
    y = _check_response(X, y)
    if penalty < 0:
        raise ValueError("ridge penalty must be nonnegative")
    penalized = sorted(set(int(j) for j in penalized_columns))
    if penalized and (penalized[0] < 0 or penalized[-1] >= X.columns):
        raise ValueError("penalized column index out of range")
    if penalty == 0.0 or not penalized:
        return ols_fit(X, y)

    root = np.sqrt(penalty)
    aug = np.zeros((len(penalized), X.columns))
    for row, j in enumerate(penalized):
        aug[row, j] = root
    A = np.vstack([X.values, aug])
    b = np.concatenate([y, np.zeros(len(penalized))])

    Q, R, piv = scipy.linalg.qr(A, mode="economic", pivoting=True,
                                check_finite=False)
    diag = np.abs(np.diag(R))
    rank = int(np.sum(diag > RANK_TOL * diag[0])) if diag[0] > 0 else 0
    if rank == X.columns:
        z = scipy.linalg.solve_triangular(R, Q.T @ b, lower=False,
                                          check_finite=False)
        beta = np.empty_like(z)
        beta[piv] = z
    else:
        beta, _, _, _ = np.linalg.lstsq(A, b, rcond=RANK_TOL)
    return _finish_fit(X, y, beta, min(rank, X.columns))


def _soft_threshold(value: float, threshold: float) -> float:
    if value > threshold:
        return value - threshold
    if value < -threshold:
        return value + threshold
    return 0.0


def elastic_net_fit(
    X: DesignMatrix,
    y: np.ndarray,
    l1: float,
    l2: float,
    penalized_columns,
    max_iter: int = 1000,
    tol: float = 1e-8,
) -> RegressionFit:
    """Elastic-net fit by cyclic coordinate descent.

    Minimises ``||y - X beta||^2 / (2T) + l1 * sum |beta_j| + l2 * sum beta_j^2``
    where both penalty sums run over ``penalized_columns`` only. Columns
    should be standardised by the caller when penalty comparability matters.

    Non-convergence is not an error: the fit is returned with
    ``converged = False`` after ``max_iter`` sweeps.
    """
    y = _check_response(X, y)
    if l1 < 0 or l2 < 0:
        raise ValueError("elastic net penalties must be nonnegative")
    if tol <= 0:
        raise ValueError("tol must be positive")
    penalized = set(int(j) for j in penalized_columns)
    if penalized and (min(penalized) < 0 or max(penalized) >= X.columns):
        raise ValueError("penalized column index out of range")

    A = X.values
    n = X.rows
    col_norm = np.einsum("ij,ij->j", A, A) / n
    beta = np.zeros(X.columns)
    resid = y.copy()

    converged = False
    sweeps = 0
    for sweeps in range(1, max_iter + 1):
        max_change = 0.0
        for j in range(X.columns):
            old = beta[j]
            z = A[:, j] @ resid / n + col_norm[j] * old
            if j in penalized:
                denom = col_norm[j] + 2.0 * l2
                new = _soft_threshold(z, l1) / denom if denom > 0 else 0.0
            else:
                new = z / col_norm[j] if col_norm[j] > 0 else 0.0
            if new != old:
                resid += A[:, j] * (old - new)
                beta[j] = new
                max_change = max(max_change, abs(new - old))
        if max_change < tol:
            converged = True
            break

    residuals = y - A @ beta
    rss = float(residuals @ residuals)
    return RegressionFit(
        coefficients=beta,
        residuals=residuals,
        rss=rss,
        bic=bic_score(rss, n, X.columns),
        sigma2=rss / (n - X.columns) if n > X.columns else float("nan"),
        rank_deficient=False,
        converged=converged,
        n_iter=sweeps,
    )


def principal_components(X: DesignMatrix, n_factors: int):
    """Top principal components of the (column-centred) data matrix.

    Computed from the SVD of the centred matrix rather than an explicit
    covariance for numerical stability. Columns should already be scaled by
    the caller when variables live on different units; the decomposition
    itself only removes column means.

    Parameters
    ----------
    X : DesignMatrix
    n_factors : int
        Number of components to keep; must not exceed the numerical rank.

    Returns
    -------
    factors : ndarray, shape (rows, n_factors)
        Component scores, ordered by descending variance.
    loadings : ndarray, shape (columns, n_factors)
        One loading vector per component. Each vector is sign-fixed so its
        largest-magnitude entry is nonnegative.
    explained_variance : ndarray, shape (n_factors,)
        Sample variance of each score column, nonincreasing.
    """
    if n_factors < 1:
        raise ValueError("n_factors must be at least 1")
    if n_factors > min(X.rows, X.columns):
        raise ValueError(
            f"n_factors={n_factors} exceeds min(rows, columns)={min(X.rows, X.columns)}"
        )
    A = X.values - X.values.mean(axis=0)
    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    rank_tol = max(X.rows, X.columns) * np.finfo(float).eps * (s[0] if s.size else 0.0)
    rank = int(np.sum(s > rank_tol))
    if n_factors > rank:
        raise ValueError(f"n_factors={n_factors} exceeds numerical rank {rank}")

    factors = U[:, :n_factors] * s[:n_factors]
    loadings = Vt[:n_factors].T
    for j in range(n_factors):
        pivot = np.argmax(np.abs(loadings[:, j]))
        if loadings[pivot, j] < 0:
            loadings[:, j] = -loadings[:, j]
            factors[:, j] = -factors[:, j]
    explained_variance = s[:n_factors] ** 2 / max(X.rows - 1, 1)
    return factors, loadings, explained_variance
