"""Per-horizon local projection regressions on a single subspace.

The horizon-h design pairs regressors dated t with the response dated
t + h. Column order is fixed: intercept, shock, essential controls, then
the selected high-dimensional controls in index order, so the shock
coefficient always sits in column 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EstimationError
from .linalg import DesignMatrix, ols_fit
from .panel import TimeSeriesPanel, VariableRoles
from .sampling import Subspace

__all__ = ["LpProblem", "SubspaceFit", "build_lp_design", "fit_subspace",
           "regressor_matrix"]

# Minimum spare degrees of freedom demanded of a horizon-h design.
MIN_SPARE_DOF = 2

SHOCK_COLUMN = 1


@dataclass(frozen=True)
class LpProblem:
    """One horizon-h regression problem on one subspace."""

    horizon: int
    response: np.ndarray
    design: DesignMatrix
    n_fixed: int  # intercept + shock + essential controls
    subspace: Subspace

    @property
    def t_effective(self) -> int:
        return self.design.rows


@dataclass
class SubspaceFit:
    """Shock coefficient and weight inputs from one subspace regression."""

    beta_h: float
    bic: float
    insample_rss: float
    oos_mspe: float | None
    beta_variance: float
    subspace: Subspace
    degenerate: bool
    coefficients: np.ndarray | None = None
    n_train: int = 0

    @property
    def draw_id(self) -> int:
        return self.subspace.draw_id


def regressor_matrix(panel: TimeSeriesPanel, roles: VariableRoles | None = None,
                     rows=None) -> tuple[np.ndarray, list[str]]:
    """Full regressor block [1, shock, essential..., all controls...].

    Returns the matrix for the requested rows (all rows by default) and
    the column labels. Subspace designs are column slices of this block.
    """
    roles = roles if roles is not None else panel.roles
    if roles is None:
        raise EstimationError("panel has no variable roles; pass them explicitly")
    T = panel.n_rows
    cols = [np.ones((T, 1)), panel.column(roles.shock)[:, None]]
    labels = ["const", roles.shock]
    if roles.essential:
        cols.append(panel.columns(roles.essential))
        labels.extend(roles.essential)
    if roles.high_dimensional:
        cols.append(panel.columns(roles.high_dimensional))
        labels.extend(roles.high_dimensional)
    M = np.hstack(cols)
    if rows is not None:
        M = M[rows]
    return M, labels


def build_lp_design(panel: TimeSeriesPanel, subspace: Subspace, horizon: int,
                    roles: VariableRoles | None = None) -> LpProblem:
    """Assemble the horizon-``horizon`` problem for one subspace.

    Response row i is the target at time i + horizon; regressor row i is
    dated i. Raises when the sample is too short for the horizon.
    """
    roles = roles if roles is not None else panel.roles
    if roles is None:
        raise EstimationError("panel has no variable roles; pass them explicitly")
    if horizon < 0:
        raise EstimationError("horizon must be nonnegative")
    n_fixed = 2 + len(roles.essential)
    p_total = n_fixed + subspace.size
    t_eff = panel.n_rows - horizon
    if t_eff < p_total + MIN_SPARE_DOF:
        raise EstimationError(
            f"horizon {horizon} infeasible: {t_eff} usable rows for "
            f"{p_total} regressors")
    if subspace.size and subspace.indices[-1] >= len(roles.high_dimensional):
        raise EstimationError(
            f"subspace index {subspace.indices[-1]} out of range for "
            f"q={len(roles.high_dimensional)}")

    M, labels = regressor_matrix(panel, roles)
    keep = list(range(n_fixed)) + [n_fixed + j for j in subspace.indices]
    design = DesignMatrix(M[:t_eff, keep], tuple(labels[c] for c in keep))
    response = panel.column(roles.target)[horizon:]
    return LpProblem(horizon, response, design, n_fixed, subspace)


def fit_subspace(problem: LpProblem, holdout_fraction: float = 0.0) -> SubspaceFit:
    """OLS fit of one subspace problem with an optional chronological holdout.

    With ``holdout_fraction`` > 0 the fit uses the first (1 - fraction) of
    the rows and ``oos_mspe`` is the mean squared prediction error on the
    held-out tail; with 0 the full sample is used and ``oos_mspe`` is None.
    Rank-deficient designs (including a shock column collinear with the
    controls) are flagged degenerate rather than raised, so the ensemble
    can drop them.
    """
    if not 0 <= holdout_fraction < 1:
        raise ValueError("holdout_fraction must be in [0, 1)")
    t_eff = problem.t_effective
    n_holdout = int(holdout_fraction * t_eff)
    n_train = t_eff - n_holdout
    X = problem.design.values
    y = problem.response

    train_design = DesignMatrix(X[:n_train], problem.design.column_labels)
    fit = ols_fit(train_design, y[:n_train])

    degenerate = fit.rank_deficient or n_train < X.shape[1] + MIN_SPARE_DOF
    beta = float(fit.coefficients[SHOCK_COLUMN])
    if degenerate or fit.xtx_inv_diag is None or not np.isfinite(fit.sigma2):
        variance = float("nan")
        degenerate = True
    else:
        variance = float(fit.sigma2 * fit.xtx_inv_diag[SHOCK_COLUMN])

    oos_mspe = None
    if n_holdout > 0:
        errors = y[n_train:] - X[n_train:] @ fit.coefficients
        oos_mspe = float(np.mean(errors**2))

    return SubspaceFit(
        beta_h=beta,
        bic=fit.bic,
        insample_rss=fit.rss,
        oos_mspe=oos_mspe,
        beta_variance=variance,
        subspace=problem.subspace,
        degenerate=degenerate,
        coefficients=fit.coefficients,
        n_train=n_train,
    )
