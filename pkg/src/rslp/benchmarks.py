"""Comparison estimators sharing the local-projection design and solvers.

All benchmarks emit the same `IrfEstimate` schema as the subspace
ensemble, so the evaluation harness treats every estimator uniformly.
"""

from __future__ import annotations

import inspect
from dataclasses import dataclass

import numpy as np

from ._seeding import derive_seed
from .ensemble import (HorizonModel, IrfEstimate, RslpSettings, WeightScheme,
                       _DesignBank, blocked_folds, fit_rslp_horizon)
from .errors import ConfigError, EstimationError
from .linalg import DesignMatrix, elastic_net_fit, ols_fit, principal_components, ridge_fit
from .projection import SHOCK_COLUMN

__all__ = [
    "BenchmarkSpec",
    "estimate_base_rslp",
    "estimate_factor_lp",
    "estimate_ridge_lp",
    "estimate_elastic_net_lp",
    "estimate_oracle_lp",
    "fit_horizon_model",
    "run_estimator",
]

BENCHMARK_KINDS = ("base_rslp", "factor_lp", "ridge_lp", "elastic_net_lp", "oracle_lp")


@dataclass(frozen=True)
class BenchmarkSpec:
    """Which comparison estimator to run, with its kind-specific knobs."""

    kind: str
    k: int = 10
    n_subspaces: int = 100
    n_factors: int = 8
    penalties: tuple[float, ...] | float | None = None
    l1_grid: tuple[float, ...] | None = None
    oracle_indices: tuple[int, ...] | None = None
    cv_folds: int = 5

    def __post_init__(self):
        if self.kind not in BENCHMARK_KINDS:
            raise ConfigError(f"unknown benchmark kind {self.kind!r}; "
                              f"expected one of {BENCHMARK_KINDS}")


@dataclass
class LinearHorizonModel:
    """A single linear fit per horizon, with its prediction mapping."""

    estimate: IrfEstimate
    coefficients: np.ndarray
    mapper: object  # full regressor rows -> design rows

    def predict(self, regressor_rows: np.ndarray) -> np.ndarray:
        return self.mapper(regressor_rows) @ self.coefficients


def _single_fit_estimate(bank, design_values, labels, horizon, selected_k):
    design = DesignMatrix(design_values, labels)
    fit = ols_fit(design, bank.response)
    if fit.rank_deficient:
        raise EstimationError(f"horizon {horizon}: benchmark design is rank deficient")
    estimate = IrfEstimate(horizon, float(fit.coefficients[SHOCK_COLUMN]),
                           subspace_std=0.0, n_effective=1,
                           selected_k=selected_k, weights_entropy=0.0)
    return estimate, fit.coefficients


def _fit_base_rslp_horizon(panel, roles, horizon, spec: BenchmarkSpec, seed, rows=None):
    settings = RslpSettings(n_subspaces=spec.n_subspaces, k=spec.k,
                            weights=WeightScheme("equal"), sampler="uniform")
    return fit_rslp_horizon(panel, roles, horizon, settings, seed, rows=rows)


def _fit_factor_lp_horizon(panel, roles, horizon, spec: BenchmarkSpec, seed, rows=None):
    bank = _DesignBank(panel, roles, horizon)
    if rows is not None:
        bank = bank.subset(rows)
    if spec.n_factors < 1:
        raise ConfigError("n_factors must be at least 1")
    if spec.n_factors > min(bank.t_effective, bank.q):
        raise ConfigError(f"n_factors={spec.n_factors} exceeds "
                          f"min(T_eff, q)={min(bank.t_effective, bank.q)}")
    G = bank.matrix[:, bank.n_fixed:]
    g_design = DesignMatrix(G, tuple(bank.labels[bank.n_fixed:]))
    _, loadings, _ = principal_components(g_design, spec.n_factors)
    g_mean = G.mean(axis=0)
    n_fixed = bank.n_fixed

    def mapper(rows):
        return np.hstack([rows[:, :n_fixed], (rows[:, n_fixed:] - g_mean) @ loadings])

    labels = tuple(bank.labels[:n_fixed]) + tuple(
        f"factor{i + 1}" for i in range(spec.n_factors))
    estimate, coef = _single_fit_estimate(bank, mapper(bank.matrix), labels,
                                          horizon, spec.n_factors)
    return LinearHorizonModel(estimate, coef, mapper)


def _select_penalty_cv(bank, grid, fit_fn, n_folds):
    """Pick the grid value minimising blocked CV MSPE; ties go to the smallest."""
    all_rows = np.arange(bank.t_effective)
    labels = tuple(bank.labels)
    best = None
    for value in grid:
        sse = 0.0
        count = 0
        for fold in blocked_folds(bank.t_effective, n_folds):
            train = np.setdiff1d(all_rows, fold)
            design = DesignMatrix(bank.matrix[train], labels)
            coef = fit_fn(design, bank.response[train], value).coefficients
            err = bank.response[fold] - bank.matrix[fold] @ coef
            sse += float(err @ err)
            count += fold.size
        score = sse / count
        if best is None or score < best[1] - 1e-15:
            best = (value, score)
    return best[0]


def _fit_ridge_lp_horizon(panel, roles, horizon, spec: BenchmarkSpec, seed, rows=None):
    bank = _DesignBank(panel, roles, horizon)
    if rows is not None:
        bank = bank.subset(rows)
    penalized = list(range(bank.n_fixed, bank.n_fixed + bank.q))
    penalties = spec.penalties
    if penalties is None:
        penalties = tuple(scale * bank.q for scale in (0.1, 1.0, 10.0, 100.0))
    if np.isscalar(penalties):
        penalty = float(penalties)
    else:
        penalty = _select_penalty_cv(
            bank, sorted(penalties),
            lambda design, y, lam: ridge_fit(design, y, lam, penalized),
            spec.cv_folds)
    design = DesignMatrix(bank.matrix, tuple(bank.labels))
    fit = ridge_fit(design, bank.response, penalty, penalized)
    if fit.rank_deficient:
        raise EstimationError(f"horizon {horizon}: ridge design is rank deficient")
    estimate = IrfEstimate(horizon, float(fit.coefficients[SHOCK_COLUMN]),
                           0.0, 1, bank.q, 0.0)
    return LinearHorizonModel(estimate, fit.coefficients, lambda rows: rows)


def _default_l1_grid(bank, penalized):
    scale = max(abs(bank.matrix[:, j] @ bank.response) for j in penalized)
    scale /= bank.t_effective
    return tuple(scale * 10.0**e for e in (-3.0, -2.25, -1.5, -0.75, 0.0))


def _fit_elastic_net_lp_horizon(panel, roles, horizon, spec: BenchmarkSpec, seed, rows=None):
    bank = _DesignBank(panel, roles, horizon)
    if rows is not None:
        bank = bank.subset(rows)
    penalized = list(range(bank.n_fixed, bank.n_fixed + bank.q))
    grid = spec.l1_grid if spec.l1_grid is not None else _default_l1_grid(bank, penalized)
    if np.isscalar(grid):
        l1 = float(grid)
    else:
        l1 = _select_penalty_cv(
            bank, sorted(grid),
            lambda design, y, lam: elastic_net_fit(design, y, lam, lam, penalized),
            spec.cv_folds)
    design = DesignMatrix(bank.matrix, tuple(bank.labels))
    fit = elastic_net_fit(design, bank.response, l1, l1, penalized)
    estimate = IrfEstimate(horizon, float(fit.coefficients[SHOCK_COLUMN]),
                           0.0, 1, bank.q, 0.0)
    return LinearHorizonModel(estimate, fit.coefficients, lambda rows: rows)


def _fit_oracle_lp_horizon(panel, roles, horizon, spec: BenchmarkSpec, seed, rows=None):
    indices = spec.oracle_indices
    if indices is None:
        truth = panel.synthetic_truth
        if truth is None:
            raise ConfigError("oracle_lp needs synthetic data with a truth "
                              "annotation, or explicit oracle_indices")
        indices = truth.relevant_indices
    bank = _DesignBank(panel, roles, horizon)
    if rows is not None:
        bank = bank.subset(rows)
    cols = list(range(bank.n_fixed)) + [bank.n_fixed + int(j) for j in indices]
    labels = tuple(bank.labels[c] for c in cols)
    estimate, coef = _single_fit_estimate(bank, bank.matrix[:, cols], labels,
                                          horizon, len(indices))
    return LinearHorizonModel(estimate, coef, lambda rows: rows[:, cols])


_HORIZON_FITTERS = {
    "base_rslp": _fit_base_rslp_horizon,
    "factor_lp": _fit_factor_lp_horizon,
    "ridge_lp": _fit_ridge_lp_horizon,
    "elastic_net_lp": _fit_elastic_net_lp_horizon,
    "oracle_lp": _fit_oracle_lp_horizon,
}


def fit_horizon_model(panel, roles, horizon, estimator, seed, rows=None):
    """Fit any supported estimator at one horizon.

    ``estimator`` is an `RslpSettings`, a `BenchmarkSpec`, or a callable
    ``(panel, roles, horizon, seed) -> model`` with ``estimate`` and
    ``predict`` attributes (used by tests for stub estimators). ``rows``
    restricts the fit to a subset of the horizon's design rows (bootstrap
    replicates, jackknife deletions).
    """
    roles = roles if roles is not None else panel.roles
    if isinstance(estimator, RslpSettings):
        return fit_rslp_horizon(panel, roles, horizon, estimator, seed, rows=rows)
    if isinstance(estimator, BenchmarkSpec):
        return _HORIZON_FITTERS[estimator.kind](panel, roles, horizon, estimator,
                                                seed, rows=rows)
    if callable(estimator):
        if "rows" in inspect.signature(estimator).parameters:
            return estimator(panel, roles, horizon, seed, rows=rows)
        if rows is not None:
            raise ConfigError("custom estimator does not support row resampling")
        return estimator(panel, roles, horizon, seed)
    raise ConfigError(f"unsupported estimator spec {type(estimator).__name__}")


def run_estimator(panel, roles, horizons, estimator, seed) -> list[IrfEstimate]:
    """Estimates for every horizon from any supported estimator spec."""
    return [fit_horizon_model(panel, roles, h, estimator, seed).estimate
            for h in horizons]


def estimate_base_rslp(panel, roles, horizons, k: int, n_subspaces: int = 100,
                       seed: int = 0) -> list[IrfEstimate]:
    """Plain subspace ensemble: fixed k, uniform sampling, simple average."""
    settings = RslpSettings(n_subspaces=n_subspaces, k=k,
                            weights=WeightScheme("equal"), sampler="uniform")
    return [fit_rslp_horizon(panel, roles, h, settings, seed).estimate
            for h in horizons]


def estimate_factor_lp(panel, roles, horizons, n_factors: int = 8) -> list[IrfEstimate]:
    """LP with the control block replaced by its top principal components."""
    spec = BenchmarkSpec("factor_lp", n_factors=n_factors)
    return run_estimator(panel, roles, horizons, spec, seed=0)


def estimate_ridge_lp(panel, roles, horizons, penalties=None,
                      cv_folds: int = 5) -> list[IrfEstimate]:
    """LP with a ridge penalty on the high-dimensional control coefficients.

    ``penalties`` may be a scalar (used directly) or a grid selected by
    blocked cross-validation; default grid {0.1, 1, 10, 100} * q.
    """
    spec = BenchmarkSpec("ridge_lp", penalties=penalties, cv_folds=cv_folds)
    return run_estimator(panel, roles, horizons, spec, seed=0)


def estimate_elastic_net_lp(panel, roles, horizons, l1_grid=None,
                            cv_folds: int = 5) -> list[IrfEstimate]:
    """LP with an elastic net on the control block (l2 tied to l1)."""
    spec = BenchmarkSpec("elastic_net_lp", l1_grid=l1_grid, cv_folds=cv_folds)
    return run_estimator(panel, roles, horizons, spec, seed=0)


def estimate_oracle_lp(panel, roles, horizons, true_relevant=None) -> list[IrfEstimate]:
    """LP using only the controls that truly enter the data-generating
    process; available for synthetic panels only."""
    spec = BenchmarkSpec("oracle_lp", oracle_indices=None if true_relevant is None
                         else tuple(true_relevant))
    return run_estimator(panel, roles, horizons, spec, seed=0)
