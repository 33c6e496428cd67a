"""Subspace-ensemble aggregation and the main impulse-response estimator.

Per horizon the estimator draws ``n_subspaces`` subspaces, fits one local
projection per subspace, and combines the shock coefficients with the
configured weights:

    beta_h = sum_j w_j beta_h^(j) / sum_j w_j

Weight options: equal, exp(-lambda * BIC_j) (min-shifted before the
exponential; the shift cancels in the ratio), 1 / (MSPE_j + eps) from a
chronological holdout, or 1 / (Var(beta^(j)) + eps). The per-horizon
subspace size is either fixed or selected by minimising a blocked
cross-validated prediction error over a grid, expanding the grid while
the best score stays above the configured threshold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from ._seeding import STAGE_CV, STAGE_SUBSPACE, derive_seed
from .errors import ConfigError, EstimationError
from .linalg import DesignMatrix
from .panel import TimeSeriesPanel, VariableRoles
from .projection import (MIN_SPARE_DOF, LpProblem, SubspaceFit, fit_subspace,
                         regressor_matrix)
from .sampling import (CategoryScheme, Subspace, draw_stratified_subspaces,
                       draw_uniform_subspaces)

__all__ = [
    "WeightScheme",
    "AdaptiveKConfig",
    "RslpSettings",
    "IrfEstimate",
    "HorizonModel",
    "compute_weights",
    "aggregate_fits",
    "select_k",
    "estimate_rslp",
    "fit_rslp_horizon",
    "blocked_folds",
]

WEIGHT_KINDS = ("equal", "bic", "inverse_mspe", "inverse_variance")


@dataclass(frozen=True)
class WeightScheme:
    """How subspace fits are weighted during aggregation."""

    kind: str = "equal"
    bic_lambda: float = 1.0
    epsilon: float = 1e-8

    def __post_init__(self):
        if self.kind not in WEIGHT_KINDS:
            raise ConfigError(f"unknown weight kind {self.kind!r}; "
                              f"expected one of {WEIGHT_KINDS}")
        if self.bic_lambda <= 0:
            raise ConfigError("bic_lambda must be positive")
        if self.epsilon <= 0:
            raise ConfigError("epsilon must be positive")


@dataclass(frozen=True)
class AdaptiveKConfig:
    """Grid search settings for per-horizon subspace-size selection."""

    k_min: int = 2
    k_max: int = 16
    expansion_factor: float = 1.5
    threshold: float = math.inf
    metric: str = "cv_mspe"
    n_folds: int = 5
    max_expansions: int = 2

    def __post_init__(self):
        if not 1 <= self.k_min <= self.k_max:
            raise ConfigError("need 1 <= k_min <= k_max")
        if self.expansion_factor <= 1:
            raise ConfigError("expansion_factor must exceed 1")
        if not self.threshold > 0:
            raise ConfigError("threshold must be positive")
        if self.metric != "cv_mspe":
            raise ConfigError(f"unsupported adaptive-k metric {self.metric!r}")
        if self.n_folds < 2:
            raise ConfigError("n_folds must be at least 2")
        if self.max_expansions < 0:
            raise ConfigError("max_expansions must be nonnegative")


@dataclass(frozen=True)
class RslpSettings:
    """Full configuration of the subspace ensemble estimator."""

    n_subspaces: int = 100
    k: int | None = 10
    adaptive: AdaptiveKConfig | None = None
    weights: WeightScheme = field(default_factory=WeightScheme)
    sampler: str = "uniform"
    quotas: dict[str, int] | None = None
    holdout_fraction: float = 0.0

    def __post_init__(self):
        if self.n_subspaces < 1:
            raise ConfigError("n_subspaces must be at least 1")
        if (self.k is None) == (self.adaptive is None):
            raise ConfigError("set exactly one of a fixed k or an adaptive-k block")
        if self.k is not None and self.k < 1:
            raise ConfigError("k must be at least 1")
        if self.sampler not in ("uniform", "stratified"):
            raise ConfigError(f"unknown sampler {self.sampler!r}")
        if not 0 <= self.holdout_fraction < 1:
            raise ConfigError("holdout_fraction must be in [0, 1)")
        if self.weights.kind == "inverse_mspe" and self.holdout_fraction == 0:
            raise ConfigError("inverse_mspe weights need holdout_fraction > 0")


@dataclass
class IrfEstimate:
    """Aggregated impulse response at one horizon."""

    horizon: int
    beta: float
    subspace_std: float
    n_effective: int
    selected_k: int
    weights_entropy: float


def compute_weights(fits: list[SubspaceFit], scheme: WeightScheme) -> np.ndarray:
    """Unnormalised weights for non-degenerate fits; aggregation normalises."""
    if not fits:
        raise EstimationError("no fits to weight")
    if any(f.degenerate for f in fits):
        raise EstimationError("degenerate fits must be dropped before weighting")
    if scheme.kind == "equal":
        return np.ones(len(fits))
    if scheme.kind == "bic":
        bics = np.array([f.bic for f in fits])
        return np.exp(-scheme.bic_lambda * (bics - bics.min()))
    if scheme.kind == "inverse_mspe":
        if any(f.oos_mspe is None for f in fits):
            raise ConfigError("inverse_mspe weights need holdout fits "
                              "(holdout_fraction > 0)")
        return 1.0 / (np.array([f.oos_mspe for f in fits]) + scheme.epsilon)
    return 1.0 / (np.array([f.beta_variance for f in fits]) + scheme.epsilon)


def aggregate_fits(fits: list[SubspaceFit], scheme: WeightScheme,
                   horizon: int = 0, selected_k: int | None = None) -> IrfEstimate:
    """Weighted mean of the subspace shock coefficients.

    Fits are re-ordered by draw id before summation, so the result is
    independent of the order in which they were produced. Degenerate fits
    are dropped; if none survive the horizon errors out.
    """
    ordered = sorted(fits, key=lambda f: f.draw_id)
    kept = [f for f in ordered if not f.degenerate]
    if not kept:
        raise EstimationError(f"all {len(fits)} subspace fits degenerate "
                              f"at horizon {horizon}")
    betas = np.array([f.beta_h for f in kept])
    weights = compute_weights(kept, scheme)
    normalized = weights / weights.sum()
    beta = float(normalized @ betas)
    subspace_std = float(np.std(betas, ddof=1)) if len(kept) > 1 else 0.0
    entropy = float(-(normalized * np.log(normalized)).sum())
    if selected_k is None:
        selected_k = kept[0].subspace.size
    return IrfEstimate(horizon, beta, subspace_std, len(kept), selected_k, entropy)


def blocked_folds(n_rows: int, n_folds: int) -> list[np.ndarray]:
    """Contiguous fold index sets for time-series cross-validation."""
    if n_folds < 2 or n_folds > n_rows:
        raise ConfigError(f"cannot split {n_rows} rows into {n_folds} folds")
    return list(np.array_split(np.arange(n_rows), n_folds))


class _DesignBank:
    """Shared per-horizon design: response plus the full regressor block.

    Each subspace fit works on a column slice, each resampled/CV fit on a
    row slice, so the block is built once per horizon.
    """

    def __init__(self, panel: TimeSeriesPanel, roles: VariableRoles, horizon: int):
        if horizon < 0:
            raise EstimationError("horizon must be nonnegative")
        self.horizon = horizon
        self.roles = roles
        self.n_fixed = 2 + len(roles.essential)
        self.q = len(roles.high_dimensional)
        t_eff = panel.n_rows - horizon
        if t_eff < self.n_fixed + MIN_SPARE_DOF:
            raise EstimationError(f"horizon {horizon} infeasible: {t_eff} usable rows")
        matrix, labels = regressor_matrix(panel, roles)
        self.matrix = matrix[:t_eff]
        self.labels = labels
        self.response = panel.column(roles.target)[horizon:]
        self.t_effective = t_eff

    def subset(self, rows) -> "_DesignBank":
        """Row-resampled view (bootstrap replicates, jackknife deletions)."""
        view = object.__new__(_DesignBank)
        view.horizon = self.horizon
        view.roles = self.roles
        view.n_fixed = self.n_fixed
        view.q = self.q
        view.matrix = self.matrix[rows]
        view.labels = self.labels
        view.response = self.response[rows]
        view.t_effective = len(view.response)
        return view

    def check_size(self, k: int) -> None:
        if k > self.q:
            raise ConfigError(f"subspace size {k} exceeds q={self.q}")
        if self.t_effective < self.n_fixed + k + MIN_SPARE_DOF:
            raise EstimationError(
                f"horizon {self.horizon} infeasible for k={k}: "
                f"{self.t_effective} usable rows")

    def column_ids(self, subspace: Subspace) -> list[int]:
        return list(range(self.n_fixed)) + [self.n_fixed + j for j in subspace.indices]

    def problem(self, subspace: Subspace, rows=None) -> LpProblem:
        bank = self if rows is None else self.subset(rows)
        cols = bank.column_ids(subspace)
        design = DesignMatrix._trusted(bank.matrix[:, cols],
                                       tuple(bank.labels[c] for c in cols))
        return LpProblem(bank.horizon, bank.response, design, bank.n_fixed, subspace)

    def fit_all(self, subspaces, holdout_fraction: float, rows=None) -> list[SubspaceFit]:
        bank = self if rows is None else self.subset(rows)
        return [fit_subspace(bank.problem(s), holdout_fraction) for s in subspaces]


@dataclass
class HorizonModel:
    """Fitted per-horizon ensemble, able to forecast new regressor rows."""

    estimate: IrfEstimate
    fits: list[SubspaceFit]
    weights: np.ndarray
    n_fixed: int

    def predict(self, regressor_rows: np.ndarray) -> np.ndarray:
        """Weight-averaged per-subspace forecasts.

        Subspace-specific control coefficients live in different coordinate
        systems, so predictions, not coefficients, are averaged.
        """
        out = np.zeros(regressor_rows.shape[0])
        for w, fit in zip(self.weights, self.fits):
            cols = list(range(self.n_fixed)) + [self.n_fixed + j
                                                for j in fit.subspace.indices]
            out += w * (regressor_rows[:, cols] @ fit.coefficients)
        return out


def _draw_subspaces(settings: RslpSettings, panel: TimeSeriesPanel,
                    roles: VariableRoles, k: int, seed: int) -> list[Subspace]:
    q = len(roles.high_dimensional)
    if settings.sampler == "stratified":
        scheme = CategoryScheme.from_panel(panel, roles, quotas=settings.quotas)
        return draw_stratified_subspaces(scheme, k, settings.n_subspaces, seed)
    return draw_uniform_subspaces(q, k, settings.n_subspaces, seed)


def _fit_ensemble(bank: _DesignBank, subspaces, settings: RslpSettings,
                  rows=None) -> HorizonModel:
    fits = bank.fit_all(subspaces, settings.holdout_fraction, rows)
    estimate = aggregate_fits(fits, settings.weights, horizon=bank.horizon)
    kept = [f for f in sorted(fits, key=lambda f: f.draw_id) if not f.degenerate]
    weights = compute_weights(kept, settings.weights)
    return HorizonModel(estimate, kept, weights / weights.sum(), bank.n_fixed)


def _cv_mspe(bank: _DesignBank, k: int, settings: RslpSettings, seed: int,
             panel: TimeSeriesPanel, roles: VariableRoles, n_folds: int) -> float:
    """Blocked cross-validated prediction error of the size-k ensemble."""
    subspaces = _draw_subspaces(settings, panel, roles, k,
                                derive_seed(seed, STAGE_CV, bank.horizon, k))
    all_rows = np.arange(bank.t_effective)
    sse = 0.0
    count = 0
    for fold in blocked_folds(bank.t_effective, n_folds):
        train = np.setdiff1d(all_rows, fold)
        if train.size < bank.n_fixed + k + MIN_SPARE_DOF:
            return math.inf
        try:
            model = _fit_ensemble(bank, subspaces, settings, rows=train)
        except EstimationError:
            return math.inf
        predicted = model.predict(bank.matrix[fold])
        sse += float(np.sum((bank.response[fold] - predicted) ** 2))
        count += fold.size
    return sse / count


def _scan_k(score, k_min: int, k_max: int, q: int, threshold: float,
            expansion_factor: float, max_expansions: int):
    """Grid scan with smallest-k tie-breaking and threshold-driven expansion."""
    lo, hi = k_min, min(k_max, q)
    if lo > hi:
        raise ConfigError(f"adaptive-k grid empty: k_min={k_min} exceeds q={q}")
    curve: dict[int, float] = {}
    expansions = 0
    while True:
        for k in range(lo, hi + 1):
            if k not in curve:
                curve[k] = score(k)
        k_star = min(curve, key=lambda k: (curve[k], k))
        if curve[k_star] < threshold or expansions >= max_expansions:
            break
        new_hi = min(q, math.ceil(hi * expansion_factor))
        if new_hi == hi:
            break
        lo, hi = hi + 1, new_hi
        expansions += 1
    if not math.isfinite(curve[k_star]) and curve[k_star] > 0:
        raise EstimationError("adaptive-k selection failed: every candidate "
                              "subspace size was infeasible")
    return k_star, curve


def select_k(panel: TimeSeriesPanel, roles: VariableRoles | None, horizon: int,
             config: AdaptiveKConfig, settings: RslpSettings, seed: int):
    """Pick the horizon's subspace size by scanning the adaptive-k grid.

    Returns the selected size and the full metric curve (k -> blocked CV
    MSPE) for diagnostics. Ties break toward the smaller k; if the best
    score is not below ``config.threshold`` the upper grid edge grows by
    ``expansion_factor`` (capped at q) up to ``max_expansions`` times.
    """
    roles = roles if roles is not None else panel.roles
    bank = _DesignBank(panel, roles, horizon)

    def score(k: int) -> float:
        try:
            bank.check_size(k)
        except (ConfigError, EstimationError):
            return math.inf
        return _cv_mspe(bank, k, settings, seed, panel, roles, config.n_folds)

    return _scan_k(score, config.k_min, config.k_max, bank.q, config.threshold,
                   config.expansion_factor, config.max_expansions)


def fit_rslp_horizon(panel: TimeSeriesPanel, roles: VariableRoles | None,
                     horizon: int, settings: RslpSettings, seed: int,
                     selected_k: int | None = None,
                     metric_curves: dict | None = None,
                     rows=None) -> HorizonModel:
    """Fit the ensemble at one horizon; resolves adaptive k when needed.

    ``rows`` restricts the fit to a subset of the design rows (used by
    bootstrap replicates); adaptive selection is skipped in that case
    unless ``selected_k`` is supplied by the caller.
    """
    roles = roles if roles is not None else panel.roles
    bank = _DesignBank(panel, roles, horizon)
    if selected_k is None:
        if settings.adaptive is not None and rows is None:
            selected_k, curve = select_k(panel, roles, horizon, settings.adaptive,
                                         settings, seed)
            if metric_curves is not None:
                metric_curves[horizon] = curve
        elif settings.adaptive is not None:
            selected_k = settings.adaptive.k_min
        else:
            selected_k = settings.k
    bank.check_size(selected_k)
    subspaces = _draw_subspaces(settings, panel, roles, selected_k,
                                derive_seed(seed, STAGE_SUBSPACE, horizon, selected_k))
    model = _fit_ensemble(bank, subspaces, settings, rows=rows)
    model.estimate.selected_k = selected_k
    return model


def estimate_rslp(panel: TimeSeriesPanel, roles: VariableRoles | None,
                  horizons, settings: RslpSettings, seed: int,
                  metric_curves: dict | None = None) -> list[IrfEstimate]:
    """Impulse response estimates for every requested horizon.

    Deterministic given ``seed``: subspace draws are keyed by
    (seed, horizon, k, draw_id) and aggregation is order-independent.
    When ``metric_curves`` is a dict it receives the adaptive-k metric
    curve per horizon.
    """
    roles = roles if roles is not None else panel.roles
    horizons = list(horizons)
    if not horizons:
        raise ConfigError("need at least one horizon")
    if any(h < 0 for h in horizons):
        raise ConfigError("horizons must be nonnegative")
    if len(set(horizons)) != len(horizons):
        raise ConfigError("horizons must be distinct")
    out = []
    for h in horizons:
        try:
            model = fit_rslp_horizon(panel, roles, h, settings, seed,
                                     metric_curves=metric_curves)
        except (ConfigError, EstimationError):
            raise
        except Exception as exc:  # keep horizon context on unexpected failures
            raise EstimationError(f"horizon {h}: {exc}") from exc
        out.append(model.estimate)
    return out
