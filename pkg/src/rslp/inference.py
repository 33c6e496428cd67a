"""Moving-block bootstrap inference for the impulse response estimates.

For each replicate the horizon's (regressor, response) row pairs are
resampled in contiguous blocks, the complete estimation is re-run with
replicate-keyed subspace draws, and the replicate coefficients feed a
percentile or BCa interval. Blocks of whole time-index pairs preserve the
serial dependence the intervals are meant to survive.

Two resampling units are supported:

``pairs`` (default)
    Blocks are drawn over the horizon's pre-shift time index and applied
    to the prebuilt design rows, so every (regressor, response) pair stays
    internally aligned.
``series``
    Blocks resample the raw panel rows; horizon pairs are formed afterwards
    on the resampled series. Pairs that straddle block joints mix
    unrelated dates, which is the textbook cost of this unit.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm

from ._seeding import (STAGE_BOOTSTRAP, STAGE_BOOTSTRAP_SUBSPACE, STAGE_JACKKNIFE,
                       STAGE_SUBSPACE, derive_seed, rng_for)
from .benchmarks import fit_horizon_model
from .ensemble import RslpSettings, _DesignBank, _draw_subspaces, aggregate_fits
from .errors import ConfigError, EstimationError, InferenceError
from .panel import TimeSeriesPanel

__all__ = [
    "BootstrapConfig",
    "ConfidenceInterval",
    "auto_block_length",
    "block_resample",
    "percentile_interval",
    "bca_interval",
    "bootstrap_irf",
]


@dataclass(frozen=True)
class BootstrapConfig:
    """Bootstrap settings; ``seed`` is the master seed for the whole run."""

    replicates: int = 200
    block_length: int | None = None
    interval: str = "percentile"
    confidence: float = 0.95
    seed: int = 0
    unit: str = "pairs"

    def __post_init__(self):
        if self.replicates < 2:
            raise ConfigError("bootstrap needs at least 2 replicates")
        if self.block_length is not None and self.block_length < 1:
            raise ConfigError("block_length must be at least 1")
        if not 0 < self.confidence < 1:
            raise ConfigError("confidence must be in (0, 1)")
        if self.interval not in ("percentile", "bca"):
            raise ConfigError(f"unknown interval method {self.interval!r}")
        if self.unit not in ("pairs", "series"):
            raise ConfigError(f"unknown resampling unit {self.unit!r}")
        if self.seed < 0:
            raise ConfigError("seed must be nonnegative")


@dataclass
class ConfidenceInterval:
    """Bootstrap interval for one horizon's impulse response."""

    horizon: int
    lower: float
    upper: float
    width: float
    point: float
    replicate_betas: np.ndarray
    method: str = "percentile"
    block_length: int = 1
    n_replicates: int = 0


def auto_block_length(n_obs: int) -> int:
    """Rule-of-thumb block length, ``ceil(1.75 * T**(1/3))``.

    A published approximation of automatic block selection; override it
    through `BootstrapConfig.block_length` when something sharper is
    needed.
    """
    if n_obs < 8:
        raise ValueError("automatic block length needs at least 8 observations")
    # small epsilon so exact cube roots do not round up (e.g. T = 512)
    return max(1, math.ceil(1.75 * n_obs ** (1.0 / 3.0) - 1e-9))


def block_resample(n_obs: int, block_length: int, seed: int, replicate_id: int) -> np.ndarray:
    """Moving-block resample of ``0..n_obs-1``.

    Concatenates ``ceil(n_obs / block_length)`` blocks, each a contiguous
    run starting uniformly in ``0..n_obs-block_length``, truncated to
    ``n_obs`` entries. Deterministic given (seed, replicate_id).
    """
    if not 1 <= block_length <= n_obs:
        raise ValueError(f"block_length={block_length} must be in 1..{n_obs}")
    rng = rng_for(seed, STAGE_BOOTSTRAP, replicate_id)
    n_blocks = -(-n_obs // block_length)
    starts = rng.integers(0, n_obs - block_length + 1, size=n_blocks)
    idx = (starts[:, None] + np.arange(block_length)[None, :]).ravel()
    return idx[:n_obs]


def percentile_interval(betas: np.ndarray, confidence: float) -> tuple[float, float]:
    """Equal-tail percentile interval, linear-interpolation quantiles."""
    alpha = 1.0 - confidence
    lo, hi = np.quantile(betas, [alpha / 2.0, 1.0 - alpha / 2.0])
    return float(lo), float(hi)


def bca_interval(betas: np.ndarray, point: float, jackknife_values: np.ndarray,
                 confidence: float) -> tuple[float, float]:
    """Bias-corrected accelerated interval.

    The bias correction comes from the fraction of replicates below the
    point estimate; the acceleration from leave-one-block-out jackknife
    deviations, ``a = sum(d^3) / (6 * sum(d^2)^1.5)``.
    """
    betas = np.asarray(betas, dtype=float)
    n = betas.size
    if np.ptp(betas) == 0.0:
        return float(betas[0]), float(betas[0])
    below = np.count_nonzero(betas < point) / n
    below = min(max(below, 1.0 / (n + 1)), n / (n + 1))
    z0 = norm.ppf(below)
    deviations = jackknife_values.mean() - jackknife_values
    denom = np.sum(deviations**2) ** 1.5
    accel = float(np.sum(deviations**3) / (6.0 * denom)) if denom > 0 else 0.0

    alpha = 1.0 - confidence
    out = []
    for z_alpha in (norm.ppf(alpha / 2.0), norm.ppf(1.0 - alpha / 2.0)):
        shifted = z0 + (z0 + z_alpha) / (1.0 - accel * (z0 + z_alpha))
        out.append(norm.cdf(shifted))
    lo, hi = np.quantile(betas, np.clip(out, 0.0, 1.0))
    return float(lo), float(hi)


def _replicate_beta(panel, roles, horizon, estimator, bank, rows, config, rep_id,
                    selected_k):
    try:
        if isinstance(estimator, RslpSettings):
            sub_seed = derive_seed(config.seed, STAGE_BOOTSTRAP_SUBSPACE,
                                   horizon, rep_id)
            subspaces = _draw_subspaces(estimator, panel, roles, selected_k, sub_seed)
            fits = bank.fit_all(subspaces, estimator.holdout_fraction, rows=rows)
            return aggregate_fits(fits, estimator.weights, horizon=horizon).beta
        model = fit_horizon_model(panel, roles, horizon, estimator,
                                  derive_seed(config.seed, STAGE_BOOTSTRAP_SUBSPACE,
                                              horizon, rep_id),
                                  rows=rows)
        return model.estimate.beta
    except (EstimationError, ConfigError):
        return float("nan")


def _series_replicate_beta(panel, roles, horizon, estimator, config, rep_id,
                           selected_k, block_length):
    idx = block_resample(panel.n_rows, block_length,
                         derive_seed(config.seed, STAGE_BOOTSTRAP, horizon), rep_id)
    resampled = TimeSeriesPanel(np.arange(panel.n_rows), panel.values[idx],
                                panel.variable_names, roles=panel.roles,
                                categories=panel.categories,
                                synthetic_truth=panel.synthetic_truth)
    try:
        if isinstance(estimator, RslpSettings):
            from .ensemble import fit_rslp_horizon
            sub_seed = derive_seed(config.seed, STAGE_BOOTSTRAP_SUBSPACE,
                                   horizon, rep_id)
            model = fit_rslp_horizon(resampled, roles, horizon, estimator, sub_seed,
                                     selected_k=selected_k)
        else:
            model = fit_horizon_model(resampled, roles, horizon, estimator,
                                      derive_seed(config.seed,
                                                  STAGE_BOOTSTRAP_SUBSPACE,
                                                  horizon, rep_id))
        return model.estimate.beta
    except (EstimationError, ConfigError):
        return float("nan")


def _jackknife_values(panel, roles, horizon, estimator, bank, config, selected_k):
    """Leave-one-block-out re-estimates over contiguous auto-length blocks."""
    t_eff = bank.t_effective
    length = auto_block_length(t_eff) if t_eff >= 8 else 1
    edges = list(range(0, t_eff, length))
    all_rows = np.arange(t_eff)
    values = []
    for start in edges:
        keep = np.concatenate([all_rows[:start], all_rows[min(start + length, t_eff):]])
        if isinstance(estimator, RslpSettings):
            sub_seed = derive_seed(config.seed, STAGE_SUBSPACE, horizon, selected_k)
            subspaces = _draw_subspaces(estimator, panel, roles, selected_k, sub_seed)
            fits = bank.fit_all(subspaces, estimator.holdout_fraction, rows=keep)
            values.append(aggregate_fits(fits, estimator.weights, horizon).beta)
        else:
            model = fit_horizon_model(panel, roles, horizon, estimator,
                                      derive_seed(config.seed, STAGE_JACKKNIFE, horizon),
                                      rows=keep)
            values.append(model.estimate.beta)
    return np.array(values)


def bootstrap_irf(panel: TimeSeriesPanel, roles, horizons, estimator,
                  config: BootstrapConfig, workers: int = 1) -> list[ConfidenceInterval]:
    """Bootstrap confidence intervals for every requested horizon.

    The point estimate is computed first (resolving adaptive subspace
    sizes, which replicates then hold fixed), then ``config.replicates``
    re-estimations run on block-resampled rows. A horizon whose replicate
    failures exceed half the budget raises `InferenceError`.
    """
    roles = roles if roles is not None else panel.roles
    horizons = list(horizons)
    out = []
    for h in horizons:
        point_model = fit_horizon_model(panel, roles, h, estimator, config.seed)
        point = point_model.estimate
        bank = _DesignBank(panel, roles, h)
        n_units = panel.n_rows if config.unit == "series" else bank.t_effective
        block_length = config.block_length or auto_block_length(n_units)
        if block_length > n_units:
            raise ConfigError(f"block_length={block_length} exceeds the "
                              f"{n_units} resampled units at horizon {h}")
        resample_seed = derive_seed(config.seed, STAGE_BOOTSTRAP, h)

        if config.unit == "pairs":
            def one(b, h=h, bank=bank, block_length=block_length,
                    resample_seed=resample_seed, selected_k=point.selected_k):
                rows = block_resample(bank.t_effective, block_length,
                                      resample_seed, b)
                return _replicate_beta(panel, roles, h, estimator, bank, rows,
                                       config, b, selected_k)
        else:
            def one(b, h=h, block_length=block_length, selected_k=point.selected_k):
                return _series_replicate_beta(panel, roles, h, estimator, config,
                                              b, selected_k, block_length)

        betas = np.empty(config.replicates)
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                for b, beta in enumerate(pool.map(one, range(config.replicates))):
                    betas[b] = beta
        else:
            for b in range(config.replicates):
                betas[b] = one(b)

        finite = betas[np.isfinite(betas)]
        if finite.size < config.replicates / 2.0:
            rate = 1.0 - finite.size / config.replicates
            raise InferenceError(
                f"horizon {h}: {rate:.0%} of bootstrap replicates failed")

        if config.interval == "percentile":
            lower, upper = percentile_interval(finite, config.confidence)
        else:
            jack = _jackknife_values(panel, roles, h, estimator, bank, config,
                                     point.selected_k)
            lower, upper = bca_interval(finite, point.beta, jack, config.confidence)
        out.append(ConfidenceInterval(
            horizon=h, lower=lower, upper=upper, width=upper - lower,
            point=point.beta, replicate_betas=betas, method=config.interval,
            block_length=block_length, n_replicates=int(finite.size)))
    return out
