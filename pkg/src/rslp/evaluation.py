"""Rolling-window evaluation, Monte Carlo experiments and ablations.

The rolling protocol re-estimates inside a sliding train window, scores
direct horizon-h forecasts on the adjacent test window, and tracks five
quantities: prediction error, impulse-response error against a synthetic
truth, interval coverage, interval width, and the stability of the shock
coefficient across windows.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace as dc_replace

import numpy as np
import pandas as pd

from ._seeding import STAGE_FULL_SAMPLE, STAGE_MONTE_CARLO, STAGE_WINDOW, derive_seed
from .benchmarks import fit_horizon_model, run_estimator
from .ensemble import IrfEstimate, RslpSettings, WeightScheme
from .errors import ConfigError, EstimationError
from .inference import BootstrapConfig, bootstrap_irf
from .panel import TimeSeriesPanel, standardize
from .projection import regressor_matrix
from .synthetic import SyntheticSpec, generate_synthetic

__all__ = [
    "RollingWindowSpec",
    "EvalReport",
    "run_rolling_eval",
    "irf_error",
    "MonteCarloResult",
    "run_monte_carlo",
    "ABLATION_TOGGLES",
    "run_ablation",
]

ABLATION_TOGGLES = ("weighted", "category_aware", "adaptive_k", "bootstrap")


@dataclass(frozen=True)
class RollingWindowSpec:
    """Sliding train/test split rolled forward by ``step`` observations."""

    train_length: int = 180
    test_length: int = 24
    step: int = 1

    def __post_init__(self):
        if self.train_length < 1 or self.test_length < 1:
            raise ConfigError("train_length and test_length must be positive")
        if self.step < 1:
            raise ConfigError("step must be at least 1")

    def n_windows(self, n_obs: int) -> int:
        span = self.train_length + self.test_length
        if span > n_obs:
            raise ConfigError(f"window of {span} rows does not fit T={n_obs}")
        return (n_obs - span) // self.step + 1


@dataclass
class EvalReport:
    """Rolling-window metrics plus the per-window records behind them."""

    horizons: list[int]
    n_windows: int
    mspe: dict[int, float]
    stability: dict[int, float]
    coverage: dict[int, float] | None
    avg_width: dict[int, float] | None
    irf_error: float | None
    windows: list[dict]      # one record per window x horizon
    window_meta: list[dict]  # one record per window (bounds, scale stats)

    def windows_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.windows)

    def to_json_dict(self) -> dict:
        def keyed(d):
            return None if d is None else {str(h): d[h] for h in sorted(d)}
        return {
            "schema_version": 1,
            "horizons": list(self.horizons),
            "n_windows": self.n_windows,
            "mspe": keyed(self.mspe),
            "stability": keyed(self.stability),
            "coverage": keyed(self.coverage),
            "avg_width": keyed(self.avg_width),
            "irf_error": self.irf_error,
            "windows": self.windows,
            "window_meta": self.window_meta,
        }


def irf_error(estimates: list[IrfEstimate], true_irf) -> float:
    """Mean squared gap between estimated and true impulse responses,
    ``(1/H) * sum_h (beta_h - beta_hat_h)^2``."""
    if not estimates:
        raise ValueError("need at least one estimate")
    horizons = [e.horizon for e in estimates]
    if len(set(horizons)) != len(horizons):
        raise ValueError("duplicate horizons in estimates")
    total = 0.0
    for e in estimates:
        if callable(true_irf):
            truth = true_irf(e.horizon)
        else:
            if e.horizon not in true_irf:
                raise ValueError(f"true IRF missing horizon {e.horizon}")
            truth = true_irf[e.horizon]
        total += (truth - e.beta) ** 2
    return total / len(estimates)


def _safe_std(values) -> float:
    arr = np.asarray(values, dtype=float)
    return float(np.std(arr, ddof=1)) if arr.size > 1 else 0.0


def _evaluate_window(panel, roles, estimator, spec, horizons, w, seed,
                     with_bootstrap, bootstrap, standardize_windows,
                     coverage_truth):
    start = w * spec.step
    stop = start + spec.train_length + spec.test_length
    window_panel = panel.slice_rows(start, stop)
    meta = {"window": w, "train_start": start, "train_end": start + spec.train_length,
            "test_start": start + spec.train_length, "test_end": stop}
    if standardize_windows:
        window_panel, stats = standardize(window_panel,
                                          stats_window=(0, spec.train_length))
        meta["scale_means"] = stats.means.tolist()
        meta["scale_sds"] = stats.sds.tolist()
    train_panel = window_panel.slice_rows(0, spec.train_length)

    window_seed = derive_seed(seed, STAGE_WINDOW, w)
    intervals = {}
    if with_bootstrap:
        config = dc_replace(bootstrap, seed=window_seed)
        for ci in bootstrap_irf(train_panel, roles, horizons, estimator, config):
            intervals[ci.horizon] = ci

    target = window_panel.column(roles.target)
    n_window_rows = window_panel.n_rows
    records = []
    for h in horizons:
        model = fit_horizon_model(train_panel, roles, h, estimator, window_seed)
        origins = np.arange(spec.train_length,
                            min(stop - start, n_window_rows) )
        origins = origins[origins + h < n_window_rows]
        if origins.size:
            rows, _ = regressor_matrix(window_panel, roles, rows=origins)
            predicted = model.predict(rows)
            sse = float(np.sum((target[origins + h] - predicted) ** 2))
        else:
            sse = 0.0
        record = {
            "window": w,
            "horizon": h,
            "beta": model.estimate.beta,
            "selected_k": model.estimate.selected_k,
            "subspace_std": model.estimate.subspace_std,
            "n_test_pairs": int(origins.size),
            "sse": sse,
        }
        if with_bootstrap:
            ci = intervals[h]
            truth = coverage_truth[h]
            record.update({
                "ci_lower": ci.lower, "ci_upper": ci.upper, "ci_width": ci.width,
                "covered": bool(ci.lower <= truth <= ci.upper),
            })
        records.append(record)
    return meta, records


def run_rolling_eval(panel: TimeSeriesPanel, roles, estimator,
                     spec: RollingWindowSpec, horizons, with_bootstrap: bool = False,
                     seed: int = 0, bootstrap: BootstrapConfig | None = None,
                     standardize_windows: bool = True, workers: int = 1) -> EvalReport:
    """Roll the train/test window across the panel and collect metrics.

    Standardization statistics come from each window's train slice only,
    so test observations never influence estimation. Forecasts are direct:
    the horizon-h model predicts ``y_{t+h}`` from regressors at each test
    origin ``t`` whose response date still falls inside the window. MSPE
    pools squared errors across windows before averaging; on standardized
    runs it is reported in standardized units.

    Coverage (when ``with_bootstrap``) is measured against the analytic
    impulse response for synthetic panels, and against the full-sample
    point estimate, as a documented proxy, otherwise.
    """
    roles = roles if roles is not None else panel.roles
    horizons = list(horizons)
    if any(h < 0 for h in horizons):
        raise ConfigError("horizons must be nonnegative")
    if max(horizons, default=0) >= spec.train_length:
        raise ConfigError("train window shorter than the largest horizon")
    n_windows = spec.n_windows(panel.n_rows)
    if with_bootstrap and bootstrap is None:
        bootstrap = BootstrapConfig()

    coverage_truth = {}
    if with_bootstrap:
        if panel.synthetic_truth is not None:
            coverage_truth = {h: panel.synthetic_truth.irf(h) for h in horizons}
        else:
            full_panel = panel
            if standardize_windows:
                full_panel, _ = standardize(panel)
            full = run_estimator(full_panel, roles, horizons, estimator,
                                 derive_seed(seed, STAGE_FULL_SAMPLE))
            coverage_truth = {e.horizon: e.beta for e in full}

    def one(w):
        return _evaluate_window(panel, roles, estimator, spec, horizons, w, seed,
                                with_bootstrap, bootstrap, standardize_windows,
                                coverage_truth)

    results = [None] * n_windows
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for w, res in enumerate(pool.map(one, range(n_windows))):
                results[w] = res
    else:
        for w in range(n_windows):
            results[w] = one(w)

    window_meta = [meta for meta, _ in results]
    records = [r for _, recs in results for r in recs]

    mspe, stability, coverage, avg_width = {}, {}, {}, {}
    for h in horizons:
        rows = [r for r in records if r["horizon"] == h]
        n_pairs = sum(r["n_test_pairs"] for r in rows)
        mspe[h] = (sum(r["sse"] for r in rows) / n_pairs) if n_pairs else float("nan")
        stability[h] = _safe_std([r["beta"] for r in rows])
        if with_bootstrap:
            coverage[h] = float(np.mean([r["covered"] for r in rows]))
            avg_width[h] = float(np.mean([r["ci_width"] for r in rows]))

    report_irf_error = None
    if panel.synthetic_truth is not None:
        truth = panel.synthetic_truth
        per_window = []
        for w in range(n_windows):
            rows = [r for r in records if r["window"] == w]
            per_window.append(
                sum((truth.irf(r["horizon"]) - r["beta"]) ** 2 for r in rows) / len(rows))
        report_irf_error = float(np.mean(per_window))

    return EvalReport(
        horizons=horizons, n_windows=n_windows, mspe=mspe, stability=stability,
        coverage=coverage if with_bootstrap else None,
        avg_width=avg_width if with_bootstrap else None,
        irf_error=report_irf_error, windows=records, window_meta=window_meta)


@dataclass
class MonteCarloResult:
    """Aggregates plus the per-repetition records they came from."""

    summary: pd.DataFrame
    records: pd.DataFrame


def _mc_se(values) -> float:
    arr = np.asarray(values, dtype=float)
    return float(np.std(arr, ddof=1) / math.sqrt(arr.size)) if arr.size > 1 else 0.0


def run_monte_carlo(dgp_specs, estimators, horizons, n_reps: int, seed: int,
                    bootstrap: BootstrapConfig | None = None,
                    workers: int = 1) -> MonteCarloResult:
    """Simulate, estimate and score every DGP x estimator x repetition cell.

    ``dgp_specs`` is a SyntheticSpec or list of (name, SyntheticSpec);
    ``estimators`` a list of (name, RslpSettings | BenchmarkSpec). Every
    estimator sees the same simulated panel within a repetition. The
    summary carries means over repetitions with Monte Carlo standard
    errors; coverage and width columns appear when ``bootstrap`` is given.
    """
    if n_reps < 1:
        raise ConfigError("n_reps must be at least 1")
    if isinstance(dgp_specs, SyntheticSpec):
        dgp_specs = [("dgp", dgp_specs)]
    horizons = list(horizons)

    def one_rep(args):
        d_idx, dgp_name, dgp, rep = args
        spec = dc_replace(dgp, seed=derive_seed(seed, STAGE_MONTE_CARLO, d_idx, rep))
        panel, true_irf = generate_synthetic(spec)
        rows = []
        for e_idx, (est_name, estimator) in enumerate(estimators):
            est_seed = derive_seed(seed, STAGE_MONTE_CARLO, d_idx, rep, e_idx)
            estimates = run_estimator(panel, panel.roles, horizons, estimator, est_seed)
            err = irf_error(estimates, true_irf)
            intervals = {}
            if bootstrap is not None:
                config = dc_replace(bootstrap, seed=est_seed)
                for ci in bootstrap_irf(panel, panel.roles, horizons, estimator, config):
                    intervals[ci.horizon] = ci
            for est in estimates:
                row = {
                    "dgp": dgp_name, "estimator": est_name, "rep": rep,
                    "horizon": est.horizon, "beta": est.beta,
                    "true_beta": true_irf(est.horizon),
                    "subspace_std": est.subspace_std,
                    "selected_k": est.selected_k, "irf_error": err,
                }
                if bootstrap is not None:
                    ci = intervals[est.horizon]
                    row["width"] = ci.width
                    row["covered"] = bool(
                        ci.lower <= true_irf(est.horizon) <= ci.upper)
                rows.append(row)
        return rows

    jobs = [(d_idx, name, dgp, rep)
            for d_idx, (name, dgp) in enumerate(dgp_specs)
            for rep in range(n_reps)]
    all_rows = []
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for rows in pool.map(one_rep, jobs):
                all_rows.extend(rows)
    else:
        for job in jobs:
            all_rows.extend(one_rep(job))

    records = pd.DataFrame(all_rows)
    summaries = []
    for (dgp_name, est_name, h), cell in records.groupby(["dgp", "estimator", "horizon"],
                                                         sort=True):
        row = {
            "dgp": dgp_name, "estimator": est_name, "horizon": h,
            "n_reps": len(cell),
            "true_beta": float(cell["true_beta"].iloc[0]),
            "mean_beta": float(cell["beta"].mean()),
            "mc_se_beta": _mc_se(cell["beta"]),
            "mean_subspace_std": float(cell["subspace_std"].mean()),
            "mc_se_subspace_std": _mc_se(cell["subspace_std"]),
            "mean_selected_k": float(cell["selected_k"].mean()),
            "mean_irf_error": float(cell["irf_error"].mean()),
            "mc_se_irf_error": _mc_se(cell["irf_error"]),
        }
        if bootstrap is not None:
            row["coverage"] = float(cell["covered"].mean())
            row["mean_width"] = float(cell["width"].mean())
            row["mc_se_width"] = _mc_se(cell["width"])
        summaries.append(row)
    return MonteCarloResult(pd.DataFrame(summaries), records)


def _remove_toggle(settings: RslpSettings, toggle: str, fixed_k: int) -> RslpSettings:
    if toggle == "weighted":
        return dc_replace(settings, weights=WeightScheme("equal"))
    if toggle == "category_aware":
        return dc_replace(settings, sampler="uniform", quotas=None)
    if toggle == "adaptive_k":
        if settings.adaptive is None:
            return settings
        return dc_replace(settings, adaptive=None, k=fixed_k)
    return settings  # "bootstrap" is handled by the harness flag


# Fixed output column order, documented in the README.
ABLATION_COLUMNS = ["config", "removed_component", "horizon", "mspe", "stability",
                    "avg_width", "delta_mspe", "delta_stability", "delta_avg_width"]


def run_ablation(panel: TimeSeriesPanel, roles, settings: RslpSettings,
                 spec: RollingWindowSpec, horizons, toggles, seed: int,
                 bootstrap: BootstrapConfig | None = None,
                 standardize_windows: bool = True,
                 fixed_k_fallback: int = 10, workers: int = 1) -> pd.DataFrame:
    """Leave-one-out component study on identical data and seeds.

    Runs the full configuration, then one run per toggle with that
    component switched off, and reports per-horizon deltas against the
    full run. Removing a component the full configuration does not use is
    allowed and yields zero deltas.
    """
    toggles = list(toggles)
    bad = sorted(set(toggles) - set(ABLATION_TOGGLES))
    if bad:
        raise ConfigError(f"unknown ablation toggles: {bad}; "
                          f"expected a subset of {ABLATION_TOGGLES}")
    if len(set(toggles)) != len(toggles):
        raise ConfigError("duplicate ablation toggles")
    roles = roles if roles is not None else panel.roles
    with_bootstrap = bootstrap is not None

    runs = [("full", None, settings, with_bootstrap)]
    for toggle in toggles:
        runs.append((f"no_{toggle}", toggle,
                     _remove_toggle(settings, toggle, fixed_k_fallback),
                     with_bootstrap and toggle != "bootstrap"))

    rows = []
    baseline = {}
    for config_name, removed, run_settings, use_boot in runs:
        report = run_rolling_eval(panel, roles, run_settings, spec, horizons,
                                  with_bootstrap=use_boot, seed=seed,
                                  bootstrap=bootstrap,
                                  standardize_windows=standardize_windows,
                                  workers=workers)
        for h in horizons:
            width = report.avg_width[h] if report.avg_width else float("nan")
            if config_name == "full":
                baseline[h] = (report.mspe[h], report.stability[h], width)
            base = baseline[h]
            rows.append({
                "config": config_name,
                "removed_component": removed or "",
                "horizon": h,
                "mspe": report.mspe[h],
                "stability": report.stability[h],
                "avg_width": width,
                "delta_mspe": report.mspe[h] - base[0],
                "delta_stability": report.stability[h] - base[1],
                "delta_avg_width": width - base[2],
            })
    return pd.DataFrame(rows, columns=ABLATION_COLUMNS)
