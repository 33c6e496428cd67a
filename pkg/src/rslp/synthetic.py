"""Synthetic panels with analytically known impulse responses.

The generator produces an AR(1) shock series, a persistent target driven
by the lagged shock, and a block of cross-sectionally equicorrelated
control noise, so estimators can be scored against an exact truth:

    x_t = rho * x_{t-1} + u_t,                u_t ~ N(0, 1)
    y_t = beta0 * x_{t-1} + phi * y_{t-1}
          + coef * sum(relevant g_{i,t-1}) + eps_t,   eps_t ~ N(0, noise_sd^2)
    g_it = sqrt(c) * f_t + sqrt(1-c) * eta_it  (unit variance, equicorrelation c)

The first essential control is a copy of the target, which plays the role
of the lagged dependent variable once regressors are dated t and the
response t+h. With it in the design, the population coefficient on the
shock equals the impulse response returned by `SyntheticTruth.irf`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict

import numpy as np
import pandas as pd

from ._seeding import rng_for
from .errors import ConfigError, DataError
from .panel import TimeSeriesPanel, VariableRoles

__all__ = ["SyntheticSpec", "SyntheticTruth", "generate_synthetic",
           "export_synthetic", "load_synthetic_sidecar"]

_BURN_IN = 100


@dataclass(frozen=True)
class SyntheticSpec:
    """Configuration of the synthetic data-generating process.

    T : sample length; q : high-dimensional control count; p : essential
    control count (the first essential control is the lagged-dependent
    copy of the target; the rest are exogenous AR(1) noise).
    """

    T: int = 500
    q: int = 30
    p: int = 2
    shock_persistence: float = 0.5
    target_persistence: float = 0.4
    impact: float = 0.5
    noise_sd: float = 1.0
    control_correlation: float = 0.3
    n_categories: int = 3
    n_relevant: int = 0
    relevant_coef: float = 0.3
    seed: int = 0

    def __post_init__(self):
        if self.T < 10:
            raise ConfigError("synthetic T must be at least 10")
        if self.q < 1:
            raise ConfigError("synthetic q must be at least 1")
        if self.p < 0:
            raise ConfigError("synthetic p must be nonnegative")
        if not abs(self.shock_persistence) < 1:
            raise ConfigError("|shock_persistence| must be below 1 for stationarity")
        if not abs(self.target_persistence) < 1:
            raise ConfigError("|target_persistence| must be below 1 for stationarity")
        if not self.noise_sd > 0:
            raise ConfigError("noise_sd must be positive")
        if not 0 <= self.control_correlation < 1:
            raise ConfigError("control_correlation must be in [0, 1)")
        if not 1 <= self.n_categories <= self.q:
            raise ConfigError("n_categories must be in 1..q")
        if not 0 <= self.n_relevant <= self.q:
            raise ConfigError("n_relevant must be in 0..q")
        if self.seed < 0:
            raise ConfigError("seed must be nonnegative")


@dataclass(frozen=True)
class SyntheticTruth:
    """Analytic impulse response and relevant-control annotation."""

    impact: float
    shock_persistence: float
    target_persistence: float
    relevant_indices: tuple[int, ...] = ()
    relevant_coef: float = 0.0

    def irf(self, horizon: int) -> float:
        """Response of y_{t+h} to a unit innovation in the shock at t.

        Propagates through both the shock's own persistence and the
        target's: beta0 * sum_{j=0}^{h-1} rho^(h-1-j) * phi^j, zero at h=0.
        """
        if horizon < 0:
            raise ValueError("horizon must be nonnegative")
        if horizon == 0:
            return 0.0
        rho, phi = self.shock_persistence, self.target_persistence
        return self.impact * float(
            sum(rho ** (horizon - 1 - j) * phi**j for j in range(horizon)))

    def irf_table(self, max_horizon: int = 24) -> dict[int, float]:
        return {h: self.irf(h) for h in range(max_horizon + 1)}


def generate_synthetic(spec: SyntheticSpec):
    """Simulate a panel from ``spec``.

    Returns the panel (roles and category labels attached, truth recorded
    on ``panel.synthetic_truth``) and the analytic impulse response as a
    callable ``h -> beta_h``. Bit-identical output for identical specs.
    """
    rng = rng_for(spec.seed)
    total = spec.T + _BURN_IN
    # Fixed draw order and sizes keep output reproducible for a given seed.
    u = rng.standard_normal(total)
    eps = rng.standard_normal(total)
    common = rng.standard_normal(total)
    eta = rng.standard_normal((total, spec.q))
    n_exog = max(spec.p - 1, 0)
    v_innov = rng.standard_normal((total, n_exog)) if n_exog else np.empty((total, 0))

    c = spec.control_correlation
    G = np.sqrt(c) * common[:, None] + np.sqrt(1.0 - c) * eta

    relevant = tuple(range(spec.n_relevant))
    x = np.empty(total)
    y = np.empty(total)
    x[0] = u[0] / np.sqrt(1.0 - spec.shock_persistence**2)
    y[0] = spec.noise_sd * eps[0]
    for t in range(1, total):
        x[t] = spec.shock_persistence * x[t - 1] + u[t]
        y[t] = (spec.impact * x[t - 1]
                + spec.target_persistence * y[t - 1]
                + spec.noise_sd * eps[t])
        if relevant:
            y[t] += spec.relevant_coef * G[t - 1, : spec.n_relevant].sum()

    V = np.empty((total, n_exog))
    for j in range(n_exog):
        V[0, j] = v_innov[0, j]
        for t in range(1, total):
            V[t, j] = 0.5 * V[t - 1, j] + v_innov[t, j]

    sl = slice(_BURN_IN, total)
    blocks = [y[sl, None], x[sl, None]]
    names = ["y", "x"]
    essential = []
    if spec.p >= 1:
        blocks.append(y[sl, None])  # lagged-dependent control, dated t in the design
        names.append("y_lag")
        essential.append("y_lag")
    for j in range(n_exog):
        blocks.append(V[sl, j, None])
        names.append(f"v{j + 1}")
        essential.append(f"v{j + 1}")
    g_names = [f"g{j + 1:02d}" for j in range(spec.q)]
    blocks.append(G[sl])
    names.extend(g_names)

    roles = VariableRoles("y", "x", tuple(essential), tuple(g_names))
    categories = {g_names[j]: f"cat{(j % spec.n_categories) + 1}" for j in range(spec.q)}
    truth = SyntheticTruth(spec.impact, spec.shock_persistence, spec.target_persistence,
                           relevant, spec.relevant_coef if relevant else 0.0)
    panel = TimeSeriesPanel(
        pd.period_range("1960-01", periods=spec.T, freq="M"),
        np.hstack(blocks),
        names,
        roles=roles,
        categories=categories,
        synthetic_truth=truth,
    )
    return panel, truth.irf


def export_synthetic(panel: TimeSeriesPanel, spec: SyntheticSpec,
                     csv_path, sidecar_path, max_horizon: int = 24) -> None:
    """Write a synthetic panel in FRED-MD layout plus a truth sidecar."""
    truth: SyntheticTruth = panel.synthetic_truth
    if truth is None:
        raise DataError("panel carries no synthetic truth; nothing to export")
    with open(csv_path, "w", newline="") as fh:
        header = "sasdate," + ",".join(panel.variable_names)
        codes = "Transform:," + ",".join("1" for _ in panel.variable_names)
        fh.write(header + "\n" + codes + "\n")
        for ts, row in zip(panel.timestamps, panel.values):
            date = f"{ts.month}/1/{ts.year}"
            fh.write(date + "," + ",".join(repr(v) for v in row) + "\n")
    sidecar = {
        "schema_version": 1,
        "spec": asdict(spec),
        "roles": {
            "target": panel.roles.target,
            "shock": panel.roles.shock,
            "essential": list(panel.roles.essential),
            "high_dimensional": list(panel.roles.high_dimensional),
        },
        "categories": panel.categories,
        "true_irf": {str(h): v for h, v in truth.irf_table(max_horizon).items()},
        "relevant_indices": list(truth.relevant_indices),
        "seed": spec.seed,
    }
    with open(sidecar_path, "w") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True)


def load_synthetic_sidecar(path):
    """Read a truth sidecar; returns (roles, categories, SyntheticTruth)."""
    with open(path) as fh:
        doc = json.load(fh)
    roles = VariableRoles(
        doc["roles"]["target"], doc["roles"]["shock"],
        tuple(doc["roles"]["essential"]), tuple(doc["roles"]["high_dimensional"]))
    spec = doc["spec"]
    truth = SyntheticTruth(
        spec["impact"], spec["shock_persistence"], spec["target_persistence"],
        tuple(doc.get("relevant_indices", ())),
        spec.get("relevant_coef", 0.0) if doc.get("relevant_indices") else 0.0)
    return roles, doc.get("categories"), truth
