import json

import numpy as np
import pytest

from rslp.errors import ConfigError
from rslp.linalg import DesignMatrix, ols_fit
from rslp.synthetic import (SyntheticSpec, generate_synthetic, export_synthetic,
                            load_synthetic_sidecar)


def test_same_seed_bit_identical():
    a, _ = generate_synthetic(SyntheticSpec(T=80, q=6, seed=11))
    b, _ = generate_synthetic(SyntheticSpec(T=80, q=6, seed=11))
    np.testing.assert_array_equal(a.values, b.values)
    c, _ = generate_synthetic(SyntheticSpec(T=80, q=6, seed=12))
    assert not np.array_equal(a.values, c.values)


def test_noiseless_identification_with_zero_persistence():
    spec = SyntheticSpec(T=400, q=4, target_persistence=0.0, noise_sd=1e-12, seed=3)
    panel, irf = generate_synthetic(spec)
    y = panel.column("y")
    x = panel.column("x")
    X = DesignMatrix(np.column_stack([np.ones(399), x[:-1]]), ("const", "x"))
    fit = ols_fit(X, y[1:])
    assert fit.coefficients[1] == pytest.approx(0.5, abs=1e-9)
    assert irf(1) == 0.5


def test_true_irf_matches_recursion_oracle():
    spec = SyntheticSpec()
    _, irf = generate_synthetic(spec)
    rho, phi, beta0 = spec.shock_persistence, spec.target_persistence, spec.impact
    # noiseless recursion: bump the shock innovation by one unit at t=0 and
    # propagate both laws forward; the path difference is the IRF.
    H = 12
    dx = np.zeros(H + 1)
    dy = np.zeros(H + 1)
    dx[0] = 1.0
    for t in range(1, H + 1):
        dx[t] = rho * dx[t - 1]
        dy[t] = beta0 * dx[t - 1] + phi * dy[t - 1]
    for h in range(H + 1):
        assert irf(h) == pytest.approx(dy[h], abs=1e-12)
    assert irf(1) == pytest.approx(0.5)


def test_lagged_dependent_control_is_target_copy():
    panel, _ = generate_synthetic(SyntheticSpec(T=60, q=4, seed=2))
    assert panel.roles.essential[0] == "y_lag"
    np.testing.assert_array_equal(panel.column("y"), panel.column("y_lag"))


def test_category_partition_balanced():
    panel, _ = generate_synthetic(SyntheticSpec(T=50, q=10, n_categories=3, seed=5))
    labels = [panel.categories[g] for g in panel.roles.high_dimensional]
    assert len(labels) == 10
    counts = {c: labels.count(c) for c in set(labels)}
    assert max(counts.values()) - min(counts.values()) <= 1


def test_uncorrelated_controls_have_small_cross_correlation():
    worst = []
    for seed in range(10):
        panel, _ = generate_synthetic(SyntheticSpec(T=2000, q=8, seed=seed,
                                                    control_correlation=0.0))
        G = panel.columns(panel.roles.high_dimensional)
        corr = np.corrcoef(G, rowvar=False)
        off = corr[~np.eye(8, dtype=bool)]
        worst.append(np.abs(off).max())
    assert float(np.mean(worst)) < 0.15


def test_equicorrelated_controls_near_target_correlation():
    panel, _ = generate_synthetic(SyntheticSpec(T=4000, q=6, seed=1,
                                                control_correlation=0.4))
    G = panel.columns(panel.roles.high_dimensional)
    corr = np.corrcoef(G, rowvar=False)
    off = corr[~np.eye(6, dtype=bool)]
    assert off.mean() == pytest.approx(0.4, abs=0.05)


def test_relevant_controls_enter_target():
    spec = SyntheticSpec(T=3000, q=6, n_relevant=2, relevant_coef=0.8,
                         noise_sd=0.1, seed=4)
    panel, _ = generate_synthetic(spec)
    assert panel.synthetic_truth.relevant_indices == (0, 1)
    y = panel.column("y")[1:]
    g1 = panel.column("g01")[:-1]
    assert np.corrcoef(y, g1)[0, 1] > 0.3


def test_spec_validation():
    with pytest.raises(ConfigError, match="stationarity"):
        SyntheticSpec(shock_persistence=1.0)
    with pytest.raises(ConfigError, match="noise_sd"):
        SyntheticSpec(noise_sd=0.0)
    with pytest.raises(ConfigError, match="control_correlation"):
        SyntheticSpec(control_correlation=1.0)
    with pytest.raises(ConfigError, match="n_categories"):
        SyntheticSpec(q=3, n_categories=4)


def test_export_round_trip(tmp_path):
    spec = SyntheticSpec(T=40, q=4, seed=9)
    panel, irf = generate_synthetic(spec)
    csv_path, sidecar_path = tmp_path / "p.csv", tmp_path / "t.json"
    export_synthetic(panel, spec, csv_path, sidecar_path)

    doc = json.loads(sidecar_path.read_text())
    assert doc["true_irf"]["1"] == pytest.approx(0.5)
    assert doc["roles"]["target"] == "y"

    from rslp.panel import load_fredmd_csv
    loaded, codes = load_fredmd_csv(csv_path)
    assert set(codes.values()) == {1}
    np.testing.assert_allclose(loaded.values, panel.values, rtol=1e-15)

    roles, categories, truth = load_synthetic_sidecar(sidecar_path)
    assert roles == panel.roles
    assert categories == panel.categories
    assert truth.irf(3) == pytest.approx(irf(3))


def test_export_byte_identical_for_same_seed(tmp_path):
    spec = SyntheticSpec(T=30, q=3, seed=77)
    for tag in ("a", "b"):
        panel, _ = generate_synthetic(spec)
        export_synthetic(panel, spec, tmp_path / f"{tag}.csv", tmp_path / f"{tag}.json")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
