import numpy as np
import pandas as pd
import pytest

from rslp.errors import DataError, ParseError, TransformError
from rslp.panel import (TimeSeriesPanel, VariableRoles, apply_transforms,
                        handle_missing, load_fredmd_csv, standardize)


def write_fredmd(path, names, codes, rows):
    lines = ["sasdate," + ",".join(names),
             "Transform:," + ",".join(str(c) for c in codes)]
    for date, values in rows:
        lines.append(date + "," + ",".join("" if v is None else str(v) for v in values))
    path.write_text("\n".join(lines) + "\n")
    return path


@pytest.fixture
def small_csv(tmp_path):
    rows = [(f"{m}/1/1990", [1.0 * m, 2.0 * m, 3.0 * m]) for m in range(1, 6)]
    return write_fredmd(tmp_path / "panel.csv", ["a", "b", "c"], [1, 2, 5], rows)


def make_panel(values, names=None, **kwargs):
    values = np.asarray(values, dtype=float)
    if values.ndim == 1:
        values = values[:, None]
    names = names or [f"v{j}" for j in range(values.shape[1])]
    return TimeSeriesPanel(np.arange(values.shape[0]), values, names, **kwargs)


class TestLoadFredmd:
    def test_round_trip(self, small_csv):
        panel, codes = load_fredmd_csv(small_csv)
        assert panel.variable_names == ("a", "b", "c")
        assert panel.n_rows == 5
        assert codes == {"a": 1, "b": 2, "c": 5}
        assert str(panel.timestamps[0]) == "1990-01"

    def test_missing_cell_flagged(self, tmp_path):
        rows = [("1/1/1990", [1.0, 2.0]), ("2/1/1990", [None, 4.0]),
                ("3/1/1990", [5.0, 6.0])]
        panel, _ = load_fredmd_csv(write_fredmd(tmp_path / "m.csv", ["a", "b"],
                                                [1, 1], rows))
        mask = panel.missing_mask()
        assert mask[1, 0] and mask.sum() == 1
        assert panel.values[1, 1] == 4.0

    def test_invalid_code_names_column(self, tmp_path):
        rows = [(f"{m}/1/1990", [1.0, 2.0]) for m in range(1, 4)]
        path = write_fredmd(tmp_path / "bad.csv", ["a", "b"], [1, 9], rows)
        with pytest.raises(ParseError, match=r"column 3 \(b\)"):
            load_fredmd_csv(path)

    def test_non_numeric_code_row(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("sasdate,a\nTransform:,x\n1/1/1990,1.0\n")
        with pytest.raises(ParseError, match="not numeric"):
            load_fredmd_csv(path)

    def test_ragged_row_location(self, tmp_path):
        path = tmp_path / "ragged.csv"
        path.write_text("sasdate,a,b\nTransform:,1,1\n1/1/1990,1.0,2.0\n2/1/1990,3.0\n")
        with pytest.raises(ParseError, match="row 4"):
            load_fredmd_csv(path)

    def test_malformed_header(self, tmp_path):
        path = tmp_path / "hdr.csv"
        path.write_text("date,a\nTransform:,1\n1/1/1990,1.0\n")
        with pytest.raises(ParseError, match="sasdate"):
            load_fredmd_csv(path)

    def test_bad_value_cell(self, tmp_path):
        path = tmp_path / "val.csv"
        path.write_text("sasdate,a\nTransform:,1\n1/1/1990,oops\n")
        with pytest.raises(ParseError, match=r"row 3.*oops"):
            load_fredmd_csv(path)


class TestTransforms:
    def test_level_unchanged(self):
        panel = make_panel([2.0, 4.0, 8.0], ["a"])
        out = apply_transforms(panel, {"a": 1})
        np.testing.assert_array_equal(out.values[:, 0], [2.0, 4.0, 8.0])

    def test_log_difference_exact(self):
        panel = make_panel([1.0, np.e, np.e**2], ["a"])
        out = apply_transforms(panel, {"a": 5})
        np.testing.assert_allclose(out.values[:, 0], [1.0, 1.0], rtol=1e-12)

    def test_second_log_difference_geometric_oracle(self):
        # x_t = 2 * 3^t: log differences are constant ln 3, so the second
        # log difference is identically zero (hand-computed).
        panel = make_panel([2.0 * 3.0**t for t in range(6)], ["a"])
        out = apply_transforms(panel, {"a": 6})
        assert out.n_rows == 4
        np.testing.assert_allclose(out.values[:, 0], np.zeros(4), atol=1e-12)

    def test_first_difference_round_trip(self):
        rng = np.random.default_rng(21)
        raw = rng.standard_normal(30).cumsum()
        panel = make_panel(raw, ["a"])
        out = apply_transforms(panel, {"a": 2})
        rebuilt = np.concatenate([[raw[0]], raw[0] + np.cumsum(out.values[:, 0])])
        np.testing.assert_allclose(rebuilt, raw, atol=1e-10)

    def test_growth_rate_difference_depth(self):
        x = np.array([1.0, 2.0, 4.0, 8.0, 16.0])
        panel = make_panel(x, ["a"])
        out = apply_transforms(panel, {"a": 7})
        growth = x[1:] / x[:-1] - 1.0
        np.testing.assert_allclose(out.values[:, 0], np.diff(growth), rtol=1e-12)

    def test_global_trim_keeps_columns_aligned(self):
        values = np.column_stack([np.arange(1.0, 7.0), np.arange(10.0, 70.0, 10.0)])
        panel = make_panel(values, ["lvl", "dd"])
        out = apply_transforms(panel, {"lvl": 1, "dd": 3})
        assert out.n_rows == 4
        np.testing.assert_array_equal(out.values[:, 0], [3.0, 4.0, 5.0, 6.0])
        assert len(out.timestamps) == 4

    def test_log_on_nonpositive_names_column(self):
        panel = make_panel(np.column_stack([[1.0, 2.0, 3.0], [1.0, -1.0, 2.0]]),
                           ["ok", "bad"])
        with pytest.raises(TransformError, match="'bad'"):
            apply_transforms(panel, {"ok": 1, "bad": 4})

    def test_missing_passes_through(self):
        panel = make_panel([1.0, np.nan, 3.0, 4.0], ["a"])
        out = apply_transforms(panel, {"a": 2})
        assert np.isnan(out.values[:2, 0]).all()
        assert out.values[2, 0] == 1.0


class TestHandleMissing:
    def test_linear_midpoint(self):
        panel = make_panel([1.0, np.nan, 3.0], ["a"])
        out = handle_missing(panel, "interpolate")
        np.testing.assert_allclose(out.values[:, 0], [1.0, 2.0, 3.0])

    def test_edge_extension(self):
        panel = make_panel([np.nan, 5.0, 5.0], ["a"])
        out = handle_missing(panel, "interpolate")
        np.testing.assert_allclose(out.values[:, 0], [5.0, 5.0, 5.0])

    def test_fully_missing_column_errors(self):
        panel = make_panel(np.column_stack([[1.0, 2.0], [np.nan, np.nan]]),
                           ["a", "b"])
        with pytest.raises(DataError, match="'b'"):
            handle_missing(panel, "interpolate")

    def test_drop_variable_threshold(self):
        values = np.column_stack([np.arange(10.0),
                                  [np.nan] * 5 + list(range(5))])
        panel = make_panel(values, ["a", "b"])
        out = handle_missing(panel, "drop_variable", max_missing_fraction=0.1)
        assert out.variable_names == ("a",)
        assert not out.missing_mask().any()

    def test_drop_variable_interpolates_survivors(self):
        values = np.column_stack([[1.0, np.nan, 3.0, 4.0], np.arange(4.0)])
        panel = make_panel(values, ["a", "b"])
        out = handle_missing(panel, "drop_variable", max_missing_fraction=0.5)
        assert out.variable_names == ("a", "b")
        assert not out.missing_mask().any()
        assert out.values[1, 0] == 2.0

    def test_drop_rows(self):
        values = np.column_stack([[np.nan, 2.0, 3.0], [1.0, 2.0, 3.0]])
        panel = make_panel(values, ["a", "b"])
        out = handle_missing(panel, "drop_rows")
        assert out.n_rows == 2
        assert not out.missing_mask().any()

    def test_unknown_policy(self):
        with pytest.raises(DataError, match="policy"):
            handle_missing(make_panel([1.0]), "zap")


class TestStandardize:
    def test_full_window_unit_moments(self):
        panel = make_panel([1.0, 2.0, 3.0], ["a"])
        out, stats = standardize(panel)
        assert abs(out.values[:, 0].mean()) < 1e-10
        assert abs(out.values[:, 0].std(ddof=1) - 1.0) < 1e-10

    def test_train_window_oracle(self):
        # stats from the first two rows of (0, 2, 4): mean 1, sample sd sqrt(2);
        # the third value is scaled with those train statistics.
        panel = make_panel([0.0, 2.0, 4.0], ["a"])
        out, stats = standardize(panel, stats_window=(0, 2))
        root2 = np.sqrt(2.0)
        np.testing.assert_allclose(out.values[:, 0],
                                   [-1.0 / root2, 1.0 / root2, 3.0 / root2],
                                   rtol=1e-12)
        assert stats.means[0] == 1.0 and stats.sds[0] == pytest.approx(root2)

    def test_constant_column_errors(self):
        panel = make_panel(np.column_stack([[1.0, 2.0, 3.0], [7.0, 7.0, 7.0]]),
                           ["a", "const"])
        with pytest.raises(DataError, match="'const'"):
            standardize(panel)

    def test_inverse_round_trip(self):
        rng = np.random.default_rng(33)
        panel = make_panel(rng.standard_normal((12, 3)) * 5 + 2)
        out, stats = standardize(panel)
        np.testing.assert_allclose(stats.inverse(out.values), panel.values, atol=1e-10)

    def test_requires_complete_panel(self):
        with pytest.raises(DataError, match="missing"):
            standardize(make_panel([1.0, np.nan, 3.0]))


class TestRolesAndPanel:
    def test_roles_overlap_rejected(self):
        with pytest.raises(DataError, match="overlap"):
            VariableRoles("y", "y")

    def test_roles_must_cover_panel(self):
        with pytest.raises(DataError, match="unassigned"):
            make_panel(np.ones((3, 3)) * np.arange(3.0)[:, None] + [0, 1, 2],
                       ["y", "x", "g"], roles=VariableRoles("y", "x"))

    def test_assign_rest_to_high_dimensional(self):
        roles = VariableRoles.assign(["y", "x", "v", "g1", "g2"], "y", "x", ["v"])
        assert roles.high_dimensional == ("g1", "g2")

    def test_timestamps_must_increase(self):
        with pytest.raises(DataError, match="increasing"):
            TimeSeriesPanel(np.array([0, 2, 1]), np.ones((3, 1)), ["a"])

    def test_timestamps_must_be_even(self):
        with pytest.raises(DataError, match="evenly"):
            TimeSeriesPanel(np.array([0, 1, 3]), np.ones((3, 1)), ["a"])

    def test_monthly_periods_are_evenly_spaced(self):
        index = pd.period_range("2001-11", periods=4, freq="M")
        panel = TimeSeriesPanel(index, np.arange(4.0)[:, None], ["a"])
        assert panel.n_rows == 4

    def test_slice_rows_keeps_roles(self):
        roles = VariableRoles("y", "x")
        panel = make_panel(np.arange(10.0).reshape(5, 2), ["y", "x"], roles=roles)
        sliced = panel.slice_rows(1, 4)
        assert sliced.n_rows == 3
        assert sliced.roles is roles

    def test_unknown_category_variable_rejected(self):
        with pytest.raises(DataError, match="unknown variables"):
            make_panel(np.ones((3, 1)), ["a"], categories={"zzz": "c1"})
