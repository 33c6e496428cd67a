"""Panel representation, FRED-MD-format ingestion and preprocessing.

A panel is a rectangular block of aligned series observed on an evenly
spaced monthly/quarterly (or plain integer) index. Variables are split by
role into target, shock, essential controls and the high-dimensional
control block; high-dimensional controls optionally carry category labels
used by the stratified sampler.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
import pandas as pd

from .errors import DataError, ParseError, TransformError

__all__ = [
    "VariableRoles",
    "TimeSeriesPanel",
    "ScaleStats",
    "TRANSFORM_DEPTH",
    "load_fredmd_csv",
    "apply_transforms",
    "handle_missing",
    "standardize",
]

# Stationarity transform codes and the observations each one consumes:
#   1 level, 2 first diff, 3 second diff, 4 log, 5 log diff,
#   6 second log diff, 7 first diff of period growth rate.
TRANSFORM_DEPTH = {1: 0, 2: 1, 3: 2, 4: 0, 5: 1, 6: 2, 7: 2}


@dataclass(frozen=True)
class VariableRoles:
    """Partition of panel variables into target / shock / controls."""

    target: str
    shock: str
    essential: tuple[str, ...] = ()
    high_dimensional: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "essential", tuple(self.essential))
        object.__setattr__(self, "high_dimensional", tuple(self.high_dimensional))
        names = self.all_names()
        if len(set(names)) != len(names):
            raise DataError("variable roles overlap: each variable plays one role")

    def all_names(self) -> tuple[str, ...]:
        return (self.target, self.shock) + self.essential + self.high_dimensional

    @classmethod
    def assign(cls, variable_names, target, shock, essential=(), high_dimensional=None):
        """Build roles over ``variable_names``; unlisted variables become
        high-dimensional controls when ``high_dimensional`` is None."""
        essential = tuple(essential)
        if high_dimensional is None:
            taken = {target, shock, *essential}
            high_dimensional = tuple(n for n in variable_names if n not in taken)
        return cls(target, shock, essential, tuple(high_dimensional))


class TimeSeriesPanel:
    """Aligned multivariate time series with variable roles.

    Parameters
    ----------
    timestamps : sequence
        Strictly increasing, evenly spaced period identifiers. A pandas
        PeriodIndex, a DatetimeIndex convertible to monthly periods, or a
        plain integer sequence.
    values : ndarray, shape (T, n)
        Observations; NaN marks a missing cell (allowed before cleaning).
    variable_names : sequence of str
    roles : VariableRoles, optional
        When present, must partition ``variable_names``.
    categories : dict, optional
        Map from high-dimensional variable name to category label.
    synthetic_truth : object, optional
        Attached by the synthetic generator; carries the analytic IRF and
        the indices of controls that truly enter the data-generating
        process.
    """

    def __init__(self, timestamps, values, variable_names, roles=None,
                 categories=None, synthetic_truth=None):
        values = np.asarray(values, dtype=float)
        if values.ndim != 2:
            raise DataError("panel values must be a T x n matrix")
        names = tuple(str(n) for n in variable_names)
        if len(names) != values.shape[1]:
            raise DataError(
                f"{len(names)} variable names for {values.shape[1]} columns")
        if len(set(names)) != len(names):
            raise DataError("variable names must be distinct")
        index = self._normalize_index(timestamps, values.shape[0])
        if roles is not None:
            missing = [n for n in roles.all_names() if n not in names]
            if missing:
                raise DataError(f"role variables not in panel: {missing}")
            if set(roles.all_names()) != set(names):
                extra = sorted(set(names) - set(roles.all_names()))
                raise DataError(f"roles must cover every variable; unassigned: {extra}")
        if categories is not None:
            unknown = sorted(set(categories) - set(names))
            if unknown:
                raise DataError(f"category labels refer to unknown variables: {unknown}")
        self.timestamps = index
        self.values = values
        self.variable_names = names
        self.roles = roles
        self.categories = dict(categories) if categories else None
        self.synthetic_truth = synthetic_truth
        self._positions = {n: i for i, n in enumerate(names)}

    @staticmethod
    def _normalize_index(timestamps, n_rows):
        if isinstance(timestamps, pd.PeriodIndex):
            index = timestamps
            ordinals = index.asi8
        elif isinstance(timestamps, pd.DatetimeIndex):
            index = timestamps.to_period("M")
            ordinals = index.asi8
        else:
            arr = np.asarray(timestamps)
            if arr.dtype.kind in "iu":
                index = pd.Index(arr, name="t")
                ordinals = arr.astype(np.int64)
            else:
                index = pd.PeriodIndex(pd.to_datetime(list(timestamps)), freq="M")
                ordinals = index.asi8
        if len(index) != n_rows:
            raise DataError(f"{len(index)} timestamps for {n_rows} rows")
        if n_rows > 1:
            steps = np.diff(ordinals)
            if np.any(steps <= 0):
                raise DataError("timestamps must be strictly increasing")
            if np.any(steps != steps[0]):
                raise DataError("timestamps must be evenly spaced")
        return index

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def n_variables(self) -> int:
        return self.values.shape[1]

    def position(self, name: str) -> int:
        try:
            return self._positions[name]
        except KeyError:
            raise DataError(f"unknown variable {name!r}") from None

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.position(name)]

    def columns(self, names) -> np.ndarray:
        if not names:
            return np.empty((self.n_rows, 0))
        return self.values[:, [self.position(n) for n in names]]

    def missing_mask(self) -> np.ndarray:
        return np.isnan(self.values)

    def replace(self, values=None, timestamps=None, variable_names=None,
                roles="keep", categories="keep", synthetic_truth="keep"):
        return TimeSeriesPanel(
            self.timestamps if timestamps is None else timestamps,
            self.values if values is None else values,
            self.variable_names if variable_names is None else variable_names,
            roles=self.roles if roles == "keep" else roles,
            categories=self.categories if categories == "keep" else categories,
            synthetic_truth=self.synthetic_truth if synthetic_truth == "keep" else synthetic_truth,
        )

    def slice_rows(self, start: int, stop: int) -> "TimeSeriesPanel":
        """Contiguous row slice as a new panel (roles and labels carried over)."""
        if not (0 <= start < stop <= self.n_rows):
            raise DataError(f"row slice [{start}, {stop}) out of range for T={self.n_rows}")
        return self.replace(values=self.values[start:stop],
                            timestamps=self.timestamps[start:stop])


@dataclass
class ScaleStats:
    """Per-variable location/scale used to standardize a panel."""

    variable_names: tuple[str, ...]
    means: np.ndarray
    sds: np.ndarray

    def transform(self, values: np.ndarray) -> np.ndarray:
        return (values - self.means) / self.sds

    def inverse(self, values: np.ndarray) -> np.ndarray:
        return values * self.sds + self.means


def load_fredmd_csv(path):
    """Read a FRED-MD layout CSV.

    Layout: row 1 is ``sasdate`` followed by variable names, row 2 is
    ``Transform:`` followed by integer transform codes, remaining rows are
    a date and one value per variable. Empty cells mark missing values.

    Returns the raw panel (missing cells as NaN, no roles attached) and a
    dict mapping variable name to its transform code.
    """
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if len(rows) < 3:
        raise ParseError(f"{path}: need a header row, a transform row and data rows")

    header = [c.strip() for c in rows[0]]
    if not header or header[0].lower() != "sasdate":
        raise ParseError(f"{path}: row 1 must start with 'sasdate', got {header[:1]}")
    names = header[1:]
    if not names or any(n == "" for n in names):
        raise ParseError(f"{path}: row 1 contains an empty variable name")
    if len(set(names)) != len(names):
        raise ParseError(f"{path}: duplicate variable names in header")

    code_row = [c.strip() for c in rows[1]]
    if len(code_row) != len(header):
        raise ParseError(f"{path}: row 2 has {len(code_row)} cells, expected {len(header)}")
    codes = {}
    for col, (name, cell) in enumerate(zip(names, code_row[1:]), start=2):
        try:
            code = int(float(cell))
        except ValueError:
            raise ParseError(
                f"{path}: row 2, column {col} ({name}): transform code {cell!r} is not numeric"
            ) from None
        if code not in TRANSFORM_DEPTH:
            raise ParseError(
                f"{path}: row 2, column {col} ({name}): transform code {code} not in 1..7")
        codes[name] = code

    dates = []
    data = np.full((len(rows) - 2, len(names)), np.nan)
    for i, row in enumerate(rows[2:], start=3):
        if len(row) != len(header):
            raise ParseError(f"{path}: row {i} has {len(row)} cells, expected {len(header)}")
        dates.append(row[0].strip())
        for col, cell in enumerate(row[1:]):
            cell = cell.strip()
            if cell == "":
                continue
            try:
                data[i - 3, col] = float(cell)
            except ValueError:
                raise ParseError(
                    f"{path}: row {i}, column {col + 2} ({names[col]}): "
                    f"value {cell!r} is not numeric") from None

    try:
        index = pd.PeriodIndex(pd.to_datetime(dates), freq="M")
    except (ValueError, pd.errors.ParserError) as exc:
        raise ParseError(f"{path}: unparseable date column: {exc}") from None
    return TimeSeriesPanel(index, data, names), codes


def _transform_column(x: np.ndarray, code: int, name: str) -> np.ndarray:
    observed = ~np.isnan(x)
    if code in (4, 5, 6) and np.any(x[observed] <= 0):
        raise TransformError(f"log transform (code {code}) on column {name!r} "
                             "with nonpositive values")
    with np.errstate(invalid="ignore", divide="ignore"):
        if code == 1:
            out = x
        elif code == 2:
            out = np.diff(x)
        elif code == 3:
            out = np.diff(x, n=2)
        elif code == 4:
            out = np.log(x)
        elif code == 5:
            out = np.diff(np.log(x))
        elif code == 6:
            out = np.diff(np.log(x), n=2)
        else:  # 7: first difference of the period-on-period growth rate
            growth = x[1:] / x[:-1] - 1.0
            out = np.diff(growth)
    if np.any(np.isinf(out[~np.isnan(out)])):
        raise TransformError(f"transform code {code} produced non-finite values "
                             f"in column {name!r}")
    return out


def apply_transforms(panel: TimeSeriesPanel, codes) -> TimeSeriesPanel:
    """Apply per-variable stationarity transforms and re-align rows.

    ``codes`` maps variable name to a code in 1..7. Every column loses the
    number of leading rows its code requires; the panel is then trimmed to
    the maximum depth across columns so all series stay aligned.
    """
    for name in panel.variable_names:
        if name not in codes:
            raise TransformError(f"no transform code for column {name!r}")
        if codes[name] not in TRANSFORM_DEPTH:
            raise TransformError(f"invalid transform code {codes[name]} for {name!r}")
    depth = max(TRANSFORM_DEPTH[codes[n]] for n in panel.variable_names)
    T_out = panel.n_rows - depth
    if T_out < 1:
        raise TransformError(f"panel too short ({panel.n_rows} rows) for differencing depth {depth}")
    out = np.empty((T_out, panel.n_variables))
    for j, name in enumerate(panel.variable_names):
        col = _transform_column(panel.values[:, j], codes[name], name)
        out[:, j] = col[len(col) - T_out:]
    return panel.replace(values=out, timestamps=panel.timestamps[depth:])


def handle_missing(panel: TimeSeriesPanel, policy: str = "interpolate",
                   max_missing_fraction: float = 0.1) -> TimeSeriesPanel:
    """Remove missing cells under one of three policies.

    interpolate
        Linear interpolation in the interior, nearest-value extension at
        the edges. A fully missing column is an error.
    drop_variable
        Drop any column missing more than ``max_missing_fraction`` of its
        cells, then interpolate whatever gaps remain so the output is
        complete. Dropping a role variable is an error.
    drop_rows
        Keep only rows with no missing cell. Interior gaps would break the
        even spacing of the time index and raise.
    """
    if policy not in ("interpolate", "drop_variable", "drop_rows"):
        raise DataError(f"unknown missing-value policy {policy!r}")
    mask = panel.missing_mask()
    if not mask.any():
        return panel

    if policy == "drop_rows":
        keep = ~mask.any(axis=1)
        idx = np.flatnonzero(keep)
        if idx.size == 0:
            raise DataError("drop_rows removed every observation")
        return panel.replace(values=panel.values[idx], timestamps=panel.timestamps[idx])

    values = panel.values
    names = panel.variable_names
    if policy == "drop_variable":
        frac = mask.mean(axis=0)
        keep = frac <= max_missing_fraction
        dropped = [n for n, k in zip(names, keep) if not k]
        if panel.roles is not None:
            protected = set(panel.roles.all_names()) - set(panel.roles.high_dimensional)
            bad = sorted(protected & set(dropped))
            if bad:
                raise DataError(f"role variables exceed missing threshold: {bad}")
        values = values[:, keep]
        names = tuple(n for n, k in zip(names, keep) if k)
        roles = panel.roles
        if roles is not None:
            roles = VariableRoles(roles.target, roles.shock, roles.essential,
                                  tuple(n for n in roles.high_dimensional if n in names))
        categories = panel.categories
        if categories is not None:
            categories = {n: c for n, c in categories.items() if n in names}
        panel = TimeSeriesPanel(panel.timestamps, values, names, roles=roles,
                                categories=categories,
                                synthetic_truth=panel.synthetic_truth)
        values = panel.values

    out = values.copy()
    t = np.arange(panel.n_rows)
    for j, name in enumerate(panel.variable_names):
        col = out[:, j]
        good = ~np.isnan(col)
        if good.all():
            continue
        if not good.any():
            raise DataError(f"column {name!r} is entirely missing")
        out[:, j] = np.interp(t, t[good], col[good])
    return panel.replace(values=out)


def standardize(panel: TimeSeriesPanel, stats_window=None):
    """Center and scale each column using statistics from ``stats_window``.

    ``stats_window`` is a (start, stop) row range; None means the full
    sample. Only rows inside the window contribute to the mean and sample
    standard deviation, so a rolling-evaluation caller can standardize a
    train+test window with train-only statistics and leak nothing.

    Returns the standardized panel and the `ScaleStats` used, for inverse
    transformation.
    """
    if stats_window is None:
        start, stop = 0, panel.n_rows
    else:
        start, stop = stats_window
    if not (0 <= start < stop <= panel.n_rows):
        raise DataError(f"stats window [{start}, {stop}) out of range for T={panel.n_rows}")
    window = panel.values[start:stop]
    if np.isnan(window).any():
        raise DataError("standardize requires a complete panel; handle missing values first")
    means = window.mean(axis=0)
    sds = window.std(axis=0, ddof=1) if stop - start > 1 else np.zeros(panel.n_variables)
    flat = np.flatnonzero(sds == 0)
    if flat.size:
        raise DataError(f"zero variance over the stats window in column "
                        f"{panel.variable_names[flat[0]]!r}")
    stats = ScaleStats(panel.variable_names, means, sds)
    return panel.replace(values=stats.transform(panel.values)), stats
