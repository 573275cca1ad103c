"""OHLC ingest, min-max scaling, supervised windowing and chronological split.

The CSV interface is deliberately narrow: UTF-8 text, header
``date,open,high,low,close`` (any column order), ISO-8601 dates, plain
decimal numbers, LF or CRLF line endings.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path

import numpy as np

OHLC_COLUMNS = ("open", "high", "low", "close")
CSV_COLUMNS = ("date",) + OHLC_COLUMNS


@dataclass
class TimeSeriesFrame:
    """Dated OHLC records for one index, stored column-wise."""

    dates: list
    open: np.ndarray
    high: np.ndarray
    low: np.ndarray
    close: np.ndarray
    index_name: str = ""

    def __len__(self) -> int:
        return len(self.dates)

    def column(self, name: str) -> np.ndarray:
        if name not in OHLC_COLUMNS:
            raise ValueError(f"unknown column {name!r}; expected one of {OHLC_COLUMNS}")
        return getattr(self, name)

    def with_columns(self, **columns) -> "TimeSeriesFrame":
        """Copy of the frame with the given columns replaced."""
        data = {name: self.column(name) for name in OHLC_COLUMNS}
        for name, values in columns.items():
            if name not in OHLC_COLUMNS:
                raise ValueError(f"unknown column {name!r}")
            data[name] = np.asarray(values, dtype=float)
        return TimeSeriesFrame(dates=list(self.dates), index_name=self.index_name, **data)

    def slice(self, start: int, stop: int) -> "TimeSeriesFrame":
        return TimeSeriesFrame(
            dates=self.dates[start:stop],
            open=self.open[start:stop],
            high=self.high[start:stop],
            low=self.low[start:stop],
            close=self.close[start:stop],
            index_name=self.index_name,
        )

    def validate(self) -> "TimeSeriesFrame":
        """Enforce the raw-data invariants; scaled frames are exempt."""
        n = len(self.dates)
        if n == 0:
            raise ValueError("frame has no records")
        for name in OHLC_COLUMNS:
            col = self.column(name)
            if col.shape != (n,):
                raise ValueError(f"column {name!r} length {col.shape} does not match {n} dates")
            if not np.all(np.isfinite(col)):
                raise ValueError(f"column {name!r} contains non-finite values")
            if not np.all(col > 0):
                raise ValueError(f"column {name!r} contains non-positive values")
        for i in range(1, n):
            if self.dates[i] <= self.dates[i - 1]:
                raise ValueError(f"dates not strictly increasing at {self.dates[i]}")
        upper = np.maximum(self.open, self.close)
        lower = np.minimum(self.open, self.close)
        if not np.all(self.high >= upper - 1e-12):
            raise ValueError("high below max(open, close) in some record")
        if not np.all(self.low <= lower + 1e-12):
            raise ValueError("low above min(open, close) in some record")
        return self


def load_ohlc_csv(source, index_name: str = "") -> TimeSeriesFrame:
    """Parse an OHLC CSV into a validated :class:`TimeSeriesFrame`.

    ``source`` may be a path, bytes, or an open text/binary stream.
    """
    text = _read_text(source)
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ValueError("empty CSV: missing header line") from None
    header = [h.strip().lower() for h in header]
    missing = [c for c in CSV_COLUMNS if c not in header]
    unknown = [c for c in header if c not in CSV_COLUMNS]
    if missing or unknown:
        parts = []
        if missing:
            parts.append(f"missing columns: {', '.join(missing)}")
        if unknown:
            parts.append(f"unknown columns: {', '.join(unknown)}")
        raise ValueError("bad CSV header: " + "; ".join(parts))
    if len(header) != len(set(header)):
        raise ValueError("bad CSV header: duplicate column")
    idx = {name: header.index(name) for name in CSV_COLUMNS}

    dates: list = []
    cols: dict = {name: [] for name in OHLC_COLUMNS}
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != len(header):
            raise ValueError(f"line {lineno}: expected {len(header)} fields, got {len(row)}")
        raw_date = row[idx["date"]].strip()
        try:
            d = date.fromisoformat(raw_date)
        except ValueError:
            raise ValueError(f"line {lineno}: unparseable date {raw_date!r}") from None
        if dates and d <= dates[-1]:
            raise ValueError(f"line {lineno}: date {d.isoformat()} does not increase")
        dates.append(d)
        for name in OHLC_COLUMNS:
            cell = row[idx[name]].strip()
            try:
                cols[name].append(float(cell))
            except ValueError:
                raise ValueError(f"line {lineno}: unparseable number {cell!r} in column {name!r}") from None
    if not dates:
        raise ValueError("CSV has a header but no data lines")

    frame = TimeSeriesFrame(
        dates=dates,
        index_name=index_name,
        **{name: np.asarray(values, dtype=float) for name, values in cols.items()},
    )
    return frame.validate()


def write_ohlc_csv(frame: TimeSeriesFrame) -> str:
    """Render a frame in the canonical CSV format."""
    lines = [",".join(CSV_COLUMNS)]
    for i, d in enumerate(frame.dates):
        o, h, l, c = (float(col[i]) for col in (frame.open, frame.high, frame.low, frame.close))
        lines.append(f"{d.isoformat()},{o!r},{h!r},{l!r},{c!r}")
    return "\n".join(lines) + "\n"


def _read_text(source) -> str:
    if isinstance(source, (str, Path)):
        return Path(source).read_text(encoding="utf-8")
    if isinstance(source, bytes):
        return source.decode("utf-8")
    data = source.read()
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    return data


class MinMaxScaler:
    """Per-column min-max map onto [0, 1] over the fitted range.

    Fit on the training portion only and reuse on test data; values outside
    the fitted range extrapolate linearly.
    """

    def __init__(self, columns=OHLC_COLUMNS):
        self.columns = tuple(columns)

    def fit(self, frame: TimeSeriesFrame) -> "MinMaxScaler":
        if len(frame) == 0:
            raise ValueError("cannot fit scaler on an empty frame")
        return self.fit_values({name: frame.column(name) for name in self.columns})

    def fit_values(self, values_by_column: dict) -> "MinMaxScaler":
        """Fit each column's range on its own value set.

        Used by the pipeline to fit on exactly the values the training
        split consumes, which may be different day ranges per column.
        """
        self.columns = tuple(values_by_column)
        params = {}
        for name, values in values_by_column.items():
            col = np.asarray(values, dtype=float)
            if col.size == 0:
                raise ValueError(f"no values to fit for column {name!r}")
            lo, hi = float(np.min(col)), float(np.max(col))
            if hi <= lo:
                raise ValueError(f"column {name!r} is constant ({lo}); cannot scale")
            params[name] = (lo, hi)
        self.params_ = params
        return self

    def _bounds(self, column: str):
        if not hasattr(self, "params_"):
            raise ValueError("scaler is not fitted")
        if column not in self.params_:
            raise ValueError(f"column {column!r} was not fitted")
        return self.params_[column]

    def scale_values(self, values, column: str) -> np.ndarray:
        lo, hi = self._bounds(column)
        return (np.asarray(values, dtype=float) - lo) / (hi - lo)

    def inverse_values(self, values, column: str) -> np.ndarray:
        lo, hi = self._bounds(column)
        return np.asarray(values, dtype=float) * (hi - lo) + lo

    def transform(self, frame: TimeSeriesFrame) -> TimeSeriesFrame:
        scaled = {name: self.scale_values(frame.column(name), name) for name in self.params_}
        return frame.with_columns(**scaled)

    def to_dict(self) -> dict:
        return {
            "columns": list(self.columns),
            "params": {name: list(self._bounds(name)) for name in self.params_},
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "MinMaxScaler":
        scaler = cls(columns=tuple(payload["columns"]))
        scaler.params_ = {name: (float(lo), float(hi)) for name, (lo, hi) in payload["params"].items()}
        return scaler


@dataclass
class SupervisedDataset:
    """Feature rows from day i paired with the target ``horizon`` days later."""

    X: np.ndarray
    t: np.ndarray
    feature_names: tuple = ()
    horizon: int = 1
    dates: list = field(default_factory=list)  # date of each target value

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]


def make_supervised(
    frame: TimeSeriesFrame,
    feature_columns,
    target_column: str = "close",
    horizon: int = 1,
) -> SupervisedDataset:
    """Window a frame into next-``horizon``-day prediction pairs."""
    if horizon < 1:
        raise ValueError(f"horizon must be >= 1, got {horizon}")
    n_records = len(frame)
    if n_records <= horizon:
        raise ValueError(f"need more than horizon={horizon} records, got {n_records}")
    feature_columns = tuple(feature_columns)
    n = n_records - horizon
    X = np.column_stack([frame.column(name)[:n] for name in feature_columns])
    t = frame.column(target_column)[horizon:]
    return SupervisedDataset(
        X=X,
        t=np.array(t, dtype=float),
        feature_names=feature_columns,
        horizon=horizon,
        dates=list(frame.dates[horizon:]),
    )


def split_index(n: int, train_fraction: float) -> int:
    """Row count of the training side under the ceiling rule."""
    if not 0.0 < train_fraction < 1.0:
        raise ValueError(f"train_fraction must lie in (0, 1), got {train_fraction}")
    return math.ceil(train_fraction * n)


def chrono_split(dataset: SupervisedDataset, train_fraction: float):
    """Split into leading train rows and trailing test rows, order preserved."""
    n = dataset.n
    if n < 2:
        raise ValueError(f"need at least 2 rows to split, got {n}")
    k = split_index(n, train_fraction)
    if k == 0 or k == n:
        raise ValueError(f"train_fraction={train_fraction} leaves an empty side for n={n}")

    def take(lo, hi):
        return SupervisedDataset(
            X=dataset.X[lo:hi],
            t=dataset.t[lo:hi],
            feature_names=dataset.feature_names,
            horizon=dataset.horizon,
            dates=list(dataset.dates[lo:hi]) if dataset.dates else [],
        )

    return take(0, k), take(k, n)
