"""Index price ingestion, log returns and abnormal-fluctuation labels.

Dates are carried as opaque ordered labels (``datetime.date`` for parsed
files, plain integers for simulated series). All sampling arithmetic is
ordinal, i.e. counted in rows, never in calendar days.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from datetime import date, datetime
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .errors import (
    DuplicateDate,
    EmptySeries,
    MissingColumn,
    NonPositivePrice,
    SeriesTooShort,
    UnparseableDate,
)

ABNORMAL_THRESHOLD = -0.05
DEFAULT_HORIZON = 2
DEFAULT_STRIDE = 2


def _check_increasing(dates: Sequence[Any]) -> None:
    for i in range(1, len(dates)):
        if not dates[i - 1] < dates[i]:
            if dates[i - 1] == dates[i]:
                raise DuplicateDate(f"duplicate date {dates[i]!r} at position {i}")
            raise ValueError(f"dates not strictly increasing at position {i}")


@dataclass(frozen=True)
class PriceSeries:
    """Dated index levels, strictly increasing in date, all positive."""

    dates: tuple
    closes: np.ndarray

    def __post_init__(self):
        closes = np.asarray(self.closes, dtype=float)
        object.__setattr__(self, "dates", tuple(self.dates))
        object.__setattr__(self, "closes", closes)
        if closes.ndim != 1 or len(closes) != len(self.dates):
            raise ValueError("dates and closes must be 1-d and of equal length")
        bad = np.flatnonzero(~(closes > 0))
        if bad.size:
            raise NonPositivePrice(f"non-positive close at position {bad[0]}", row=int(bad[0]))
        _check_increasing(self.dates)
        closes.setflags(write=False)

    def __len__(self) -> int:
        return len(self.dates)


@dataclass(frozen=True)
class ReturnSeries:
    """Log returns ``ln(X_t / X_{t-horizon})`` sampled every ``stride`` rows."""

    dates: tuple
    values: np.ndarray
    horizon: int = 1
    stride: int = 1

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "dates", tuple(self.dates))
        object.__setattr__(self, "values", values)
        if values.ndim != 1 or len(values) != len(self.dates):
            raise ValueError("dates and values must be 1-d and of equal length")
        if self.horizon < 1 or self.stride < 1:
            raise ValueError("horizon and stride must be positive")
        _check_increasing(self.dates)
        values.setflags(write=False)

    def __len__(self) -> int:
        return len(self.dates)

    def to_csv(self, delimiter: str = ",") -> str:
        buf = io.StringIO()
        w = csv.writer(buf, delimiter=delimiter, lineterminator="\n")
        w.writerow(["date", "log_return"])
        for d, v in zip(self.dates, self.values):
            w.writerow([format_label(d), repr(float(v))])
        return buf.getvalue()


@dataclass(frozen=True)
class EventLabels:
    dates: tuple
    flags: np.ndarray
    threshold: float = ABNORMAL_THRESHOLD
    indices: np.ndarray = field(default=None)

    def __post_init__(self):
        flags = np.asarray(self.flags, dtype=bool)
        object.__setattr__(self, "dates", tuple(self.dates))
        object.__setattr__(self, "flags", flags)
        if self.indices is None:
            object.__setattr__(self, "indices", np.flatnonzero(flags))

    def __len__(self) -> int:
        return len(self.dates)

    @property
    def count(self) -> int:
        return int(self.flags.sum())


def format_label(d) -> str:
    if isinstance(d, (date, datetime)):
        return d.isoformat()
    return str(d)


def parse_label(text: str, date_format: str | None = None):
    """Parse a date label; ISO 8601 unless ``date_format`` is given.

    Pure integer labels (used by simulated series) are returned as ``int``.
    """
    text = text.strip()
    if date_format is not None:
        try:
            return datetime.strptime(text, date_format).date()
        except ValueError as exc:
            raise UnparseableDate(f"cannot parse {text!r} with format {date_format!r}") from exc
    try:
        return date.fromisoformat(text)
    except ValueError:
        pass
    try:
        return int(text)
    except ValueError:
        raise UnparseableDate(f"cannot parse date {text!r}") from None


def parse_price_csv(
    text: str,
    date_column: str = "date",
    close_column: str = "close",
    delimiter: str = ",",
    date_format: str | None = None,
) -> PriceSeries:
    """Parse delimited text with a header row into a :class:`PriceSeries`.

    Rows are sorted by date. Missing or non-positive closes are errors, never
    interpolated, since filling gaps would change the violation statistics.
    """
    reader = csv.reader(io.StringIO(text), delimiter=delimiter)
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise EmptySeries("input is empty") from None
    for col in (date_column, close_column):
        if col not in header:
            raise MissingColumn(f"column {col!r} not found in header {header}")
    di, ci = header.index(date_column), header.index(close_column)

    rows = []
    for row_no, row in enumerate(reader):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) <= max(di, ci):
            raise NonPositivePrice(f"row {row_no}: missing close value", row=row_no)
        d = parse_label(row[di], date_format)
        raw = row[ci].strip()
        try:
            close = float(raw)
        except ValueError:
            raise NonPositivePrice(f"row {row_no}: missing or invalid close {raw!r}", row=row_no) from None
        if not close > 0 or not math.isfinite(close):
            raise NonPositivePrice(f"row {row_no}: non-positive close {close}", row=row_no)
        rows.append((d, close))
    if not rows:
        raise EmptySeries("no data rows")
    rows.sort(key=lambda r: r[0])
    return PriceSeries(tuple(r[0] for r in rows), np.array([r[1] for r in rows]))


def read_price_csv(path, **kwargs) -> PriceSeries:
    return parse_price_csv(Path(path).read_text(encoding="utf-8"), **kwargs)


def parse_returns_csv(text: str, delimiter: str = ",", horizon: int = 1, stride: int = 1) -> ReturnSeries:
    reader = csv.DictReader(io.StringIO(text), delimiter=delimiter)
    if reader.fieldnames is None or not {"date", "log_return"} <= set(reader.fieldnames):
        raise MissingColumn("returns file needs columns date, log_return")
    dates, vals = [], []
    for row in reader:
        dates.append(parse_label(row["date"]))
        vals.append(float(row["log_return"]))
    return ReturnSeries(tuple(dates), np.array(vals), horizon=horizon, stride=stride)


def log_returns(prices: PriceSeries, horizon: int = DEFAULT_HORIZON, stride: int = DEFAULT_STRIDE) -> ReturnSeries:
    """Log returns over ``horizon`` rows, one every ``stride`` rows.

    The k-th return is dated at row ``t_k = horizon + k * stride`` and equals
    ``ln(X[t_k] / X[t_k - horizon])``. The default (2, 2) gives non-overlapping
    two-day returns.

    Examples
    --------
    >>> p = PriceSeries((0, 1, 2), [100.0, 98.0, 90.0])
    >>> round(float(log_returns(p, 2, 2).values[0]), 6)
    -0.105361
    """
    if horizon < 1 or stride < 1:
        raise ValueError("horizon and stride must be positive integers")
    n = len(prices)
    if n <= horizon:
        raise SeriesTooShort(f"need more than {horizon} prices, got {n}")
    ends = np.arange(horizon, n, stride)
    logx = np.log(prices.closes)
    values = logx[ends] - logx[ends - horizon]
    dates = tuple(prices.dates[i] for i in ends)
    return ReturnSeries(dates, values, horizon=horizon, stride=stride)


def label_events(returns: ReturnSeries, threshold: float = ABNORMAL_THRESHOLD) -> EventLabels:
    """Flag returns strictly below ``threshold`` as abnormal fluctuations."""
    if not threshold < 0:
        raise ValueError("threshold must be negative")
    flags = returns.values < threshold
    return EventLabels(returns.dates, flags, threshold)
