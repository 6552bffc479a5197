"""Moving-block extremal estimators of mean and volatility uncertainty.

A trailing window of ``n0`` returns is cut into the ``n0 - n1 + 1``
overlapping contiguous blocks of length ``n1``. The lower/upper mean is the
min/max of the block sample means; the lower/upper variance is the min/max
of the block sample variances (divisor ``n1 - 1``).
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import InvalidBlockConfig, SeriesTooShort, WindowLengthMismatch
from .market_data import ReturnSeries, format_label


@dataclass(frozen=True)
class BlockConfig:
    """Outer history window ``n0`` and inner block length ``n1``, ``2 <= n1 <= n0``."""

    n0: int
    n1: int

    def __post_init__(self):
        if int(self.n0) != self.n0 or int(self.n1) != self.n1:
            raise InvalidBlockConfig("n0 and n1 must be integers")
        if not 2 <= self.n1 <= self.n0:
            raise InvalidBlockConfig(f"need 2 <= n1 <= n0, got n0={self.n0}, n1={self.n1}")

    @property
    def n_blocks(self) -> int:
        return self.n0 - self.n1 + 1


@dataclass(frozen=True)
class MeanUncertainty:
    lower: float
    upper: float

    @property
    def diff(self) -> float:
        return self.upper - self.lower


@dataclass(frozen=True)
class VolatilityUncertainty:
    lower_var: float
    upper_var: float

    @property
    def ratio(self) -> float:
        """``sqrt(upper_var / lower_var)``; NaN when ``lower_var`` is zero."""
        if self.lower_var <= 0:
            return float("nan")
        return float(np.sqrt(self.upper_var / self.lower_var))


def _blocks(window, n1: int) -> np.ndarray:
    w = np.asarray(window, dtype=float)
    if w.ndim != 1:
        raise WindowLengthMismatch("window must be one-dimensional")
    BlockConfig(len(w), n1)
    return sliding_window_view(w, n1)


def _check_len(window, n0):
    if n0 is not None and len(window) != n0:
        raise WindowLengthMismatch(f"window has {len(window)} values, expected n0={n0}")


def block_means(window, n1: int, n0: int | None = None) -> np.ndarray:
    """Sample mean of each length-``n1`` block of ``window``.

    >>> block_means([1, 2, 3, 4, 5], 2).tolist()
    [1.5, 2.5, 3.5, 4.5]
    """
    _check_len(window, n0)
    return _blocks(window, n1).mean(axis=1)


def block_variances(window, n1: int, n0: int | None = None) -> np.ndarray:
    _check_len(window, n0)
    return _blocks(window, n1).var(axis=1, ddof=1)


def mean_uncertainty(window, n1: int, n0: int | None = None) -> MeanUncertainty:
    m = block_means(window, n1, n0)
    return MeanUncertainty(float(m.min()), float(m.max()))


def volatility_uncertainty(window, n1: int, n0: int | None = None) -> VolatilityUncertainty:
    v = block_variances(window, n1, n0)
    return VolatilityUncertainty(float(v.min()), float(v.max()))


@dataclass(frozen=True)
class UncertaintySeries:
    """Per-date extremal estimates; ``index`` locates each record in the return series."""

    dates: tuple
    index: np.ndarray
    lower_mean: np.ndarray
    upper_mean: np.ndarray
    lower_var: np.ndarray
    upper_var: np.ndarray
    cfg: BlockConfig

    def __len__(self) -> int:
        return len(self.dates)

    @property
    def mean_diff(self) -> np.ndarray:
        return self.upper_mean - self.lower_mean

    @property
    def lower_vol(self) -> np.ndarray:
        return np.sqrt(self.lower_var)

    @property
    def upper_vol(self) -> np.ndarray:
        return np.sqrt(self.upper_var)

    @property
    def vol_ratio(self) -> np.ndarray:
        """Upper over lower volatility, NaN where the lower variance is zero."""
        out = np.full(len(self), np.nan)
        ok = self.lower_var > 0
        out[ok] = np.sqrt(self.upper_var[ok] / self.lower_var[ok])
        return out

    def to_csv(self, delimiter: str = ",") -> str:
        buf = io.StringIO()
        w = csv.writer(buf, delimiter=delimiter, lineterminator="\n")
        w.writerow(["date", "lower_mean", "upper_mean", "mean_diff", "lower_vol", "upper_vol", "vol_ratio"])
        cols = (self.lower_mean, self.upper_mean, self.mean_diff, self.lower_vol, self.upper_vol, self.vol_ratio)
        for i, d in enumerate(self.dates):
            w.writerow([format_label(d)] + ["" if np.isnan(c[i]) else repr(float(c[i])) for c in cols])
        return buf.getvalue()


def rolling_uncertainty(returns: ReturnSeries, cfg: BlockConfig) -> UncertaintySeries:
    """Estimates for every ``s >= n0 - 1`` from ``Z[s-n0+1 .. s]``.

    Earlier dates are omitted: no estimate exists before a full window.
    """
    z = np.asarray(returns.values, dtype=float)
    if len(z) < cfg.n0:
        raise SeriesTooShort(f"need at least n0={cfg.n0} returns, got {len(z)}")
    blocks = sliding_window_view(z, cfg.n1)
    bmean = blocks.mean(axis=1)
    bvar = blocks.var(axis=1, ddof=1)
    # record at s covers blocks starting at s-n0+1 .. s-n1+1
    span = cfg.n_blocks
    mwin = sliding_window_view(bmean, span)
    vwin = sliding_window_view(bvar, span)
    index = np.arange(cfg.n0 - 1, len(z))
    return UncertaintySeries(
        dates=tuple(returns.dates[i] for i in index),
        index=index,
        lower_mean=mwin.min(axis=1),
        upper_mean=mwin.max(axis=1),
        lower_var=vwin.min(axis=1),
        upper_var=vwin.max(axis=1),
        cfg=cfg,
    )
