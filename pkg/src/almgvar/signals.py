"""Threshold rules turning uncertainty and G-VaR series into dated warnings.

All comparisons are strict, so a value sitting exactly on a line never
triggers.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, replace
from enum import Enum

import numpy as np

from .errors import ConfigError
from .gvar import GVarSeries
from .market_data import format_label
from .uncertainty import BlockConfig, UncertaintySeries


class Indicator(str, Enum):
    LOWER_MEAN = "LowerMean"
    MEAN_DIFF = "MeanDiff"
    UPPER_VOL = "UpperVol"
    VOL_RATIO = "VolRatio"
    GVAR_LEVEL = "GVarLevel"
    GVAR_TREND = "GVarTrend"
    GVAR_DEEP = "GVarDeep"

    @property
    def family(self) -> str:
        if self in (Indicator.LOWER_MEAN, Indicator.MEAN_DIFF):
            return "mean"
        if self in (Indicator.UPPER_VOL, Indicator.VOL_RATIO):
            return "volatility"
        return "gvar"

    @property
    def tier(self):
        return {Indicator.GVAR_LEVEL: 1, Indicator.GVAR_TREND: 2, Indicator.GVAR_DEEP: 3}.get(self)


@dataclass(frozen=True)
class ThresholdConfig:
    lower_mean_line: float = -0.01
    mean_diff_line: float = 0.015
    upper_vol_line: float = 0.03
    vol_ratio_line: float = 3.0
    gvar_level: float = -0.05
    gvar_trend: float = -0.04
    gvar_deep: float = -0.10
    gvar_deep_near: float = -0.08

    def __post_init__(self):
        problems = []
        if not self.lower_mean_line < 0:
            problems.append("lower_mean_line must be < 0")
        if not self.mean_diff_line > 0:
            problems.append("mean_diff_line must be > 0")
        if not self.upper_vol_line > 0:
            problems.append("upper_vol_line must be > 0")
        if not self.vol_ratio_line > 1:
            problems.append("vol_ratio_line must be > 1")
        if not self.gvar_deep <= self.gvar_deep_near < self.gvar_level < 0:
            problems.append("need gvar_deep <= gvar_deep_near < gvar_level < 0")
        if not self.gvar_trend < 0:
            problems.append("gvar_trend must be < 0")
        if problems:
            raise ConfigError("; ".join(problems))


@dataclass(frozen=True)
class IndexPreset:
    name: str
    block: BlockConfig
    thresholds: ThresholdConfig

    def as_dict(self) -> dict:
        return {"name": self.name, "n0": self.block.n0, "n1": self.block.n1, **asdict(self.thresholds)}


# Warning lines and block lengths used for the 2008-2023 studies of each index.
PRESETS = {
    "sp500": IndexPreset("sp500", BlockConfig(20, 8), ThresholdConfig(-0.01, 0.015, 0.03, 3.0)),
    "ixic": IndexPreset("ixic", BlockConfig(20, 9), ThresholdConfig(-0.013, 0.02, 0.03, 2.5)),
    "ftse": IndexPreset("ftse", BlockConfig(20, 7), ThresholdConfig(-0.015, 0.02, 0.04, 3.0)),
    "gdaxi": IndexPreset("gdaxi", BlockConfig(20, 7), ThresholdConfig(-0.02, 0.03, 0.04, 4.5)),
    "csi300": IndexPreset("csi300", BlockConfig(20, 5), ThresholdConfig(-0.03, 0.05, 0.05, 5.0)),
}


def get_preset(name: str) -> IndexPreset:
    try:
        return PRESETS[name.lower()]
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; known: {sorted(PRESETS)}") from None


@dataclass(frozen=True)
class WarningSignal:
    """One triggered indicator.

    ``index`` is the position of ``date`` in the underlying return series and
    is the common coordinate used for corroboration and event matching.
    """

    date: object
    index: int
    indicator: Indicator
    value: float
    tier: int | None = None

    def as_dict(self) -> dict:
        return {
            "date": format_label(self.date),
            "index": int(self.index),
            "indicator": self.indicator.value,
            "value": float(self.value),
            "tier": self.tier,
        }


def _emit(dates, index, values, mask, indicator):
    return [
        WarningSignal(dates[i], int(index[i]), indicator, float(values[i]), indicator.tier)
        for i in np.flatnonzero(mask)
    ]


def _sorted(signals):
    order = list(Indicator)
    return sorted(signals, key=lambda s: (s.index, order.index(s.indicator)))


def mean_signals(u: UncertaintySeries, cfg: ThresholdConfig) -> list[WarningSignal]:
    out = _emit(u.dates, u.index, u.lower_mean, u.lower_mean < cfg.lower_mean_line, Indicator.LOWER_MEAN)
    diff = u.mean_diff
    out += _emit(u.dates, u.index, diff, diff > cfg.mean_diff_line, Indicator.MEAN_DIFF)
    return _sorted(out)


def volatility_signals(u: UncertaintySeries, cfg: ThresholdConfig) -> list[WarningSignal]:
    vol = u.upper_vol
    out = _emit(u.dates, u.index, vol, vol > cfg.upper_vol_line, Indicator.UPPER_VOL)
    ratio = u.vol_ratio
    # NaN ratios compare False
    with np.errstate(invalid="ignore"):
        out += _emit(u.dates, u.index, ratio, ratio > cfg.vol_ratio_line, Indicator.VOL_RATIO)
    return _sorted(out)


def gvar_signals(g: GVarSeries, cfg: ThresholdConfig, supersede: bool = True) -> list[WarningSignal]:
    """Three-tier G-VaR warnings.

    Tier 1 fires when ``q < gvar_level``. Tier 2 fires when the one-step change
    ``q_s - q_{s-1}`` is below ``gvar_trend``. Tier 3 fires when
    ``q_s <= gvar_deep``, or when ``q_s <= gvar_deep_near`` and a tier-2 break
    happened at ``s`` or ``s - 1``.

    With ``supersede`` (default) a tier-3 date does not also carry a tier-1
    signal: the crisis warning replaces the abnormal-fluctuation warning.
    """
    q = np.asarray(g.q, dtype=float)
    n = len(q)
    drop = np.full(n, np.nan)
    drop[1:] = np.diff(q)
    with np.errstate(invalid="ignore"):
        trend = drop < cfg.gvar_trend
    recent_trend = trend.copy()
    recent_trend[1:] |= trend[:-1]
    deep = (q <= cfg.gvar_deep) | ((q <= cfg.gvar_deep_near) & recent_trend)
    level = q < cfg.gvar_level
    if supersede:
        level &= ~deep
    out = _emit(g.dates, g.index, q, level, Indicator.GVAR_LEVEL)
    out += _emit(g.dates, g.index, drop, trend, Indicator.GVAR_TREND)
    out += _emit(g.dates, g.index, q, deep, Indicator.GVAR_DEEP)
    return _sorted(out)


@dataclass(frozen=True)
class CorroboratedDate:
    date: object
    index: int
    indicators: tuple
    crisis_flag: bool


def corroborate(*signal_lists, window: int = 3) -> list[CorroboratedDate]:
    """Merge signal families per date.

    A date is a crisis when it carries a tier-3 G-VaR signal and some mean or
    volatility signal fired within the ``window`` observations up to and
    including it.
    """
    by_index: dict[int, list[WarningSignal]] = {}
    for signals in signal_lists:
        for sig in signals:
            by_index.setdefault(sig.index, []).append(sig)
    support = sorted(
        sig.index for sigs in by_index.values() for sig in sigs if sig.indicator.family != "gvar"
    )
    support_arr = np.asarray(support, dtype=int)
    order = list(Indicator)
    out = []
    for idx in sorted(by_index):
        sigs = by_index[idx]
        inds = tuple(sorted({s.indicator for s in sigs}, key=order.index))
        crisis = False
        if Indicator.GVAR_DEEP in inds and support_arr.size:
            lo = np.searchsorted(support_arr, idx - window, side="left")
            hi = np.searchsorted(support_arr, idx, side="right")
            crisis = bool(hi > lo)
        out.append(CorroboratedDate(sigs[0].date, idx, inds, crisis))
    return out


def signals_to_csv(signals, corroborated=None, delimiter: str = ",") -> str:
    crisis = {c.index: c.crisis_flag for c in corroborated or ()}
    buf = io.StringIO()
    w = csv.writer(buf, delimiter=delimiter, lineterminator="\n")
    w.writerow(["date", "index", "indicator", "value", "tier", "crisis_flag"])
    for s in signals:
        w.writerow([
            format_label(s.date), s.index, s.indicator.value, repr(float(s.value)),
            "" if s.tier is None else s.tier, int(crisis.get(s.index, False)),
        ])
    return buf.getvalue()


def signals_to_json(signals, corroborated=None) -> str:
    crisis = {c.index: c.crisis_flag for c in corroborated or ()}
    rows = [dict(s.as_dict(), crisis_flag=crisis.get(s.index, False)) for s in signals]
    return json.dumps(rows, indent=2)


def with_overrides(cfg: ThresholdConfig, **overrides) -> ThresholdConfig:
    unknown = set(overrides) - set(asdict(cfg))
    if unknown:
        raise ConfigError(f"unknown threshold keys: {sorted(unknown)}")
    return replace(cfg, **overrides)
