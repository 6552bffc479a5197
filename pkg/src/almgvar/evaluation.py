"""Warning accuracy against labelled events, and VaR violation backtests."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass
from typing import NamedTuple, Sequence

import numpy as np
from scipy.special import xlogy

from .errors import DegenerateInput, DomainError, IndexSpaceMismatch, SeriesTooShort
from .gvar import as_alpha
from .market_data import EventLabels


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0

    def __post_init__(self):
        if min(self.tp, self.fp, self.fn, self.tn) < 0:
            raise ValueError("confusion counts must be nonnegative")


@dataclass(frozen=True)
class EvaluationReport:
    """Precision, miss rate, recall and F1; ``None`` marks a zero denominator."""

    precision: float | None
    miss: float | None
    recall: float | None
    f1: float | None
    counts: ConfusionCounts
    horizon: int | None = None

    def as_dict(self) -> dict:
        d = asdict(self)
        d["counts"] = asdict(self.counts)
        return d


def _ratio(num, den):
    return num / den if den > 0 else None


def classification_metrics(c: ConfusionCounts, horizon: int | None = None) -> EvaluationReport:
    """
    >>> r = classification_metrics(ConfusionCounts(tp=1, fp=1, fn=1))
    >>> r.precision, r.miss, r.f1
    (0.5, 0.5, 0.5)
    """
    return EvaluationReport(
        precision=_ratio(c.tp, c.tp + c.fp),
        miss=_ratio(c.fn, c.tp + c.fn),
        recall=_ratio(c.tp, c.tp + c.fn),
        f1=_ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn),
        counts=c,
        horizon=horizon,
    )


def _signal_index(sig, labels: EventLabels) -> int:
    if isinstance(sig, (int, np.integer)):
        idx = int(sig)
    else:
        idx = int(sig.index)
    if not 0 <= idx < len(labels):
        raise IndexSpaceMismatch(f"signal index {idx} outside labelled range 0..{len(labels) - 1}")
    if not isinstance(sig, (int, np.integer)) and sig.date != labels.dates[idx]:
        raise IndexSpaceMismatch(f"signal dated {sig.date!r} but label {idx} is {labels.dates[idx]!r}")
    return idx


def match_warnings(signals: Sequence, labels: EventLabels, horizon: int = 1) -> ConfusionCounts:
    """Classify signals against events inside a forward matching window.

    A signal at ``s`` is a true positive if an event occurs in ``[s, s + horizon]``,
    otherwise a false positive. An event at ``e`` is missed when no signal lies
    in ``[e - horizon, e]``. Signals are each classified; events are counted once.
    ``signals`` holds :class:`WarningSignal` objects or plain integer indices.
    """
    if horizon < 0:
        raise ValueError("horizon must be nonnegative")
    flags = np.asarray(labels.flags, dtype=bool)
    n = len(flags)
    idx = np.array([_signal_index(s, labels) for s in signals], dtype=int)
    # cumulative event counts give O(1) window queries
    ev_cum = np.concatenate([[0], np.cumsum(flags)])
    hi = np.minimum(idx + horizon, n - 1)
    hits = ev_cum[hi + 1] - ev_cum[idx] > 0
    tp = int(hits.sum())
    fp = int(len(idx) - tp)

    warned = np.zeros(n + 1, dtype=int)
    np.add.at(warned, idx, 1)
    warn_cum = np.concatenate([[0], np.cumsum(warned[:n])])
    events = np.flatnonzero(flags)
    lo = np.maximum(events - horizon, 0)
    fn = int(np.sum(warn_cum[events + 1] - warn_cum[lo] == 0))
    return ConfusionCounts(tp=tp, fp=fp, fn=fn)


def evaluate_signals(signals, labels: EventLabels, horizon: int = 1) -> EvaluationReport:
    return classification_metrics(match_warnings(signals, labels, horizon), horizon)


def chi2_sf(x: float, df: int = 1) -> float:
    """Chi-square survival function, one degree of freedom: ``2 (1 - Phi(sqrt x))``."""
    if df != 1:
        raise NotImplementedError("only df=1 is supported")
    if x < 0 or math.isnan(x):
        raise DomainError(f"chi2_sf needs x >= 0, got {x}")
    # erfc avoids cancellation in 1 - Phi for large x
    return math.erfc(math.sqrt(x / 2.0))


def chi2_cdf(x: float, df: int = 1) -> float:
    if df != 1:
        raise NotImplementedError("only df=1 is supported")
    if x < 0 or math.isnan(x):
        raise DomainError(f"chi2_cdf needs x >= 0, got {x}")
    return math.erf(math.sqrt(x / 2.0))


class LikelihoodRatio(NamedTuple):
    stat: float
    p: float

    @property
    def degenerate(self) -> bool:
        return math.isnan(self.p)


def kupiec_uc_test(violations: int, total: int, alpha) -> LikelihoodRatio:
    """Kupiec unconditional-coverage likelihood ratio and its chi2(1) p-value."""
    if total < 1:
        raise DegenerateInput("need at least one observation")
    if not 0 <= violations <= total:
        raise ValueError("violations must lie in [0, total]")
    a = float(alpha)
    n, t = violations, total
    ahat = n / t
    # 0 * log 0 := 0
    loglik_hat = xlogy(n, ahat) + xlogy(t - n, 1 - ahat)
    loglik_null = xlogy(n, a) + xlogy(t - n, 1 - a)
    stat = max(2.0 * float(loglik_hat - loglik_null), 0.0)
    return LikelihoodRatio(stat, chi2_sf(stat))


def transition_counts(flags) -> tuple[int, int, int, int]:
    f = np.asarray(flags, dtype=bool)
    prev, cur = f[:-1], f[1:]
    n00 = int(np.sum(~prev & ~cur))
    n01 = int(np.sum(~prev & cur))
    n10 = int(np.sum(prev & ~cur))
    n11 = int(np.sum(prev & cur))
    return n00, n01, n10, n11


def christoffersen_ind_test(flags) -> LikelihoodRatio:
    """First-order Markov independence test of a violation sequence.

    If either transition row is empty its likelihood factor is taken as 1 and
    the p-value is NaN (``result.degenerate`` is true).
    """
    if len(flags) < 2:
        raise SeriesTooShort("need at least two observations")
    n00, n01, n10, n11 = transition_counts(flags)
    total = n00 + n01 + n10 + n11
    pi = (n01 + n11) / total
    row0, row1 = n00 + n01, n10 + n11
    pi0 = n01 / row0 if row0 else 0.0
    pi1 = n11 / row1 if row1 else 0.0
    ll_restricted = xlogy(n00 + n10, 1 - pi) + xlogy(n01 + n11, pi)
    ll_unrestricted = xlogy(n00, 1 - pi0) + xlogy(n01, pi0) + xlogy(n10, 1 - pi1) + xlogy(n11, pi1)
    stat = max(2.0 * float(ll_unrestricted - ll_restricted), 0.0)
    if row0 == 0 or row1 == 0:
        return LikelihoodRatio(stat, float("nan"))
    return LikelihoodRatio(stat, chi2_sf(stat))


@dataclass(frozen=True)
class BacktestReport:
    theo_viol: float
    fact_viol: int
    alpha_hat: float
    lr_uc_stat: float
    lr_uc_p: float
    lr_ind_stat: float
    lr_ind_p: float | None
    pass_uc: bool
    pass_ind: bool | None
    total: int
    alpha: float

    def as_dict(self) -> dict:
        return asdict(self)


def backtest(violated, alpha) -> BacktestReport:
    """Coverage and independence backtest of a boolean violation sequence.

    A test passes when its p-value exceeds ``alpha``.
    """
    flags = np.asarray(violated, dtype=bool)
    a = float(as_alpha(alpha))
    t = len(flags)
    n = int(flags.sum())
    uc = kupiec_uc_test(n, t, a)
    ind = christoffersen_ind_test(flags)
    ind_p = None if ind.degenerate else ind.p
    return BacktestReport(
        theo_viol=a * t,
        fact_viol=n,
        alpha_hat=n / t,
        lr_uc_stat=uc.stat,
        lr_uc_p=uc.p,
        lr_ind_stat=ind.stat,
        lr_ind_p=ind_p,
        pass_uc=uc.p > a,
        pass_ind=None if ind_p is None else ind_p > a,
        total=t,
        alpha=a,
    )


TABLE_COLUMNS = ("Index", "Theo-Viol", "Fact-Viol", "alpha_hat", "LR_uc", "LR_ind")


def backtest_table(reports: dict, delimiter: str = ",") -> str:
    """Summary table keyed by index name; LR columns are p-values."""
    buf = io.StringIO()
    w = csv.writer(buf, delimiter=delimiter, lineterminator="\n")
    w.writerow(TABLE_COLUMNS)
    for name, r in reports.items():
        w.writerow([
            name, f"{r.theo_viol:.2f}", r.fact_viol, f"{r.alpha_hat:.4f}", f"{r.lr_uc_p:.4f}",
            "" if r.lr_ind_p is None else f"{r.lr_ind_p:.4f}",
        ])
    return buf.getvalue()


def reports_to_json(obj) -> str:
    def default(o):
        if hasattr(o, "as_dict"):
            return o.as_dict()
        if isinstance(o, (np.integer,)):
            return int(o)
        if isinstance(o, (np.floating,)):
            return float(o)
        raise TypeError(f"cannot serialise {type(o).__name__}")

    return json.dumps(obj, indent=2, default=default, sort_keys=True)

