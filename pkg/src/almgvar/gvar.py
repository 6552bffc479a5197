"""Worst-case G-normal distribution, G-VaR quantile and the adaptive window loop.

Sign convention: every quantile ``q`` here is the signed left-tail quantile
of the return distribution (negative for ordinary return data) and a
violation is ``Z_s < q_s``. The loss-style G-VaR figure is ``-q``.
"""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy import special
from numpy.lib.stride_tricks import sliding_window_view

from .errors import DomainError, EmptyHistory, OutsideClosedFormWarning, SeriesTooShort
from .market_data import ReturnSeries, format_label
from .uncertainty import BlockConfig

DEFAULT_ALPHA = Fraction(1, 20)
SIGMA_FLOOR = 1e-8


def std_normal_cdf(x):
    """Standard normal cdf; accepts scalars or arrays."""
    return special.ndtr(x)


def std_normal_quantile(p):
    """Inverse standard normal cdf for ``0 < p < 1``."""
    arr = np.asarray(p, dtype=float)
    if np.any(~((arr > 0) & (arr < 1))):
        raise DomainError(f"quantile needs 0 < p < 1, got {p!r}")
    out = special.ndtri(arr)
    return float(out) if out.ndim == 0 else out


def as_alpha(alpha) -> Fraction:
    """Coerce a risk level to an exact fraction in (0, 1/2).

    Strings like ``"1/20"`` and decimal floats such as ``0.05`` are accepted;
    floats are read through their shortest decimal repr.
    """
    if isinstance(alpha, Fraction):
        a = alpha
    elif isinstance(alpha, float):
        a = Fraction(repr(alpha))
    else:
        a = Fraction(alpha)
    if not 0 < a < Fraction(1, 2):
        raise DomainError(f"risk level must lie in (0, 0.5), got {alpha}")
    return a


@dataclass(frozen=True)
class GVarParams:
    """Mean and lower/upper volatility of the G-normal law at one date."""

    mu: float
    sigma_lower: float
    sigma_upper: float

    def __post_init__(self):
        if not 0 < self.sigma_lower <= self.sigma_upper:
            raise DomainError(
                f"need 0 < sigma_lower <= sigma_upper, got {self.sigma_lower}, {self.sigma_upper}"
            )

    def check_bounds(self, lower: float, upper: float) -> None:
        if not (lower <= self.sigma_lower and self.sigma_upper <= upper):
            raise DomainError(f"volatilities outside [{lower}, {upper}]")


def worst_case_cdf(params: GVarParams, x: float) -> float:
    """``2 su / (su + sl) * Phi((x - mu) / su)``, only for ``x <= 0``."""
    if x > 0:
        raise DomainError("worst-case cdf closed form only holds for x <= 0")
    su, sl = params.sigma_upper, params.sigma_lower
    return float(2 * su / (su + sl) * std_normal_cdf((x - params.mu) / su))


def gvar_quantile(params: GVarParams, alpha) -> float:
    """Left-tail quantile ``mu + su * Phi^-1((su + sl) / (2 su) * alpha)``.

    With ``sigma_lower == sigma_upper`` this is the Gaussian VaR quantile.
    A positive result leaves the closed-form region of the worst-case cdf and
    raises :class:`OutsideClosedFormWarning`.
    """
    a = float(alpha)
    if not 0 < a < 0.5:
        raise DomainError(f"risk level must lie in (0, 0.5), got {alpha}")
    su, sl = params.sigma_upper, params.sigma_lower
    q = params.mu + su * std_normal_quantile((su + sl) / (2 * su) * a)
    if q > 0:
        warnings.warn(f"G-VaR quantile {q} > 0", OutsideClosedFormWarning, stacklevel=2)
    return q


@dataclass(frozen=True)
class TraceRecord:
    date: object
    index: int
    q: float
    mu: float
    sigma_lower: float
    sigma_upper: float
    n0: int
    n1: int
    value: float
    violated: bool
    violations: int
    t: int
    outside_closed_form: bool = False

    @property
    def running_rate(self) -> float:
        return self.violations / self.t

    @property
    def g_var(self) -> float:
        return -self.q


@dataclass
class AdaptiveGVarState:
    """Running state of the adaptive loop.

    ``t`` counts scored observations and ``violations`` the scored ones that
    fell below their quantile.
    """

    cfg: BlockConfig
    steps: tuple = (1, 1)
    alpha: Fraction = DEFAULT_ALPHA
    n0_bounds: tuple = (2, 250)
    t: int = 0
    violations: int = 0
    trace: list = field(default_factory=list)

    def __post_init__(self):
        self.alpha = as_alpha(self.alpha)
        w0, w1 = self.steps
        if w0 < 1 or w1 < 1:
            raise ValueError("window steps must be positive")
        lo, hi = self.n0_bounds
        if not 2 <= lo <= hi:
            raise ValueError(f"invalid n0 bounds {self.n0_bounds}")


def violation_rate(state: AdaptiveGVarState) -> Fraction:
    if state.t == 0:
        raise EmptyHistory("no scored observations yet")
    return Fraction(state.violations, state.t)


def adapt_windows(state: AdaptiveGVarState) -> BlockConfig:
    """Next (n0, n1) given the running violation rate.

    Too few violations shrink ``n0`` and grow ``n1`` (narrower volatility band);
    too many do the opposite. Equality, compared exactly, leaves them unchanged.
    Both increments are applied first, then ``n0`` is clamped to its bounds and
    ``n1`` to ``[2, n0]``.
    """
    n0, n1 = state.cfg.n0, state.cfg.n1
    w0, w1 = state.steps
    # rate vs alpha, cross-multiplied to stay in integers
    lhs = state.violations * state.alpha.denominator
    rhs = state.alpha.numerator * state.t
    if lhs < rhs:
        n0, n1 = n0 - w0, n1 + w1
    elif lhs > rhs:
        n0, n1 = n0 + w0, n1 - w1
    lo, hi = state.n0_bounds
    n0 = min(max(n0, lo), hi)
    n1 = min(max(n1, 2), n0)
    return BlockConfig(n0, n1)


@dataclass(frozen=True)
class GVarSeries:
    """Quantile per scored date; ``index`` locates the date in the return series."""

    dates: tuple
    index: np.ndarray
    q: np.ndarray
    mu: np.ndarray = None
    sigma_lower: np.ndarray = None
    sigma_upper: np.ndarray = None

    def __len__(self) -> int:
        return len(self.dates)

    @property
    def g_var(self) -> np.ndarray:
        return -self.q

    @classmethod
    def from_values(cls, q, dates=None) -> "GVarSeries":
        q = np.asarray(q, dtype=float)
        if dates is None:
            dates = tuple(range(len(q)))
        return cls(tuple(dates), np.arange(len(q)), q)


TRACE_COLUMNS = (
    "date", "q", "g_var", "violated", "running_rate", "n0", "n1", "mu", "sigma_lower", "sigma_upper",
)


def trace_to_csv(trace, delimiter: str = ",") -> str:
    buf = io.StringIO()
    w = csv.writer(buf, delimiter=delimiter, lineterminator="\n")
    w.writerow(TRACE_COLUMNS)
    for r in trace:
        w.writerow([
            format_label(r.date), repr(r.q), repr(-r.q), int(r.violated), repr(r.running_rate),
            r.n0, r.n1, repr(r.mu), repr(r.sigma_lower), repr(r.sigma_upper),
        ])
    return buf.getvalue()


def parse_trace_csv(text: str, delimiter: str = ","):
    """Read a trace file back as a list of dicts with typed values."""
    rows = []
    for row in csv.DictReader(io.StringIO(text), delimiter=delimiter):
        rows.append({
            "date": row["date"],
            "q": float(row["q"]),
            "g_var": float(row["g_var"]),
            "violated": bool(int(row["violated"])),
            "running_rate": float(row["running_rate"]),
            "n0": int(row["n0"]),
            "n1": int(row["n1"]),
            "mu": float(row["mu"]),
            "sigma_lower": float(row["sigma_lower"]),
            "sigma_upper": float(row["sigma_upper"]),
        })
    return rows


def run_alm_gvar(
    returns: ReturnSeries,
    alpha=DEFAULT_ALPHA,
    init: BlockConfig = BlockConfig(20, 8),
    steps: tuple = (1, 1),
    n0_bounds: tuple | None = None,
    sigma_floor: float = SIGMA_FLOOR,
    sigma_cap: float | None = None,
):
    """Adaptive-learning G-VaR over a return series.

    The quantile for ``Z_s`` is built from the ``n0`` returns strictly before
    ``s``, so the first ``init.n0`` observations are warm-up and never scored.
    After scoring ``Z_s`` the windows are adapted from the running violation
    rate and used for ``s + 1``.

    Parameters
    ----------
    returns : ReturnSeries
    alpha : Fraction, str or float
        Target risk level in (0, 0.5). Kept exact so the equality branch of
        the window rule is reachable.
    init : BlockConfig
        Starting windows.
    steps : (int, int)
        Window increments ``(w0, w1)``.
    n0_bounds : (int, int), optional
        Range for ``n0``; defaults to ``(min(4, init.n0), max(250, init.n0))``.
    sigma_floor : float
        Lower volatility is floored here so the quantile argument stays in (0, 1).
    sigma_cap : float, optional
        Upper volatility cap; none by default.

    Returns
    -------
    (GVarSeries, AdaptiveGVarState)
    """
    z = np.asarray(returns.values, dtype=float)
    if len(z) <= init.n0:
        raise SeriesTooShort(f"need more than n0={init.n0} returns, got {len(z)}")
    if n0_bounds is None:
        n0_bounds = (min(4, init.n0), max(250, init.n0))
    state = AdaptiveGVarState(cfg=init, steps=tuple(steps), alpha=alpha, n0_bounds=tuple(n0_bounds))
    a = float(state.alpha)

    T = len(z)
    qs = np.empty(T - init.n0)
    mus, sls, sus = np.empty_like(qs), np.empty_like(qs), np.empty_like(qs)
    for k, s in enumerate(range(init.n0, T)):
        n0, n1 = state.cfg.n0, state.cfg.n1
        if n0 > s:
            # large w0 can outrun the available history
            state.cfg = BlockConfig(s, min(n1, s))
            n0, n1 = state.cfg.n0, state.cfg.n1
        window = z[s - n0:s]
        mu = float(window.mean())
        bvar = sliding_window_view(window, n1).var(axis=1, ddof=1)
        sl = max(math.sqrt(float(bvar.min())), sigma_floor)
        su = max(math.sqrt(float(bvar.max())), sl)
        if sigma_cap is not None:
            su = min(su, sigma_cap)
            sl = min(sl, su)
        q = mu + su * float(special.ndtri((su + sl) / (2 * su) * a))
        violated = bool(z[s] < q)
        state.t += 1
        state.violations += violated
        state.trace.append(TraceRecord(
            date=returns.dates[s], index=s, q=q, mu=mu, sigma_lower=sl, sigma_upper=su,
            n0=n0, n1=n1, value=float(z[s]), violated=violated,
            violations=state.violations, t=state.t, outside_closed_form=q > 0,
        ))
        qs[k], mus[k], sls[k], sus[k] = q, mu, sl, su
        state.cfg = adapt_windows(state)

    index = np.arange(init.n0, T)
    series = GVarSeries(tuple(returns.dates[i] for i in index), index, qs, mus, sls, sus)
    return series, state
