"""Piecewise-constant volatility regimes and Monte Carlo checks on them.

A :class:`RegimeModel` produces ``len(sigmas)`` consecutive groups of
``regime_len`` returns; every return in group ``j`` is an independent
``N(mu, sigmas[j]**2)`` draw.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import InvalidModel, InvalidWindows, SeriesTooShort
from .gvar import DEFAULT_ALPHA, as_alpha, run_alm_gvar
from .market_data import ReturnSeries
from .uncertainty import BlockConfig

SAMPLER = "numpy.random.Generator(PCG64).standard_normal (ziggurat)"


@dataclass(frozen=True)
class RegimeModel:
    mu: float = 0.0
    sigmas: tuple = (0.01, 0.03)
    regime_len: int = 50
    seed: int = 0
    repeat: int = 1

    def __post_init__(self):
        object.__setattr__(self, "sigmas", tuple(float(s) for s in self.sigmas))
        if not self.sigmas or any(not s > 0 for s in self.sigmas):
            raise InvalidModel("all regime volatilities must be positive")
        if self.regime_len < 1 or self.repeat < 1:
            raise InvalidModel("regime_len and repeat must be positive")

    @property
    def n_regimes(self) -> int:
        return len(self.sigmas) * self.repeat

    @property
    def length(self) -> int:
        return self.n_regimes * self.regime_len

    def sigma_path(self) -> np.ndarray:
        """Per-observation volatility, ``repeat`` cycles through ``sigmas``."""
        return np.repeat(np.tile(self.sigmas, self.repeat), self.regime_len)

    @classmethod
    def alternating(cls, sigmas, regime_len, length, mu=0.0, seed=0) -> "RegimeModel":
        """Cycle through ``sigmas`` until at least ``length`` observations exist."""
        per_cycle = len(sigmas) * regime_len
        return cls(mu, tuple(sigmas), regime_len, seed, repeat=math.ceil(length / per_cycle))


def generate_regime_series(model: RegimeModel) -> ReturnSeries:
    """Deterministic for a fixed ``model.seed``; dates are 0-based integers."""
    rng = np.random.default_rng(model.seed)
    sig = model.sigma_path()
    z = model.mu + sig * rng.standard_normal(len(sig))
    return ReturnSeries(tuple(range(len(z))), z)


def _extremal_variances(data: np.ndarray, n0: int, n1: int):
    """Row-wise min/max block variance over the last ``n0`` columns of ``data``."""
    window = data[:, -n0:]
    v = sliding_window_view(window, n1, axis=1).var(axis=2, ddof=1)
    return v.min(axis=1), v.max(axis=1)


@dataclass
class Prop41Report:
    """Monte Carlo means of the extremal variances for base and adjusted windows.

    ``diffs`` hold paired differences (adjusted minus base) with their
    standard errors; ``conforms`` checks each expected sign within
    ``margin`` standard errors.
    """

    base: tuple
    enlarged: tuple
    shrunk: tuple
    end: int
    replications: int
    margin: float
    means: dict = field(default_factory=dict)
    diffs: dict = field(default_factory=dict)
    conforms: dict = field(default_factory=dict)

    @property
    def all_conform(self) -> bool:
        return all(self.conforms.values())

    def as_dict(self) -> dict:
        return asdict(self) | {"all_conform": self.all_conform, "sampler": SAMPLER}


def prop41_experiment(
    model: RegimeModel,
    cfg: BlockConfig,
    steps: tuple = (1, 1),
    replications: int = 10_000,
    end: int | None = None,
    margin: float = 3.0,
) -> Prop41Report:
    """Check how the extremal variances move when the windows are adjusted.

    Enlarging to ``(n0 + w0, n1 - w1)`` should not raise the expected lower
    variance nor lower the expected upper variance; shrinking to
    ``(n0 - w0, n1 + w1)`` should do the reverse. All three window pairs end
    at observation ``end`` (default: last index) and share each replication's
    data, so the differences are paired.
    """
    w0, w1 = steps
    if replications < 1000:
        raise InvalidWindows("need at least 1000 replications")
    try:
        enlarged = BlockConfig(cfg.n0 + w0, cfg.n1 - w1)
        shrunk = BlockConfig(cfg.n0 - w0, cfg.n1 + w1)
    except Exception as exc:
        raise InvalidWindows(f"adjusted windows illegal: {exc}") from None
    sig = model.sigma_path()
    if end is None:
        end = len(sig) - 1
    longest = enlarged.n0
    if not longest - 1 <= end < len(sig):
        raise InvalidWindows(f"end={end} leaves fewer than {longest} observations")
    rng = np.random.default_rng(model.seed)
    seg = sig[end - longest + 1:end + 1]
    data = model.mu + seg * rng.standard_normal((replications, longest))

    samples = {
        "base": _extremal_variances(data, cfg.n0, cfg.n1),
        "enlarged": _extremal_variances(data, enlarged.n0, enlarged.n1),
        "shrunk": _extremal_variances(data, shrunk.n0, shrunk.n1),
    }
    rep = Prop41Report(
        base=(cfg.n0, cfg.n1), enlarged=(enlarged.n0, enlarged.n1), shrunk=(shrunk.n0, shrunk.n1),
        end=end, replications=replications, margin=margin,
    )
    for name, (lo, hi) in samples.items():
        rep.means[name] = {"lower_var": float(lo.mean()), "upper_var": float(hi.mean())}
    base_lo, base_hi = samples["base"]
    # expected sign of (adjusted - base): -1 means "should not increase"
    expected = {
        ("enlarged", "lower_var"): -1, ("enlarged", "upper_var"): +1,
        ("shrunk", "lower_var"): +1, ("shrunk", "upper_var"): -1,
    }
    for (name, which), sign in expected.items():
        adj = samples[name][0] if which == "lower_var" else samples[name][1]
        ref = base_lo if which == "lower_var" else base_hi
        d = adj - ref
        mean, se = float(d.mean()), float(d.std(ddof=1) / math.sqrt(replications))
        key = f"{name}.{which}"
        rep.diffs[key] = {"mean": mean, "se": se, "expected_sign": sign}
        rep.conforms[key] = sign * mean >= -margin * se
    return rep


@dataclass
class ConvergenceReport:
    alpha: float
    burn: int
    rates: np.ndarray
    violated: np.ndarray
    n0: np.ndarray
    n1: np.ndarray
    seed: int

    @property
    def terminal_deviation(self) -> float:
        return float(abs(self.rates[-1] - self.alpha))

    @property
    def max_deviation_after_burn(self) -> float:
        """Largest ``|rate - alpha|`` over scored observations ``t >= burn`` (t is 1-based)."""
        tail = self.rates[self.burn - 1:]
        return float(np.max(np.abs(tail - self.alpha))) if tail.size else float("nan")

    def summary(self) -> dict:
        return {
            "alpha": self.alpha,
            "burn": self.burn,
            "seed": self.seed,
            "scored": int(len(self.rates)),
            "violations": int(self.violated.sum()),
            "terminal_rate": float(self.rates[-1]),
            "terminal_deviation": self.terminal_deviation,
            "max_deviation_after_burn": self.max_deviation_after_burn,
            "sampler": SAMPLER,
        }


def convergence_experiment(
    model: RegimeModel,
    alpha=DEFAULT_ALPHA,
    init: BlockConfig = BlockConfig(20, 8),
    steps: tuple = (1, 1),
    burn: int = 2000,
) -> tuple[ConvergenceReport, list]:
    """Run the adaptive G-VaR loop on a simulated series.

    Returns the report and the full trace (same record type the loop emits).
    """
    if model.length < 2000:
        raise SeriesTooShort("convergence runs need at least 2000 observations")
    returns = generate_regime_series(model)
    _, state = run_alm_gvar(returns, alpha, init, steps)
    trace = state.trace
    violated = np.fromiter((r.violated for r in trace), dtype=bool, count=len(trace))
    t = np.arange(1, len(trace) + 1)
    rates = np.cumsum(violated) / t
    report = ConvergenceReport(
        alpha=float(as_alpha(alpha)), burn=burn, rates=rates, violated=violated,
        n0=np.array([r.n0 for r in trace]), n1=np.array([r.n1 for r in trace]), seed=model.seed,
    )
    return report, trace


def summary_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True)
