"""Uncertainty-based early warnings for stock-index returns.

Moving-block estimates of mean and volatility uncertainty, the
adaptive-window G-VaR quantile, threshold warning rules, and the evaluation
and backtesting tools that score them.
"""

from .errors import *  # noqa: F401,F403
from .evaluation import (
    BacktestReport,
    ConfusionCounts,
    EvaluationReport,
    backtest,
    chi2_cdf,
    chi2_sf,
    christoffersen_ind_test,
    classification_metrics,
    evaluate_signals,
    kupiec_uc_test,
    match_warnings,
)
from .gvar import (
    AdaptiveGVarState,
    GVarParams,
    GVarSeries,
    adapt_windows,
    gvar_quantile,
    run_alm_gvar,
    std_normal_cdf,
    std_normal_quantile,
    violation_rate,
    worst_case_cdf,
)
from .market_data import (
    EventLabels,
    PriceSeries,
    ReturnSeries,
    label_events,
    log_returns,
    parse_price_csv,
    read_price_csv,
)
from .signals import (
    PRESETS,
    Indicator,
    ThresholdConfig,
    WarningSignal,
    corroborate,
    get_preset,
    gvar_signals,
    mean_signals,
    volatility_signals,
)
from .synthetic import (
    RegimeModel,
    convergence_experiment,
    generate_regime_series,
    prop41_experiment,
)
from .uncertainty import (
    BlockConfig,
    MeanUncertainty,
    UncertaintySeries,
    VolatilityUncertainty,
    block_means,
    block_variances,
    mean_uncertainty,
    rolling_uncertainty,
    volatility_uncertainty,
)

__version__ = "0.1.0"
