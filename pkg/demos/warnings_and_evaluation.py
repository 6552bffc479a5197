# %% [markdown]
# From indicators to warnings, and scoring them
#
# Run ``python demos/make_sample_data.py`` first.

# %%
from pathlib import Path

from almgvar import (
    backtest,
    corroborate,
    evaluate_signals,
    get_preset,
    gvar_signals,
    label_events,
    log_returns,
    mean_signals,
    read_price_csv,
    rolling_uncertainty,
    run_alm_gvar,
    volatility_signals,
)

prices = read_price_csv(Path(__file__).parent / "data" / "sample_index.csv")
returns = log_returns(prices)  # two-day returns sampled every two days
preset = get_preset("sp500")
print(preset.as_dict())

# %%
unc = rolling_uncertainty(returns, preset.block)
g, state = run_alm_gvar(returns, "1/20", preset.block)
msig = mean_signals(unc, preset.thresholds)
vsig = volatility_signals(unc, preset.thresholds)
gsig = gvar_signals(g, preset.thresholds)
print(len(msig), "mean,", len(vsig), "volatility,", len(gsig), "G-VaR signals")

# %% [markdown]
# A crisis date needs a tier-3 G-VaR signal backed by a recent mean or
# volatility signal.

# %%
crises = [c for c in corroborate(msig, vsig, gsig) if c.crisis_flag]
print(len(crises), "crisis dates, first few:")
for c in crises[:4]:
    print(" ", c.date, [i.value for i in c.indicators])

# %% [markdown]
# Abnormal fluctuations are two-day returns below -5%. A warning counts as a
# hit when such an event lands on its date or the next one.

# %%
labels = label_events(returns)
print(labels.count, "abnormal events")
for name, sigs in (("mean", msig), ("volatility", vsig), ("gvar", gsig)):
    r = evaluate_signals(sigs, labels, horizon=1)
    print(f"{name:10s} precision={r.precision} miss={r.miss} f1={r.f1}")

# %%
bt = backtest([rec.violated for rec in state.trace], "1/20")
print(f"violations {bt.fact_viol} vs expected {bt.theo_viol:.1f}; "
      f"Kupiec p={bt.lr_uc_p:.3f}, independence p={bt.lr_ind_p}")
