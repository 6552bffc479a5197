# %% [markdown]
# G-VaR and its adaptive windows
#
# Under volatility uncertainty the worst-case left-tail quantile is
# mu + su * Phi^-1((su + sl) / (2 su) * alpha). With sl == su it reduces to
# the ordinary Gaussian VaR quantile.

# %%
from fractions import Fraction

import numpy as np

from almgvar import BlockConfig, GVarParams, RegimeModel, generate_regime_series, gvar_quantile, run_alm_gvar

print("classical  ", gvar_quantile(GVarParams(0.0, 0.02, 0.02), 0.05))
print("uncertain  ", gvar_quantile(GVarParams(0.0, 0.01, 0.02), 0.05))

# %% [markdown]
# The adaptive loop scores each return against a quantile built from the
# returns before it. When violations run below alpha the outer window
# shrinks and the blocks grow; when they run above, the reverse.

# %%
model = RegimeModel.alternating((0.01, 0.03), regime_len=50, length=3000, seed=1)
returns = generate_regime_series(model)
g, state = run_alm_gvar(returns, Fraction(1, 20), BlockConfig(20, 8))

rates = np.array([r.running_rate for r in state.trace])
for t in (10, 100, 500, 1000, 2000, len(rates)):
    rec = state.trace[t - 1]
    print(f"t={t:5d}  rate={rates[t - 1]:.4f}  windows=({rec.n0}, {rec.n1})")

# %% [markdown]
# The windows keep moving but the running violation rate settles near 5%.

# %%
print("final rate", state.violations / state.t, "over", state.t, "scored returns")
