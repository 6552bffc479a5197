# %% [markdown]
# Mean and volatility uncertainty
#
# A window of n0 returns is cut into overlapping blocks of n1. The smallest
# and largest block mean give the mean interval; the smallest and largest
# block variance give the volatility interval.

# %%
import numpy as np

from almgvar import (
    BlockConfig,
    ReturnSeries,
    mean_uncertainty,
    rolling_uncertainty,
    volatility_uncertainty,
)

rng = np.random.default_rng(0)
window = 0.01 * rng.standard_normal(20)

m = mean_uncertainty(window, n1=8)
v = volatility_uncertainty(window, n1=8)
print(f"mean interval  [{m.lower:+.5f}, {m.upper:+.5f}]  width {m.diff:.5f}")
print(f"vol interval   [{np.sqrt(v.lower_var):.5f}, {np.sqrt(v.upper_var):.5f}]  ratio {v.ratio:.2f}")

# %% [markdown]
# Shorter blocks spread the block statistics out, so the intervals tend to widen
# (not strictly: the extremes depend on where the blocks fall).

# %%
for n1 in (3, 5, 8, 12, 20):
    v = volatility_uncertainty(window, n1)
    print(f"n1={n1:2d}  sigma in [{np.sqrt(v.lower_var):.4f}, {np.sqrt(v.upper_var):.4f}]")

# %% [markdown]
# Rolling over a whole series: volatility jumps from 1% to 3% halfway through.

# %%
z = np.concatenate([0.01 * rng.standard_normal(100), 0.03 * rng.standard_normal(100)])
u = rolling_uncertainty(ReturnSeries(tuple(range(len(z))), z), BlockConfig(20, 8))
for k in (0, 60, 85, 100, 120, 180):
    print(f"ends at {u.index[k]:3d}  upper vol {u.upper_vol[k]:.4f}  ratio {u.vol_ratio[k]:.2f}")
