# %% [markdown]
# Monte Carlo checks on regime-switching data
#
# Two things are checked here. Enlarging the windows should push the lower
# variance down and the upper variance up on average; shrinking them should do
# the opposite. And the adaptive loop should hold the violation rate near alpha.

# %%
from almgvar import BlockConfig, RegimeModel, convergence_experiment, prop41_experiment

model = RegimeModel(0.0, (0.01, 0.03), regime_len=50, seed=7)
rep = prop41_experiment(model, BlockConfig(20, 8), steps=(1, 1), replications=10_000)
for key, d in rep.diffs.items():
    print(f"{key:22s} mean diff {d['mean']:+.3e}  se {d['se']:.1e}  ok={rep.conforms[key]}")

# %%
for seed in range(5):
    m = RegimeModel.alternating((0.01, 0.03), 50, 5000, seed=seed)
    conv, _ = convergence_experiment(m, "1/20")
    s = conv.summary()
    print(f"seed {seed}: terminal rate {s['terminal_rate']:.4f}, "
          f"worst gap after t=2000 {s['max_deviation_after_burn']:.4f}")
