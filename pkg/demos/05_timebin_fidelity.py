# %% [markdown]
# # Time-bin qubits and the classical benchmark
#
# Basis states |e> and |l> are stored in a 160 ns comb and read at 320 ns.
# Superpositions go through two superimposed combs (160 and 180 ns), which act
# as an unbalanced interferometer; shifting one comb by delta_f sets its phase.
# Photon counting is simulated with weak coherent inputs and a flat noise
# probability per 20 ns window.

# %%
from afcmem.bench import DetectionModel, classical_bound, default_timebin_setup, fidelity_vs_mu_sweep

setup = default_timebin_setup()
det = DetectionModel(noise_prob_per_window=2.4e-4, trials=50000, rng_seed=7)
table = fidelity_vs_mu_sweep([0.2, 0.4, 0.8, 1.6, 3.2], setup, det)
print(table.to_text())

# %% [markdown]
# The bound is what a measure-and-prepare device could reach with the same
# efficiency.  It grows with mu because more photons reveal more about the state.

# %%
for mu in (0.2, 0.8, 3.2):
    print(f"mu = {mu}: bound {classical_bound(mu, 0.069):.4f}")
