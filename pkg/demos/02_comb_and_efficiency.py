# %% [markdown]
# # Carving a comb and predicting its echo
#
# A Gaussian comb is set by its tooth spacing Delta, finesse F = Delta / gamma,
# peak tooth depth d and a flat background d0.  The forward echo efficiency at
# readout time t follows a closed form in the mean depth d~ = (d / F) sqrt(pi / 4 ln 2).

# %%
import numpy as np

from afcmem.comb import CombParams, analytic_efficiency, calibrate_depth, carve_comb, fit_comb
from afcmem.spectral import FrequencyGrid

delta, gamma, d0 = 15.4e6, 1.8e6, 0.2
finesse = delta / gamma

# %% [markdown]
# Pick the depth so that the first echo (t = 1/Delta, about 65 ns) has 10.9%
# efficiency, then follow the decay over later readout times.

# %%
d = calibrate_depth(0.109, 1 / delta, gamma, finesse, d0)
comb = CombParams(delta, finesse, 100e6, d, d0)
print(f"tooth depth {d:.3f}, mean depth {comb.effective_depth:.3f}, {comb.n_teeth} teeth")
for n in range(1, 8):
    t = n / delta
    print(f"t = {t * 1e9:6.1f} ns  eta = {analytic_efficiency(d, finesse, d0, gamma, t):.4f}")

# %% [markdown]
# The carved spectrum can be fitted back; with 1% noise the comb parameters
# come out close to the ones that made it.

# %%
grid = FrequencyGrid.spanning(-70e6, 70e6, gamma / 12)
spec = carve_comb(comb, grid)
rng = np.random.default_rng(1)
noisy = type(spec)(spec.grid, spec.optical_depth + 0.01 * d * rng.standard_normal(grid.count), d0)
fit = fit_comb(noisy)
print(fit)
