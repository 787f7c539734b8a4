# %% [markdown]
# # Preparing the inhomogeneous line
#
# Before a comb is carved, optical pumping moves population between the
# hyperfine levels so that more ions absorb at the frequency where the comb
# will sit.  Here we run the default pumping sequence (a chirped pump repeated
# 1500 times) and look at what it does to the absorption profile.

# %%
import numpy as np

from afcmem.spectral import default_initialization, optical_depth_at

res = default_initialization()
f = res.before.frequencies

# %% [markdown]
# The optical depth at the preparation frequency, before and after:

# %%
d_before = optical_depth_at(res.before, res.prep_frequency)
d_after = optical_depth_at(res.after, res.prep_frequency)
print(f"prep frequency {res.prep_frequency / 1e6:+.0f} MHz")
print(f"depth before {d_before:.3f}, after {d_after:.3f}  (x{res.enhancement:.2f})")
print(f"population drift {res.population_drift:.1e}")

# %% [markdown]
# A coarse text rendering of the two spectra, every 200 MHz:

# %%
for fi in np.arange(-2.4e9, 1.6e9, 200e6):
    a = optical_depth_at(res.before, fi)
    b = optical_depth_at(res.after, fi)
    print(f"{fi / 1e6:+7.0f} MHz  {a:6.3f} -> {b:6.3f}  " + "#" * int(20 * b / max(d_after, 1e-12)))
