# %% [markdown]
# # Simulating the output light
#
# The memory is treated as a linear medium: the input field is propagated
# through the comb's optical depth, with the Stark phases applied to the two
# subclasses.  The output contains the transmitted pulse and the echo train.

# %%
import numpy as np

from afcmem.comb import CombParams, analytic_efficiency, calibrate_depth, carve_comb
from afcmem.echo import comb_frequency_grid, echo_efficiency, echo_window, simulate_trace
from afcmem.pulses import InputPulse, TimeGrid
from afcmem.stark import design_retrieval_schedule

delta, finesse, d0 = 15.4e6, 8.5556, 0.2
d = calibrate_depth(0.109, 1 / delta, delta / finesse, finesse, d0)
comb = CombParams(delta, finesse, 100e6, d, d0)
tg = TimeGrid.spanning(-60e-9, 500e-9, 1e-9)
spec = carve_comb(comb, comb_frequency_grid(comb, tg))
pulse = InputPulse(0.0, 15e-9)

# %% [markdown]
# Without control pulses every echo is emitted; the first one matches the
# closed-form efficiency.

# %%
free = simulate_trace(spec, pulse, None, tg)
for n in range(1, 5):
    print(f"echo {n}: {echo_efficiency(free, echo_window(n, delta)):.4f}")
print("closed form, first echo:", round(analytic_efficiency(d, finesse, d0, comb.gamma, 1 / delta), 4))

# %% [markdown]
# With the two-pulse schedule, readout is moved to any later echo.

# %%
for target in (2, 3, 4, 5):
    tr = simulate_trace(spec, pulse, design_retrieval_schedule(delta, target), tg)
    effs = [echo_efficiency(tr, echo_window(n, delta)) for n in range(1, 7)]
    print(f"target {target}: " + "  ".join(f"{e:.1e}" for e in effs))
