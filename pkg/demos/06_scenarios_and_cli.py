# %% [markdown]
# # Scenarios, timelines and the command line
#
# Runs are described by YAML scenarios.  Two ship with the package; any field can
# be overridden by dotted path.  The same scenarios drive the ``afcmem`` command.

# %%
import tempfile
from pathlib import Path

from afcmem import cli
from afcmem.scenario import load_scenario, with_override
from afcmem.timeline import build_timeline

sc = load_scenario("timebin_qubits")
print(sc.dump())
print(with_override(sc, "timebin.weight_a", 1.0).timebin.weight_a)

# %% [markdown]
# The measurement cycle for the double comb:

# %%
for row in build_timeline("double_afc").rows():
    print(f"{row['phase']:>16}: {row['repetitions']:>5} x {row['unit_ms']:g} ms = {row['duration_ms']:g} ms")

# %% [markdown]
# The bound and timeline commands write their tables to an output directory.

# %%
out = Path(tempfile.mkdtemp())
cli.main(["bound", "--mu", "0.2,0.8,3.2", "--eta", "0.069", "--out", str(out)])
print((out / "bound.csv").read_text())
