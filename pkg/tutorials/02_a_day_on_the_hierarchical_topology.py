# %% [markdown]
# # A day on the hierarchical topology
#
# Six gNBs with three slices each on the 16-node metro topology. The
# heuristic solves all 24 hours. Energy follows the traffic through the
# load-proportional pool term; with this seed the configuration mix and the
# set of active pools stay the same all day.

# %%
from collections import Counter

from xhaulopt import load_scenario
from xhaulopt.fixtures import hierarchical_scenario
from xhaulopt.heuristic import HeuristicParams, run

scen = load_scenario(hierarchical_scenario())
params = HeuristicParams()

# %%
rows = []
for hour in range(24):
    res = run(scen, params, hour)
    mix = Counter(a.vc.name for a in res.solution.assignments)
    rows.append((hour, res.energy_wh, len(res.report.active_pp), dict(sorted(mix.items()))))

for hour, e, pools, mix in rows:
    print(f"{hour:02d}h  {e:9.1f} Wh  {pools} active pools  {mix}")

# %% [markdown]
# The same run from the shell writes the five report tables:
#
#     xhaulopt solve --scenario fixture:hierarchical --hours all --solver heuristic --out out/

# %%
low, high = min(rows, key=lambda r: r[1]), max(rows, key=lambda r: r[1])
print(f"lowest at {low[0]:02d}h ({low[1]:.1f} Wh), highest at {high[0]:02d}h ({high[1]:.1f} Wh)")
