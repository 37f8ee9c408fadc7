# %% [markdown]
# # Three solvers on a small ring
#
# A two-gNB ring with two candidate paths per node pair. We solve hour 0
# with the exact MILP, the exhaustive oracle and the greedy heuristic, then
# look at what each one chose.

# %%
from xhaulopt import check, evaluate, load_scenario
from xhaulopt.feasibility import Mode
from xhaulopt.fixtures import tiny_fixtures
from xhaulopt.heuristic import HeuristicParams, run
from xhaulopt.milp import build, solve
from xhaulopt.oracle import enumerate_optimum

scen = load_scenario(tiny_fixtures()["ring-k2"])
print(scen.name, len(scen.topology.nodes), "nodes,", len(scen.pairs), "slice instances")

# %% [markdown]
# The MILP in each objective mode. Energy is in Wh for the hour and the
# fronthaul sum is in microseconds.

# %%
for mode in Mode:
    model = build(scen, mode)
    res = solve(model)
    print(f"{mode.value:14s} {model.n_vars:4d} vars {model.n_rows:5d} rows  "
          f"E={res.report.energy_wh_total:9.3f}  sumFH={res.report.sum_fh_latency_us:7.3f}")

# %% [markdown]
# The oracle walks every feasible configuration, so it doubles as a check
# on the MILP.

# %%
orc = enumerate_optimum(scen, Mode.ENERGY)
print(f"oracle: E={orc.energy_wh:.3f} over {orc.feasible_count} feasible configurations")

# %%
heu = run(scen, HeuristicParams())
print(f"heuristic: E={heu.energy_wh:.3f} (after construction {heu.construction_energy_wh:.3f})")
assert check(heu.solution, scen).ok
lat = evaluate(heu.solution, scen)
for a in heu.solution.assignments:
    print(f"  gNB {a.gnb} {a.slice.value:5s} {a.vc.name}  CU@{a.cu_node} DU@{a.du_node}  "
          f"FH {lat.fh_latency_us(a.pair):.2f} us")
