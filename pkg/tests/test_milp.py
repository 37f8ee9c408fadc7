import re

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from frozen import ORACLE
from xhaulopt.feasibility import Mode, check, evaluate
from xhaulopt.fixtures import scenario_doc, tiny_fixtures
from xhaulopt.milp import (
    HighsBackend,
    MilpInfeasible,
    ModelTooLarge,
    OracleBackend,
    Sense,
    build,
    export,
    parse,
    solve,
    worst_case_energy,
)
from xhaulopt.milp.export import row_multiset
from support import interval as _interval
from xhaulopt.scenario_io import load_scenario

MODEL_TAGS = ({f"vnf_{i}" for i in range(1, 12)} | {f"rot_{i:02d}" for i in range(1, 12)}
              | {f"link_{i}" for i in range(1, 5)} | {f"comp_{i}" for i in range(1, 6)}
              | {f"lat_{i:02d}" for i in range(1, 22)} | {"enr_2", "pl-2", "pl-3", "pl-4"}
              | {f"l-{i}" for i in range(1, 5)} | {"plumbing"})


@pytest.fixture(scope="module")
def models(scenarios):
    return {name: build(s, Mode.ENERGY) for name, s in scenarios.items()}


def test_single_pair_has_one_vc_row():
    doc = scenario_doc("tiny", [{"id": 0, "kind": "Core"}, {"id": 1, "kind": "CellSitePP", "cpus": 1}],
                       [(0, 1, 25, 1.0)], [(1, "nr20", 100.0)], shares={"URLLC": 1.0})
    m = build(load_scenario(doc), Mode.ENERGY)
    rows = m.rows_tagged("vnf_1")
    assert len(rows) == 1
    assert rows[0].sense is Sense.EQ and rows[0].rhs == 1
    assert sorted(m.variables[k].name for k in rows[0].expr.terms) == [f"VC_g0_URLLC_k{k}" for k in range(1, 6)]


def test_vnf1_count_is_pairs(models, scenarios):
    for name, m in models.items():
        assert len(m.rows_tagged("vnf_1")) == len(scenarios[name].pairs)


def test_every_tag_is_a_known_family(models):
    for m in models.values():
        assert set(m.tag_counts()) <= MODEL_TAGS
    counts = models["tree-2gnb"].tag_counts()  # has switches and shared edges
    for fam in ("vnf_1", "rot_01", "link_4", "comp_2", "lat_11", "lat_19", "enr_2", "l-1", "pl-4"):
        assert counts.get(fam, 0) > 0


def test_product_rows_exist_for_every_product(models):
    for m in models.values():
        names = {r.name: r for r in m.constraints}
        for p in m.metadata["products"]:
            zn = m.variables[p.z].name
            x, y, z = p.x, p.y, p.z
            r2, r3, r4 = (names[f"{p.family}.pl-{i}.{zn}"] for i in (2, 3, 4))
            assert (r2.expr.terms, r2.sense, r2.rhs) == ({z: 1.0, x: -1.0}, Sense.LE, 0.0)
            assert (r3.expr.terms, r3.sense, r3.rhs) == ({z: 1.0, y: -1.0}, Sense.LE, 0.0)
            assert (r4.expr.terms, r4.sense, r4.rhs) == ({z: 1.0, x: -1.0, y: -1.0}, Sense.GE, -1.0)


def test_products_force_z_equal_xy_on_all_corners(models):
    checked = 0
    for m in models.values():
        by_z = {}
        for r in m.constraints:
            if r.tag in ("pl-2", "pl-3", "pl-4"):
                by_z.setdefault(r.name.split(".pl-")[1][2:], []).append(r)
        for p in m.metadata["products"]:
            rows = by_z[m.variables[p.z].name]
            assert len(rows) == 3
            for xv in (0.0, 1.0):
                for yv in (0.0, 1.0):
                    x = np.zeros(m.n_vars)
                    x[p.x], x[p.y] = xv, yv
                    lo, hi = _interval(m, p.z, x, rows)
                    assert lo == hi == xv * yv
                    checked += 1
    assert checked > 100


def test_big_m_forces_eps_equal_n_q(models):
    rng = np.random.default_rng(20240601)
    draws = 0
    for name, m in models.items():
        rows = {}
        for r in m.constraints:
            if r.tag.startswith("l-"):
                rows.setdefault(r.name.split(".", 1)[1], []).append(r)
        assert m.metadata["big_m"] == pytest.approx(worst_case_energy(m.metadata["scenario"]))
        for b in m.metadata["bigm"]:
            group = rows[m.variables[b.eps].name]
            assert sorted(r.tag for r in group) == ["l-1", "l-2", "l-3", "l-4"]
            for _ in range(1000 // len(m.metadata["bigm"]) + 1):
                x = np.zeros(m.n_vars)
                n = float(rng.integers(0, 2))
                x[b.n] = n
                for k in b.q.terms:
                    v = m.variables[k]
                    ub = v.ub if np.isfinite(v.ub) else m.metadata["scenario"].topology.node(b.node).capacity_gops
                    x[k] = rng.uniform(v.lb, ub)
                q = b.q.value(x)
                assert 0.0 <= q <= b.m
                lo, hi = _interval(m, b.eps, x, group)
                assert lo == pytest.approx(n * q, abs=1e-9) and hi == pytest.approx(n * q, abs=1e-9)
                draws += 1
    assert draws >= 1000


def test_zero_demand_link_rows_have_zero_load_coefficients(scenarios):
    m = build(scenarios["zero-demand"], Mode.ENERGY)
    rows = m.rows_tagged("link_1")
    assert rows
    for r in rows:
        for k, c in r.expr.terms.items():
            if not m.variables[k].name.startswith("L_FH_e"):
                assert c == 0.0
    text = export(m, "lp")
    assert all(r.name.startswith("link_1") for r in parse(text, "lp").rows if r.tag == "link_1")


@pytest.mark.parametrize("fmt", ["lp", "mps"])
@pytest.mark.parametrize("name", ["tree-2gnb", "ring-k2", "zero-demand"])
@pytest.mark.parametrize("mode", list(Mode))
def test_export_round_trip(scenarios, name, fmt, mode):
    m = build(scenarios[name], mode)
    parsed = parse(export(m, fmt), fmt)
    assert parsed.row_multiset() == row_multiset(m)
    names = [v.name for v in m.variables]
    assert parsed.objective == {names[k]: c for k, c in m.objective.terms.items() if c != 0.0}
    assert parsed.objective_constant == m.objective.constant
    assert parsed.binaries == {v.name for v in m.variables if v.kind.value == "binary"}
    for v in m.variables:
        if v.name not in parsed.binaries:
            assert parsed.bounds[v.name] == (v.lb, v.ub)


def test_variable_names_encode_entities(models):
    m = models["tree-2gnb"]
    assert m.has_var("VC_g1_eMBB_k3")
    assert m.has_var("CU_g0_URLLC_k4_v1")
    assert all(re.fullmatch(r"[A-Za-z][\w.~-]*", v.name) for v in m.variables)


def test_model_size_is_deterministic(scenarios):
    a, b = build(scenarios["ring-k3"], Mode.ENERGY), build(scenarios["ring-k3"], Mode.ENERGY)
    assert (a.n_vars, a.n_rows, a.tag_counts()) == (b.n_vars, b.n_rows, b.tag_counts())
    assert row_multiset(a) == row_multiset(b)


def test_variable_budget(scenarios):
    with pytest.raises(ModelTooLarge):
        build(scenarios["tree-2gnb"], Mode.ENERGY, max_vars=50)


def test_infeasible_fixture(infeasible):
    with pytest.raises(MilpInfeasible):
        solve(build(infeasible, Mode.ENERGY))


@pytest.mark.parametrize("name", ["hand-3node", "tree-2gnb", "dual-core-k2", "line-nr100-half"])
def test_decoded_solution_is_feasible_and_objective_matches(scenarios, name):
    scen = scenarios[name]
    res = solve(build(scen, Mode.ENERGY))
    assert res.optimal
    assert check(res.solution, scen).ok
    assert evaluate(res.solution, scen).energy_wh_total == pytest.approx(res.stats["model_energy"], rel=1e-6)
    assert res.energy_wh == pytest.approx(ORACLE[name]["EnergyMin"][0], rel=1e-6)
    assert res.stats["max_row_violation"] < 1e-6


@pytest.mark.parametrize("name", ["line-nr100-half", "ring-k2", "dual-core-k2"])
def test_lexicographic_keeps_energy_and_lowers_fh(scenarios, name):
    scen = scenarios[name]
    lex = solve(build(scen, Mode.LEXICOGRAPHIC))
    energy, fh, _ = ORACLE[name]["Lexicographic"]
    assert lex.energy_wh == pytest.approx(energy, rel=1e-6)
    assert lex.sum_fh_us <= fh + 1e-6
    assert lex.stats["f1_star"] == pytest.approx(ORACLE[name]["EnergyMin"][0], rel=1e-6)


def test_cross_backend_agreement(scenarios):
    pytest.importorskip("cvxopt")
    from xhaulopt.milp import GlpkBackend

    for name in ("tree-2gnb", "ring-k2", "line-nr100-half"):
        m = build(scenarios[name], Mode.ENERGY)
        a = solve(m, HighsBackend())
        b = solve(m, GlpkBackend())
        assert a.objective == pytest.approx(b.objective, rel=1e-6)


def test_exported_model_solved_after_reimport(scenarios):
    """Parse the LP text back into a model and solve that copy."""
    from xhaulopt.milp.model import LinExpr, MilpModel, VarKind

    m = build(scenarios["ring-k2"], Mode.ENERGY)
    parsed = parse(export(m, "mps"), "mps")
    copy = MilpModel(name="reimport", mode=m.mode)
    ids = {}
    for v in m.variables:
        lb, ub = (0.0, 1.0) if v.name in parsed.binaries else parsed.bounds[v.name]
        ids[v.name] = copy.add_var(v.name, VarKind.BINARY if v.name in parsed.binaries else VarKind.CONTINUOUS,
                                   lb, ub).id
    for r in parsed.rows:
        copy.add_row(LinExpr({ids[n]: c for n, c in r.expr.terms.items()}), r.sense, r.rhs, r.tag, r.name)
    copy.objective = LinExpr({ids[n]: c for n, c in parsed.objective.items()}, parsed.objective_constant)
    res = HighsBackend().optimize(copy)
    assert res.status == "optimal"
    assert res.objective + parsed.objective_constant == pytest.approx(ORACLE["ring-k2"]["EnergyMin"][0], rel=1e-6)


def test_oracle_backend_degenerate_solver(scenarios):
    for mode in Mode:
        res = solve(build(scenarios["tree-cross-k2"], mode), OracleBackend())
        assert res.energy_wh == pytest.approx(ORACLE["tree-cross-k2"][mode.value][0], rel=1e-6)
