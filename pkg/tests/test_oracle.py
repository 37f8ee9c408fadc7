import pytest
from hypothesis import given, strategies as st

from conftest import FIXTURE_NAMES
from frozen import ORACLE
from xhaulopt.feasibility import Mode, Solution, check, evaluate
from xhaulopt.oracle import BudgetExceeded, NoFeasible, enumerate_optimum, search_space, space_size
from xhaulopt.vc_catalog import VC

FAST = [n for n in FIXTURE_NAMES if n not in ("dual-core-k2", "ring-k3")]


@pytest.fixture(scope="module")
def energy_optima(scenarios):
    return {n: enumerate_optimum(scenarios[n], Mode.ENERGY) for n in FIXTURE_NAMES}


def test_hand_count(scenarios):
    scen = scenarios["hand-3node"]
    assert space_size(scen) == 3
    vcs = sorted(a.vc for opts in search_space(scen) for a in opts)
    assert vcs == [VC.VC3, VC.VC4, VC.VC5]
    res = enumerate_optimum(scen, Mode.ENERGY)
    assert res.feasible_count == 3
    assert res.energy_wh == pytest.approx(3 * 52.4 + 98 * 290.6 / 864, rel=1e-12)


@pytest.mark.parametrize("name", FIXTURE_NAMES)
def test_frozen_energy_optimum_and_fingerprint(scenarios, energy_optima, name):
    res = energy_optima[name]
    energy, fh, count = ORACLE[name]["EnergyMin"]
    assert res.energy_wh == pytest.approx(energy, rel=1e-9)
    assert res.feasible_count == count
    assert check(res.solution, scenarios[name]).ok


@pytest.mark.parametrize("name", FAST)
@pytest.mark.parametrize("mode", [Mode.FH_LATENCY, Mode.LEXICOGRAPHIC])
def test_frozen_other_modes(scenarios, name, mode):
    res = enumerate_optimum(scenarios[name], mode)
    energy, fh, count = ORACLE[name][mode.value]
    assert res.sum_fh_us == pytest.approx(fh, rel=1e-9, abs=1e-9)
    if mode is Mode.LEXICOGRAPHIC:
        assert res.value == (pytest.approx(energy, rel=1e-9), pytest.approx(fh, rel=1e-9, abs=1e-9))
        assert res.energy_wh == pytest.approx(ORACLE[name]["EnergyMin"][0], rel=1e-9)


def test_no_feasible(infeasible):
    with pytest.raises(NoFeasible):
        enumerate_optimum(infeasible, Mode.ENERGY)


def test_budget(scenarios):
    with pytest.raises(BudgetExceeded):
        enumerate_optimum(scenarios["ring-k3"], Mode.ENERGY, budget=100)


def test_count_is_deterministic(scenarios):
    a = enumerate_optimum(scenarios["tree-2gnb"], Mode.ENERGY)
    b = enumerate_optimum(scenarios["tree-2gnb"], Mode.ENERGY)
    assert (a.feasible_count, a.visited, a.solution) == (b.feasible_count, b.visited, b.solution)


@st.composite
def feasible_picks(draw, scenarios_by_name):
    name = draw(st.sampled_from(FAST))
    scen = scenarios_by_name[name]
    space = search_space(scen)
    sol = Solution(tuple(opts[draw(st.integers(0, len(opts) - 1))] for opts in space))
    return name, scen, sol


def test_no_configuration_beats_the_oracle(scenarios, energy_optima):
    @given(feasible_picks(scenarios))
    def inner(case):
        name, scen, sol = case
        if not check(sol, scen).ok:
            return
        ev = evaluate(sol, scen)
        assert ev.energy_wh_total >= energy_optima[name].energy_wh * (1 - 1e-9)
        assert ev.sum_fh_latency_us >= ORACLE[name]["FhLatencyMin"][1] - 1e-9

    inner()
